#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <set>

#include "irt/coreset.hpp"
#include "irt/error.hpp"
#include "irt/sampling.hpp"
#include "oracles.hpp"

using namespace irt;

namespace {

std::vector<double> random_scores(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> s(n);
  for (auto& v : s) v = 0.01 + ex(gen);
  return s;
}

}  // namespace

TEST_CASE("equal scores give weights n/k") {
  std::vector<double> s(40, 2.0);
  WeightedCoreset a = sample_weighted(s, 10, 1);
  std::size_t draws = 0;
  for (std::size_t t = 0; t < a.indices.size(); ++t) {
    CHECK(a.u[t] / a.multiplicity[t] == doctest::Approx(4.0));
    draws += a.multiplicity[t];
  }
  CHECK(draws == 10);
  CHECK(a.k == 10);
  WeightedCoreset c = sample_weighted(s, 10, 1, SamplingMethod::ChaoReservoir);
  CHECK(c.indices.size() == 10);
  for (double u : c.u) CHECK(u == doctest::Approx(4.0));
}

TEST_CASE("weighting identity for i.i.d. sampling") {
  auto s = random_scores(500, 2);
  WeightedCoreset c = sample_weighted(s, 60, 9);
  double total = 0;
  for (double v : s) total += v;
  double acc = 0;
  for (std::size_t t = 0; t < c.indices.size(); ++t) acc += c.u[t] * s[c.indices[t]] / total;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.total_score == doctest::Approx(total).epsilon(1e-14));
  // Indices are distinct and sorted.
  for (std::size_t t = 1; t < c.indices.size(); ++t) CHECK(c.indices[t] > c.indices[t - 1]);
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
  auto s = random_scores(300, 3);
  for (SamplingMethod m : {SamplingMethod::IIDAlias, SamplingMethod::ChaoReservoir}) {
    setenv("IRT_THREADS", "1", 1);
    WeightedCoreset a = sample_weighted(s, 25, 77, m);
    setenv("IRT_THREADS", "3", 1);
    WeightedCoreset b = sample_weighted(s, 25, 77, m);
    unsetenv("IRT_THREADS");
    CHECK(a.indices == b.indices);
    CHECK(a.u == b.u);
    WeightedCoreset c = sample_weighted(s, 25, 78, m);
    CHECK(a.indices != c.indices);
  }
}

TEST_CASE("argument errors") {
  std::vector<double> s{1, 2, 3};
  CHECK_THROWS_AS(sample_weighted(s, 0, 1), Error);
  std::vector<double> z{0, 0};
  CHECK_THROWS_AS(sample_weighted(z, 1, 1), Error);
  std::vector<double> neg{1, -1};
  CHECK_THROWS_AS(sample_weighted(neg, 1, 1), Error);
  std::vector<double> nan{1, std::nan("")};
  CHECK_THROWS_AS(sample_weighted(nan, 1, 1, SamplingMethod::ChaoReservoir), Error);
}

TEST_CASE("alias draws follow the score distribution") {
  std::vector<double> s{1, 2, 3, 4, 10};
  const std::size_t k = 200000;
  WeightedCoreset c = sample_weighted(s, k, 5);
  double chi2 = 0;
  std::vector<std::size_t> counts(s.size(), 0);
  for (std::size_t t = 0; t < c.indices.size(); ++t) counts[c.indices[t]] = c.multiplicity[t];
  for (std::size_t i = 0; i < s.size(); ++i) {
    double expect = k * s[i] / 20.0;
    chi2 += (counts[i] - expect) * (counts[i] - expect) / expect;
  }
  // 4 degrees of freedom; the 0.999 quantile is 18.47.
  CHECK(chi2 < 18.47);
}

TEST_CASE("chao inclusion frequencies match the capped probabilities") {
  std::vector<double> s{50, 1, 1, 2, 2, 3, 5, 8, 0.5, 0.5, 4, 6};
  const std::size_t k = 4;
  auto pi = chao_inclusion_probabilities(s, k);
  double sum_pi = 0;
  for (double p : pi) sum_pi += p;
  CHECK(sum_pi == doctest::Approx(static_cast<double>(k)));
  CHECK(pi[0] == 1.0);

  const int reps = 20000;
  std::vector<int> hits(s.size(), 0);
  for (int r = 0; r < reps; ++r) {
    WeightedCoreset c = sample_weighted(s, k, 1000 + r, SamplingMethod::ChaoReservoir);
    REQUIRE(c.indices.size() == k);
    std::set<std::size_t> uniq(c.indices.begin(), c.indices.end());
    REQUIRE(uniq.size() == k);
    for (std::size_t t = 0; t < c.indices.size(); ++t) {
      ++hits[c.indices[t]];
      CHECK(c.u[t] == doctest::Approx(1.0 / pi[c.indices[t]]).epsilon(1e-12));
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    double f = static_cast<double>(hits[i]) / reps;
    double sd = std::sqrt(pi[i] * (1 - pi[i]) / reps);
    CHECK(std::abs(f - pi[i]) <= 4 * sd + 1e-12);
  }
}

TEST_CASE("chao with k at least n keeps everything") {
  std::vector<double> s{1, 5, 2};
  WeightedCoreset c = sample_weighted(s, 3, 1, SamplingMethod::ChaoReservoir);
  CHECK(c.indices.size() == 3);
  for (double u : c.u) CHECK(u == doctest::Approx(1.0));
}

TEST_CASE("weighted conditional objective is unbiased at a fixed eta") {
  const std::size_t n = 2000, k = 50;
  std::vector<double> theta;
  SignedDesign full = oracle::simulated_item_design(n, 2.0, 0.2, 11, &theta);
  std::vector<double> scores = scores_2pl(theta);
  const Vec2 eta{1.7, 0.4};
  const double target = conditional_nll(full, eta);
  for (SamplingMethod m : {SamplingMethod::IIDAlias, SamplingMethod::ChaoReservoir}) {
    const int reps = 1000;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < reps; ++r) {
      WeightedCoreset c = sample_weighted(scores, k, 5000 + r, m);
      double v = conditional_nll(oracle::restrict(full, c), eta);
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / reps;
    double sd = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - target) <= 3 * sd);
  }
}
