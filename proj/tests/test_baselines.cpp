#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "irt/baselines.hpp"
#include "irt/coreset.hpp"
#include "irt/error.hpp"
#include "oracles.hpp"

using namespace irt;

namespace {

double identity_sum(const WeightedCoreset& c) {
  double acc = 0;
  for (std::size_t t = 0; t < c.indices.size(); ++t) acc += c.u[t] * c.scores[c.indices[t]] / c.total_score;
  return acc;
}

}  // namespace

TEST_CASE("baseline names") {
  for (auto k : {BaselineKind::Uniform, BaselineKind::DistanceSampling, BaselineKind::L1Leverage, BaselineKind::LewisL1})
    CHECK(parse_baseline_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_baseline_kind("kmeans"), Error);
}

TEST_CASE("uniform coreset") {
  WeightedCoreset c = uniform_coreset(50, 50, 3);
  for (std::size_t t = 0; t < c.indices.size(); ++t) CHECK(c.u[t] / c.multiplicity[t] == doctest::Approx(1.0));
  WeightedCoreset d = uniform_coreset(1000, 40, 3);
  for (std::size_t t = 0; t < d.indices.size(); ++t) CHECK(d.u[t] / d.multiplicity[t] == doctest::Approx(25.0));
  CHECK(uniform_coreset(1000, 40, 3).indices == d.indices);
  CHECK(identity_sum(d) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(uniform_coreset(10, 0, 1), Error);
  CHECK_THROWS_AS(uniform_coreset(10, 11, 1), Error);
}

TEST_CASE("distance sampling") {
  SUBCASE("identical points reduce to uniform") {
    std::vector<Vec2> pts(100, Vec2{0.3, -1});
    WeightedCoreset c = distance_sampling_coreset(pts, 20, 5, 1);
    for (std::size_t t = 0; t < c.indices.size(); ++t) CHECK(c.u[t] / c.multiplicity[t] == doctest::Approx(5.0));
  }
  SUBCASE("points on centers keep the floor") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    std::vector<Vec2> pts(200);
    for (auto& p : pts) p = {nd(gen), -1};
    auto centers = kmeanspp_centers(pts, 25, 9);
    CHECK(centers.size() == 25);
    WeightedCoreset c = distance_sampling_coreset(pts, 30, 25, 9);
    for (std::size_t j = 0; j < pts.size(); ++j) CHECK(c.scores[j] >= 1.0 / 200);
    CHECK(identity_sum(c) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("far outlier is favoured") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd(0, 0.05);
    std::vector<Vec2> pts;
    for (int i = 0; i < 500; ++i) pts.push_back({nd(gen), nd(gen)});
    for (int i = 0; i < 500; ++i) pts.push_back({10 + nd(gen), nd(gen)});
    pts.push_back({3, 0});
    WeightedCoreset c = distance_sampling_coreset(pts, 50, 2, 5);
    double inlier = 0;
    for (std::size_t j = 0; j < 1000; ++j) inlier = std::max(inlier, c.scores[j]);
    CHECK(c.scores[1000] >= 10 * inlier);
  }
  SUBCASE("deterministic") {
    std::vector<Vec2> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({std::sin(i * 0.7), -1});
    CHECK(distance_sampling_coreset(pts, 30, 25, 8).indices == distance_sampling_coreset(pts, 30, 25, 8).indices);
  }
  std::vector<Vec2> few(3, Vec2{1, 1});
  CHECK_THROWS_AS(distance_sampling_coreset(few, 2, 5, 1), Error);
}

TEST_CASE("score-based baselines") {
  std::vector<Vec2> id{{1, 0}, {0, 1}};
  for (BaselineKind k : {BaselineKind::L1Leverage, BaselineKind::LewisL1}) {
    WeightedCoreset c = score_based_coreset(k, id, 2, 1);
    for (std::size_t t = 0; t < c.indices.size(); ++t) CHECK(c.u[t] / c.multiplicity[t] == doctest::Approx(1.0));
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    std::vector<Vec2> rows(400);
    for (auto& r : rows) r = {nd(gen), -1};
    WeightedCoreset a = score_based_coreset(k, rows, 40, 6);
    CHECK(a.indices == score_based_coreset(k, rows, 40, 6).indices);
    CHECK(identity_sum(a) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Symmetric rows: every score is equal, so weights are uniform.
  std::vector<Vec2> ring;
  for (int i = 0; i < 8; ++i) ring.push_back({std::cos(i * std::numbers::pi / 8), std::sin(i * std::numbers::pi / 8)});
  WeightedCoreset r = score_based_coreset(BaselineKind::L1Leverage, ring, 4, 2);
  for (std::size_t t = 0; t < r.indices.size(); ++t) CHECK(r.u[t] / r.multiplicity[t] == doctest::Approx(2.0));
  CHECK_THROWS_AS(score_based_coreset(BaselineKind::Uniform, ring, 4, 2), Error);
}

TEST_CASE("every sampler is unbiased at a fixed eta") {
  const std::size_t n = 2000, k = 50;
  std::vector<double> theta;
  SignedDesign full = oracle::simulated_item_design(n, 2.2, -0.3, 21, &theta);
  auto rows = ability_rows(theta);
  const Vec2 eta{1.9, -0.1};
  const double target = conditional_nll(full, eta);
  const auto coreset_scores = scores_2pl(theta);
  for (int method = 0; method < 5; ++method) {
    const int reps = 1000;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < reps; ++r) {
      std::uint64_t seed = 9000 + r;
      WeightedCoreset c = method == 0   ? sample_weighted(coreset_scores, k, seed)
                          : method == 1 ? uniform_coreset(n, k, seed)
                          : method == 2 ? distance_sampling_coreset(rows, k, 25, seed)
                          : method == 3 ? score_based_coreset(BaselineKind::L1Leverage, rows, k, seed)
                                        : score_based_coreset(BaselineKind::LewisL1, rows, k, seed);
      double v = conditional_nll(oracle::restrict(full, c), eta);
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / reps;
    double sd = std::sqrt((sum2 / reps - mean * mean) / reps);
    INFO("method " << method << " mean " << mean << " target " << target << " sd " << sd);
    CHECK(std::abs(mean - target) <= 3 * sd);
  }
}
