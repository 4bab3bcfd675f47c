#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "irt/coreset.hpp"
#include "irt/error.hpp"
#include "irt/leverage.hpp"
#include "irt/synth.hpp"
#include "oracles.hpp"

using namespace irt;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

SignedDesign item_design(const SyntheticData& d, std::size_t item) {
  return build_signed_design(d.y, d.items, d.abilities, Orientation::ByItem, item);
}

SyntheticData instance(std::size_t n, std::size_t m, ModelKind model, std::uint64_t seed) {
  GenConfig g;
  g.n = n;
  g.m = m;
  g.model = model;
  g.seed = seed;
  return generate_synthetic(g);
}

}  // namespace

TEST_CASE("next power of two") {
  CHECK(next_power_of_two(21.25) == 32.0);
  CHECK(next_power_of_two(std::log(2.0)) == 1.0);
  CHECK(next_power_of_two(1.0) == 1.0);
  CHECK(next_power_of_two(32.0) == 32.0);
  CHECK(next_power_of_two(0.3) == 0.5);
  CHECK(next_power_of_two(0.25) == 0.25);
  CHECK(next_power_of_two(1e-9) == std::ldexp(1.0, -29));
  CHECK_THROWS_AS(next_power_of_two(0.0), Error);
}

TEST_CASE("2PL scores") {
  std::vector<double> flat(10, 0.7);
  auto s = scores_2pl(flat);
  for (double v : s) CHECK(v == doctest::Approx(s[0]));

  std::vector<double> two{1.0, -1.0};
  s = scores_2pl(two);
  auto lev = leverage_l2(ability_rows(two)).values;
  CHECK(s[0] == doctest::Approx(std::sqrt(lev[0]) + 0.5));
  CHECK(s[0] == doctest::Approx(1.5));
  CHECK(s[1] == doctest::Approx(1.5));

  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<double> theta(500);
  for (auto& t : theta) t = nd(gen);
  s = scores_2pl(theta);
  for (double v : s) CHECK(v > 0);
  auto sk = scores_2pl(theta, true, 7, 256);
  for (std::size_t j = 0; j < theta.size(); ++j) CHECK(sk[j] > 0);
}

TEST_CASE("3PL score formulas") {
  SignedDesign d;
  for (int r = 0; r < 4; ++r) d.push({1, 0}, 1, LossKind::Fail, 0.1);
  for (int r = 0; r < 7; ++r) d.push({0, 1}, 1, LossKind::Pass, 0.1);
  std::vector<double> norms(11, 0.25);
  auto s = scores_3pl(d, norms, 1.0, 1.0, std::log(2.0));
  for (int r = 0; r < 4; ++r) CHECK(s[r] == 32.0);
  for (int r = 4; r < 11; ++r) CHECK(s[r] == 1.0);

  SignedDesign one;
  one.push({1, 0}, 1, LossKind::Pass, 0.1);
  std::vector<double> nn{0.5};
  CHECK_THROWS_AS(scores_3pl(one, nn, 1, 1, 1), Error);
  CHECK_THROWS_AS(scores_3pl(d, nn, 1, 1, 1), Error);
}

TEST_CASE("3PL total sensitivity bound") {
  SyntheticData data = instance(400, 5, ModelKind::ThreePL, 3);
  auto lev = leverage_l2(ability_rows(data.abilities.theta)).values;
  std::vector<double> norms;
  for (double l : lev) norms.push_back(std::sqrt(l));
  for (std::size_t i = 0; i < 5; ++i) {
    SignedDesign d = item_design(data, i);
    MuEstimate mu = mu_exact_2d(design_rows(d));
    REQUIRE_FALSE(mu.degenerate());
    double e = std::log(10.0);
    auto s = scores_3pl(d, norms, mu.mu0, mu.mu1, e);
    double total = 0;
    std::size_t fails = 0;
    for (std::size_t r = 0; r < d.size(); ++r) {
      total += s[r];
      fails += d.kind[r] == LossKind::Fail;
    }
    double mu_max = mu.mu();
    CHECK(total <= 2 * (170 * mu_max * mu_max * std::sqrt(static_cast<double>(fails)) + 3.5 * e * (1 + mu.mu0)));
  }
}

TEST_CASE("guessing grid rounding") {
  double spacing = 0.1 / (6 * 10 * 4);
  double r = round_guessing_up(0.1234, 2.0, 0.1, 10.0);
  CHECK(r >= 0.1234);
  CHECK(r - 0.1234 < spacing + 1e-15);
  CHECK(std::abs(r / spacing - std::round(r / spacing)) < 1e-9);
  CHECK(round_guessing_up(0.4999, 1.0, 0.1, 10.0) < 0.5);
  CHECK_THROWS_AS(round_guessing_up(0.1, 0.5, 0.1, 10.0), Error);
}

TEST_CASE("grid rounding moves the 3PL objective by at most epsilon") {
  SyntheticData data = instance(1000, 4, ModelKind::ThreePL, 8);
  for (std::size_t i = 0; i < 4; ++i) data.items.c[i] = 0.17;
  for (std::size_t i = 0; i < 4; ++i) {
    SignedDesign d = item_design(data, i);
    MuEstimate mu = mu_exact_2d(design_rows(d));
    if (mu.degenerate()) continue;
    double c_r = round_guessing_up(0.17, mu.mu(), 0.1, 10.0);
    double before = conditional_nll(d, data.items.alpha(i), 0.17);
    double after = conditional_nll(d, data.items.alpha(i), c_r);
    CHECK(std::abs(after - before) / before <= 0.1);
  }
}

TEST_CASE("full-size uniform sample reproduces the objective") {
  SyntheticData data = instance(300, 3, ModelKind::TwoPL, 4);
  std::vector<double> s(300, 1.0);
  WeightedCoreset c = sample_weighted(s, 300, 1, SamplingMethod::ChaoReservoir);
  SignedDesign full = item_design(data, 0);
  SignedDesign core = oracle::restrict(full, c);
  for (const Vec2& e : oracle::eta_grid(20, 1))
    CHECK(conditional_nll(core, e) == doctest::Approx(conditional_nll(full, e)).epsilon(1e-12));
}

TEST_CASE("approximation error shrinks with k") {
  SyntheticData data = instance(2000, 20, ModelKind::TwoPL, 5);
  SignedDesign full = item_design(data, 0);
  auto etas = oracle::eta_grid(100, 77);
  std::vector<double> medians;
  for (std::size_t k : {50, 100, 200, 400}) {
    std::vector<double> devs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      CoresetOptions opt;
      opt.seed = seed;
      WeightedCoreset c = build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, k, opt);
      devs.push_back(oracle::max_rel_dev(full, oracle::restrict(full, c), etas));
    }
    medians.push_back(median(devs));
  }
  MESSAGE("medians " << medians[0] << " " << medians[1] << " " << medians[2] << " " << medians[3]);
  for (std::size_t t = 1; t < medians.size(); ++t) CHECK(medians[t] <= medians[t - 1]);
}

TEST_CASE("one coreset serves every label-flip variant") {
  SyntheticData data = instance(2000, 1, ModelKind::TwoPL, 6);
  auto etas = oracle::eta_grid(100, 5);
  std::mt19937_64 gen(12);
  double shared_sum = 0, fresh_sum = 0;
  CoresetOptions base;
  base.seed = 1;
  WeightedCoreset shared = build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, 200, base);
  for (int v = 0; v < 10; ++v) {
    std::vector<std::int8_t> labels(data.y.item_row(0).begin(), data.y.item_row(0).end());
    for (auto& l : labels)
      if (gen() % 4 == 0) l = static_cast<std::int8_t>(-l);
    ResponseMatrix y(1, 2000, labels);
    SignedDesign full = build_signed_design(y, data.items, data.abilities, Orientation::ByItem, 0);
    CoresetOptions opt;
    opt.seed = 100 + v;
    WeightedCoreset fresh = build_coreset(y, data.items, data.abilities, ModelKind::TwoPL, 200, opt);
    shared_sum += oracle::max_rel_dev(full, oracle::restrict(full, shared), etas);
    fresh_sum += oracle::max_rel_dev(full, oracle::restrict(full, fresh), etas);
  }
  MESSAGE("shared " << shared_sum / 10 << " fresh " << fresh_sum / 10);
  CHECK(shared_sum <= 2 * fresh_sum);
  CHECK(fresh_sum <= 2 * shared_sum);
}

TEST_CASE("label classes are bounded by mu0") {
  SyntheticData data = instance(1500, 10, ModelKind::TwoPL, 7);
  for (std::size_t i = 0; i < 10; ++i) {
    SignedDesign d = item_design(data, i);
    MuEstimate mu = mu_exact_2d(design_rows(d));
    if (mu.mu0_infinite) continue;
    double fails = 0, passes = 0;
    for (LossKind k : d.kind) (k == LossKind::Fail ? fails : passes) += 1;
    CHECK(passes / (2 * mu.mu0) <= fails);
    CHECK(fails <= 2 * mu.mu0 * passes);
  }
}

TEST_CASE("3PL coreset forces single-class examinees") {
  SyntheticData data = instance(600, 8, ModelKind::ThreePL, 9);
  // Examinee 3 passes everything, examinee 5 fails everything.
  std::vector<std::int8_t> e(data.y.entries().begin(), data.y.entries().end());
  for (std::size_t i = 0; i < 8; ++i) {
    e[i * 600 + 3] = 1;
    e[i * 600 + 5] = -1;
  }
  ResponseMatrix y(8, 600, e);
  CoresetOptions opt;
  opt.seed = 3;
  WeightedCoreset c = build_coreset(y, data.items, data.abilities, ModelKind::ThreePL, 100, opt);
  CHECK(c.forced >= 2);
  std::vector<std::size_t> tail(c.indices.end() - static_cast<long>(c.forced), c.indices.end());
  CHECK(std::find(tail.begin(), tail.end(), 3) != tail.end());
  CHECK(std::find(tail.begin(), tail.end(), 5) != tail.end());
  for (std::size_t t = c.indices.size() - c.forced; t < c.indices.size(); ++t) CHECK(c.u[t] == 1.0);
  CHECK(c.scores[3] == 0.0);
  std::size_t draws = 0;
  for (std::size_t t = 0; t + c.forced < c.indices.size(); ++t) draws += c.multiplicity[t];
  CHECK(draws == 100);
  // Scores are powers of two.
  for (double s : c.scores)
    if (s > 0) CHECK(s == next_power_of_two(s));

  CoresetOptions chao = opt;
  chao.method = SamplingMethod::ChaoReservoir;
  WeightedCoreset r = build_coreset(y, data.items, data.abilities, ModelKind::ThreePL, 100, chao);
  CHECK(r.indices.size() - r.forced == 100);
}

TEST_CASE("coreset argument checks and experimental rounds") {
  SyntheticData data = instance(400, 4, ModelKind::TwoPL, 10);
  CHECK_THROWS_AS(build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, 400), Error);
  CHECK_THROWS_AS(build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, 0), Error);
  CHECK_THROWS_AS(build_coreset(data.y, ItemParameters(3), data.abilities, ModelKind::TwoPL, 10), Error);
  CoresetOptions opt;
  opt.rounds = 2;
  WeightedCoreset c = build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, 50, opt);
  std::size_t draws = 0;
  for (auto m : c.multiplicity) draws += m;
  CHECK(draws == 50);
  for (double u : c.u) CHECK(u > 0);
  CHECK_THROWS_AS(build_coreset(data.y, data.items, data.abilities, ModelKind::ThreePL, 50, opt), Error);
}

TEST_CASE("coreset CSV round trip") {
  SyntheticData data = instance(500, 3, ModelKind::TwoPL, 11);
  CoresetOptions opt;
  opt.seed = 42;
  WeightedCoreset c = build_coreset(data.y, data.items, data.abilities, ModelKind::TwoPL, 60, opt);
  auto path = std::filesystem::temp_directory_path() / "irt_coreset_roundtrip.csv";
  write_coreset_csv(c, path.string());
  WeightedCoreset back = read_coreset_csv(path.string());
  CHECK(back.indices == c.indices);
  CHECK(back.u == c.u);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_coreset_csv("/nonexistent/dir/x.csv"), Error);
}
