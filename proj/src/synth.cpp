#include "irt/synth.hpp"

#include <cmath>
#include <random>

#include "irt/error.hpp"
#include "irt/parallel.hpp"
#include "irt/rng.hpp"

namespace irt {
namespace {

enum Stream : std::uint64_t {
  kStreamA = 1ull << 40,
  kStreamB = 2ull << 40,
  kStreamC = 3ull << 40,
  kStreamTheta = 4ull << 40,
  kStreamY = 5ull << 40,
};

void check(const TruncatedNormal& d, const char* name) {
  // sd = 0 is a point mass and must sit inside the interval.
  const bool point_ok = d.sd > 0 || (d.mean >= d.lower && d.mean < d.upper);
  if (!(d.sd >= 0 && point_ok && std::isfinite(d.mean) && d.lower < d.upper))
    fail(ErrorCode::Config, std::string("invalid distribution for ") + name);
}

}  // namespace

void GenConfig::validate() const {
  require(n >= 1 && m >= 1, ErrorCode::Config, "n and m must be >= 1");
  check(a, "a");
  check(b, "b");
  check(theta, "theta");
  check(c, "c");
  require(a.lower >= 0.0, ErrorCode::Config, "a must be truncated at or above 0");
  require(a.sd > 0 || a.mean > 0, ErrorCode::Config, "a point mass must be positive");
  require(c.lower >= 0.0 && c.upper <= 0.5, ErrorCode::Config, "c truncation must lie in [0, 0.5)");
}

double draw_truncated_normal(const TruncatedNormal& dist, std::uint64_t seed, std::uint64_t stream) {
  if (dist.sd == 0.0) return dist.mean;
  CounterRng rng(seed, stream);
  std::normal_distribution<double> normal(dist.mean, dist.sd);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double v = normal(rng);
    if (v >= dist.lower && v < dist.upper) return v;
  }
  fail(ErrorCode::Numeric, "truncated normal rejection sampling did not terminate");
}

SyntheticData generate_synthetic(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t m = cfg.m, n = cfg.n;
  SyntheticData out;
  out.items = ItemParameters(m, 1.0, 0.0, 0.0);
  out.abilities = AbilityParameters(n);
  for (std::size_t i = 0; i < m; ++i) {
    if (cfg.model != ModelKind::OnePL) {
      double a = 0.0;
      // "truncated at 0": a must be strictly positive.
      for (std::uint64_t r = 0; a <= 0.0; ++r)
        a = draw_truncated_normal(cfg.a, cfg.seed, kStreamA + i + (r << 32));
      out.items.a[i] = a;
    }
    out.items.b[i] = draw_truncated_normal(cfg.b, cfg.seed, kStreamB + i);
    if (cfg.model == ModelKind::ThreePL) out.items.c[i] = draw_truncated_normal(cfg.c, cfg.seed, kStreamC + i);
  }
  for (std::size_t j = 0; j < n; ++j)
    out.abilities.theta[j] = draw_truncated_normal(cfg.theta, cfg.seed, kStreamTheta + j);

  std::vector<std::int8_t> y(m * n);
  const CounterRng coin(cfg.seed, kStreamY);
  parallel_for(m, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = icc_probability(out.items.a[i], out.items.b[i], out.items.c[i],
                                       out.abilities.theta[j]);
      y[i * n + j] = CounterRng::to_unit(coin.at(i * n + j)) < p ? 1 : -1;
    }
  });
  out.y = ResponseMatrix(m, n, std::move(y));
  return out;
}

}  // namespace irt
