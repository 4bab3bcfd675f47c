#include "irt/baselines.hpp"

#include <algorithm>
#include <limits>

#include "irt/error.hpp"
#include "irt/leverage.hpp"
#include "irt/rng.hpp"
#include "irt/sampling.hpp"
#include "irt/summation.hpp"

namespace irt {

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "uniform") return BaselineKind::Uniform;
  if (name == "distance") return BaselineKind::DistanceSampling;
  if (name == "l1lev") return BaselineKind::L1Leverage;
  if (name == "lewis") return BaselineKind::LewisL1;
  fail(ErrorCode::Config, "unknown baseline '" + std::string(name) + "'");
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Uniform: return "uniform";
    case BaselineKind::DistanceSampling: return "distance";
    case BaselineKind::L1Leverage: return "l1lev";
    case BaselineKind::LewisL1: return "lewis";
  }
  return "?";
}

WeightedCoreset uniform_coreset(std::size_t n, std::size_t k, std::uint64_t seed) {
  require(k >= 1 && k <= n, ErrorCode::InvalidArgument, "uniform_coreset: need 1 <= k <= n");
  const std::vector<double> scores(n, 1.0);
  return sample_weighted(scores, k, seed, SamplingMethod::IIDAlias);
}

namespace {

double dist2(const Vec2& a, const Vec2& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

}  // namespace

std::vector<Vec2> kmeanspp_centers(std::span<const Vec2> points, std::size_t centers,
                                   std::uint64_t seed) {
  const std::size_t n = points.size();
  require(centers >= 1 && n >= centers, ErrorCode::InvalidArgument,
          "k-means++ needs n >= centers >= 1");
  CounterRng rng(seed, 0xD157ull);
  std::vector<Vec2> out;
  out.push_back(points[std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)))]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(points[i], out[0]);
  while (out.size() < centers) {
    const double total = pairwise_sum(d2);
    if (!(total > 0)) break;  // every point already sits on a center
    double target = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0) {
        pick = i;
        break;
      }
    }
    out.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(points[i], points[pick]));
  }
  return out;
}

WeightedCoreset distance_sampling_coreset(std::span<const Vec2> points, std::size_t k,
                                          std::size_t centers, std::uint64_t seed) {
  const std::size_t n = points.size();
  require(k >= 1, ErrorCode::InvalidArgument, "distance sampling: k must be >= 1");
  const auto c = kmeanspp_centers(points, centers, seed);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (const Vec2& ctr : c) d2[i] = std::min(d2[i], dist2(points[i], ctr));
  const double total = pairwise_sum(d2);
  const double floor = 1.0 / static_cast<double>(n);
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = (total > 0 ? d2[i] / total : 0.0) + floor;
  return sample_weighted(scores, k, derive_seed(seed, 1), SamplingMethod::IIDAlias);
}

WeightedCoreset score_based_coreset(BaselineKind kind, std::span<const Vec2> rows, std::size_t k,
                                    std::uint64_t seed) {
  require(kind == BaselineKind::L1Leverage || kind == BaselineKind::LewisL1,
          ErrorCode::InvalidArgument, "score_based_coreset: kind must be l1lev or lewis");
  ScoreVector s = kind == BaselineKind::L1Leverage ? leverage_l1(rows) : lewis_weights_l1(rows);
  const double floor = 1.0 / static_cast<double>(rows.size());
  for (double& v : s.values) v += floor;
  return sample_weighted(s.values, k, seed, SamplingMethod::IIDAlias);
}

}  // namespace irt
