#include "irt/leverage.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "angular_sweep.hpp"
#include "irt/error.hpp"
#include "irt/rng.hpp"

namespace irt {
namespace {

Eigen::MatrixX2d to_matrix(std::span<const Vec2> rows) {
  Eigen::MatrixX2d x(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    x(static_cast<Eigen::Index>(i), 1) = rows[i][1];
  }
  return x;
}

bool is_zero(const Vec2& x) { return x[0] == 0.0 && x[1] == 0.0; }

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Counter-clockwise convex hull without collinear points (monotone chain).
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

ScoreVector leverage_l2(std::span<const Vec2> rows) {
  ScoreVector out;
  out.kind = ScoreKind::L2Leverage;
  out.values.assign(rows.size(), 0.0);
  if (rows.empty()) return out;
  const Eigen::MatrixX2d x = to_matrix(rows);
  Eigen::ColPivHouseholderQR<Eigen::MatrixX2d> qr(x);
  const auto rank = qr.rank();
  if (rank == 0) return out;
  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), rank);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.values[static_cast<std::size_t>(i)] = q.row(i).squaredNorm();
  return out;
}

ScoreVector leverage_l2_sketched(std::span<const Vec2> rows, std::size_t sketch_rows,
                                 std::uint64_t seed) {
  require(sketch_rows >= 16, ErrorCode::InvalidArgument, "sketch_rows must be >= 16");
  const std::size_t n = rows.size();
  for (int attempt = 0; attempt < 4; ++attempt) {
    CounterRng rng(seed, 0x5CE7C000ull + static_cast<std::uint64_t>(attempt));
    Eigen::MatrixX2d sx = Eigen::MatrixX2d::Zero(static_cast<Eigen::Index>(sketch_rows), 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t bits = rng.at(i);
      const auto target = static_cast<Eigen::Index>((bits >> 1) % sketch_rows);
      const double s = (bits & 1u) ? 1.0 : -1.0;
      sx(target, 0) += s * rows[i][0];
      sx(target, 1) += s * rows[i][1];
    }
    Eigen::HouseholderQR<Eigen::MatrixX2d> qr(sx);
    const Eigen::Matrix2d r = qr.matrixQR().topRows<2>().triangularView<Eigen::Upper>();
    const double scale = std::max(std::abs(r(0, 0)), std::abs(r(1, 1)));
    if (!(scale > 0) || std::min(std::abs(r(0, 0)), std::abs(r(1, 1))) <= 1e-12 * scale) continue;
    ScoreVector out;
    out.kind = ScoreKind::L2LeverageSketched;
    out.iterations = attempt + 1;
    out.values.resize(n);
    const Eigen::Matrix2d rinv = r.inverse();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::RowVector2d xi(rows[i][0], rows[i][1]);
      out.values[i] = (xi * rinv).squaredNorm();
    }
    return out;
  }
  ScoreVector out = leverage_l2(rows);
  out.converged = false;
  return out;
}

ScoreVector leverage_l1(std::span<const Vec2> rows) {
  ScoreVector out;
  out.kind = ScoreKind::L1Leverage;
  out.values.assign(rows.size(), 0.0);

  // score_i = max_k |x_i . v_k| with v_k = eta_k / |X eta_k|_1 over the sector
  // boundaries, the vertices of the unit ball of |X eta|_1. Sector midpoints
  // lie on its edges and only matter for rank-one X, where every boundary
  // has zero mass and the ball is a strip.
  std::vector<Vec2> support, midpoints;
  const bool any = detail::angular_sweep(rows, [&](const detail::SweepPoint& p) {
    const double mass = p.pos_mass() + p.neg_mass();
    if (!(mass > 0)) return;
    auto& dst = p.boundary ? support : midpoints;
    dst.push_back({p.eta[0] / mass, p.eta[1] / mass});
    dst.push_back({-p.eta[0] / mass, -p.eta[1] / mass});
  });
  if (support.empty()) support = std::move(midpoints);
  if (!any || support.empty()) return out;

  const std::vector<Vec2> hull = convex_hull(std::move(support));
  const std::size_t h = hull.size();
  auto dot = [](const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; };

  std::vector<std::size_t> order;
  order.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!is_zero(rows[i])) order.push_back(i);
  std::vector<double> angle(rows.size(), 0.0);
  for (std::size_t i : order) angle[i] = std::atan2(rows[i][1], rows[i][0]);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return angle[l] < angle[r]; });
  if (order.empty()) return out;

  // Rotating query direction: the supporting vertex only moves counter-clockwise.
  std::size_t v = 0;
  for (std::size_t k = 1; k < h; ++k)
    if (dot(hull[k], rows[order[0]]) > dot(hull[v], rows[order[0]])) v = k;
  // Rounding can leave nearly collinear vertices slightly reflex, so look a
  // few vertices ahead instead of stopping at the first non-increase.
  constexpr std::size_t lookahead = 4;
  for (std::size_t i : order) {
    const Vec2& d = rows[i];
    for (std::size_t moved = 0; moved < h;) {
      std::size_t best = v;
      for (std::size_t s = 1; s <= lookahead && s < h; ++s)
        if (dot(hull[(v + s) % h], d) > dot(hull[best], d)) best = (v + s) % h;
      if (best == v) break;
      moved += (best + h - v) % h;
      v = best;
    }
    out.values[i] = std::min(1.0, std::abs(dot(hull[v], d)));
  }
  return out;
}

ScoreVector lewis_weights_l1(std::span<const Vec2> rows, int max_iters, double tol) {
  ScoreVector out = leverage_l2(rows);
  out.kind = ScoreKind::LewisL1;
  out.converged = false;
  std::vector<double>& w = out.values;
  const std::size_t n = rows.size();
  for (int it = 1; it <= max_iters; ++it) {
    double s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0) continue;
      const Vec2& x = rows[i];
      s00 += x[0] * x[0] / w[i];
      s01 += x[0] * x[1] / w[i];
      s11 += x[1] * x[1] / w[i];
    }
    const double det = s00 * s11 - s01 * s01;
    if (!(det > 0)) fail(ErrorCode::InvalidArgument, "lewis_weights_l1: X must have full rank");
    const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] <= 0) continue;
      const Vec2& x = rows[i];
      const double q = x[0] * x[0] * i00 + 2 * x[0] * x[1] * i01 + x[1] * x[1] * i11;
      const double next = std::sqrt(std::max(q, 0.0));
      change = std::max(change, std::abs(next - w[i]) / w[i]);
      w[i] = next;
    }
    out.iterations = it;
    if (change <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace irt
