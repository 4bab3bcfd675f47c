#include "irt/mu.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "angular_sweep.hpp"
#include "irt/error.hpp"

namespace irt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Tracker {
  double value = 0.0;
  bool infinite = false;
  Vec2 witness{1.0, 0.0};

  void offer(double v, Vec2 eta) {
    if (infinite) return;
    if (v == kInf) {
      infinite = true;
      value = kInf;
      witness = eta;
    } else if (v > value) {
      value = v;
      witness = eta;
    }
  }
};

}  // namespace

double mu_ratio(std::span<const Vec2> rows, Vec2 eta, int p) {
  require(p == 0 || p == 1, ErrorCode::InvalidArgument, "mu_ratio: p must be 0 or 1");
  double pos = 0.0, neg = 0.0;
  for (const Vec2& x : rows) {
    const double v = x[0] * eta[0] + x[1] * eta[1];
    if (v > 0) pos += p == 0 ? 1.0 : v;
    if (v < 0) neg += p == 0 ? 1.0 : -v;
  }
  if (neg == 0.0) return pos > 0.0 ? kInf : 0.0;
  return pos / neg;
}

MuEstimate mu_exact_2d(std::span<const Vec2> rows) {
  Tracker t0, t1;
  const bool any = detail::angular_sweep(rows, [&](const detail::SweepPoint& p) {
    if (p.pos_count == 0 && p.neg_count == 0) return;
    if (!p.boundary) {
      t0.offer(p.neg_count == 0 ? kInf
                                : static_cast<double>(p.pos_count) / static_cast<double>(p.neg_count),
               p.eta);
    }
    if (p.neg_count == 0) {
      t1.offer(kInf, p.eta);
      return;
    }
    const double pos = std::max(p.pos_mass(), 0.0);
    const double neg = p.neg_mass();
    if (neg > 0) t1.offer(pos / neg, p.eta);
  });
  if (!any) fail(ErrorCode::UndefinedComplexity, "mu_exact_2d: all rows are zero");
  MuEstimate out;
  out.method = MuMethod::ExactSweep;
  out.mu0 = t0.value;
  out.mu1 = t1.value;
  out.mu0_infinite = t0.infinite;
  out.mu1_infinite = t1.infinite;
  out.witness0 = t0.witness;
  out.witness1 = t1.witness;
  return out;
}

MuEstimate mu_heuristic(std::span<const Vec2> rows, Vec2 optimum,
                        std::span<const Vec2> extra_directions) {
  Tracker t0, t1;
  auto probe = [&](Vec2 eta) {
    t0.offer(mu_ratio(rows, eta, 0), eta);
    t1.offer(mu_ratio(rows, eta, 1), eta);
  };
  probe(optimum);
  probe({-optimum[0], -optimum[1]});
  for (int k = 0; k < 64; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 64.0;
    probe({std::cos(t), std::sin(t)});
  }
  for (const Vec2& e : extra_directions) probe(e);
  MuEstimate out;
  out.method = MuMethod::Heuristic;
  out.mu0 = t0.value;
  out.mu1 = t1.value;
  out.mu0_infinite = t0.infinite;
  out.mu1_infinite = t1.infinite;
  out.witness0 = t0.witness;
  out.witness1 = t1.witness;
  return out;
}

double sigma1_min_2d(std::span<const Vec2> rows) {
  auto l1_image = [&](Vec2 x) {
    double s = 0.0;
    for (const Vec2& r : rows) s += std::abs(r[0] * x[0] + r[1] * x[1]);
    return s;
  };
  // The map is piecewise linear on the diamond; its kinks are the vertices and
  // the points where one row's image vanishes.
  double best = std::min(l1_image({1.0, 0.0}), l1_image({0.0, 1.0}));
  for (const Vec2& r : rows) {
    const double norm = std::abs(r[0]) + std::abs(r[1]);
    if (norm == 0.0) continue;
    best = std::min(best, l1_image({r[1] / norm, -r[0] / norm}));
  }
  return best;
}

}  // namespace irt
