#pragma once

// Brute-force reference computations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "irt/model.hpp"
#include "irt/solver.hpp"
#include "irt/weighted_coreset.hpp"

namespace oracle {

using irt::Vec2;

inline Vec2 direction(double t) { return {std::cos(t), std::sin(t)}; }

/// sup over `points` equally spaced directions of |(X eta)+|_p / |(X eta)-|_p.
inline double grid_mu(const std::vector<Vec2>& rows, int points, int p) {
  double best = 0;
  for (int s = 0; s < points; ++s) {
    Vec2 e = direction(2 * std::numbers::pi * s / points);
    double pos = 0, neg = 0;
    for (auto& r : rows) {
      double v = r[0] * e[0] + r[1] * e[1];
      double part = p == 0 ? (v != 0 ? 1.0 : 0.0) : std::abs(v);
      (v > 0 ? pos : neg) += v != 0 ? part : 0.0;
    }
    if (neg == 0) {
      if (pos > 0) return std::numeric_limits<double>::infinity();
      continue;
    }
    best = std::max(best, pos / neg);
  }
  return best;
}

/// Design restricted to the coreset rows with weights u.
inline irt::SignedDesign restrict(const irt::SignedDesign& full, const irt::WeightedCoreset& c) {
  irt::SignedDesign out;
  for (std::size_t s = 0; s < c.indices.size(); ++s) {
    std::size_t r = c.indices[s];
    out.push({full.x0[r], full.x1[r]}, full.weight[r] * c.u[s], full.kind[r], full.c[r]);
  }
  return out;
}

/// max over etas of |f_core(eta) - f(eta)| / f(eta).
inline double max_rel_dev(const irt::SignedDesign& full, const irt::SignedDesign& core,
                          const std::vector<Vec2>& etas) {
  double worst = 0;
  for (auto& e : etas) {
    double f = irt::conditional_nll(full, e);
    worst = std::max(worst, std::abs(irt::conditional_nll(core, e) - f) / f);
  }
  return worst;
}

/// `count` item-parameter vectors (a, b) uniform on [0.2, 4] x [-3, 3].
inline std::vector<Vec2> eta_grid(std::size_t count, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ua(0.2, 4), ub(-3, 3);
  std::vector<Vec2> out(count);
  for (auto& e : out) e = {ua(gen), ub(gen)};
  return out;
}

/// Item-step design of a single 2PL item with responses drawn at (a, b).
inline irt::SignedDesign simulated_item_design(std::size_t n, double a, double b, unsigned seed,
                                               std::vector<double>* theta_out = nullptr) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uu;
  irt::SignedDesign d;
  for (std::size_t j = 0; j < n; ++j) {
    double t = nd(gen);
    if (theta_out) theta_out->push_back(t);
    double p = 1 / (1 + std::exp(-(a * t - b)));
    double s = uu(gen) < p ? 1.0 : -1.0;
    d.push({-s * t, s}, 1.0, s > 0 ? irt::LossKind::Pass : irt::LossKind::Fail, 0.0);
  }
  return d;
}

/// Unconstrained-in-practice 2PL conditional optimum on a wide box.
inline irt::ConditionalResult wide_optimum(const irt::SignedDesign& d, double box = 30.0) {
  irt::ConditionalProblem p;
  p.lower = {-box, -box, 0};
  p.upper = {box, box, 0};
  p.init = {1, 0, 0};
  p.tolerance = 1e-10;
  p.max_steps = 500;
  return irt::solve_conditional(d, p);
}

}  // namespace oracle
