#pragma once

#include <span>
#include <vector>

#include "irt/model.hpp"

namespace irt {

enum class MuMethod { ExactSweep, Heuristic };

/// mu0 / mu1 complexity of a design. An infinite value is carried as a flag
/// together with the direction that exposes it; the numeric field then holds
/// +infinity.
struct MuEstimate {
  double mu0 = 1.0;
  double mu1 = 1.0;
  bool mu0_infinite = false;
  bool mu1_infinite = false;
  MuMethod method = MuMethod::ExactSweep;
  Vec2 witness0{1.0, 0.0};
  Vec2 witness1{1.0, 0.0};

  bool degenerate() const noexcept { return mu0_infinite || mu1_infinite; }
  double mu() const noexcept { return mu0 > mu1 ? mu0 : mu1; }
};

/// Ratio |(X eta)+|_0 / |(X eta)-|_0 (p = 0) or the l1 analogue (p = 1).
/// Returns +infinity when the negative side is empty and the positive side is not,
/// and 0 when X eta = 0.
double mu_ratio(std::span<const Vec2> rows, Vec2 eta, int p);

/// Exact sup over all directions for two columns. Throws UndefinedComplexity
/// when every row is zero.
MuEstimate mu_exact_2d(std::span<const Vec2> rows);

/// Lower bound from a handful of directions: the optimum and its negation,
/// 64 evenly spaced directions and any extras.
MuEstimate mu_heuristic(std::span<const Vec2> rows, Vec2 optimum,
                        std::span<const Vec2> extra_directions = {});

/// inf |M x|_1 / |x|_1 over nonzero x, exact for two columns.
double sigma1_min_2d(std::span<const Vec2> rows);

}  // namespace irt
