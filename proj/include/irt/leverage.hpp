#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "irt/model.hpp"

namespace irt {

enum class ScoreKind { L2Leverage, L2LeverageSketched, L1Leverage, LewisL1 };

struct ScoreVector {
  std::vector<double> values;
  ScoreKind kind = ScoreKind::L2Leverage;
  /// Only meaningful for Lewis weights and the sketched path (false = fell back to exact).
  bool converged = true;
  int iterations = 0;
};

/// Squared row norms of an orthonormal basis of span(X), from a column-pivoted
/// Householder QR. Rank-1 inputs use the one-column basis; X = 0 gives zeros.
ScoreVector leverage_l2(std::span<const Vec2> rows);

/// CountSketch S (sketch_rows x n), R from QR(SX), scores |x_i R^-1|^2.
/// A singular sketch is redrawn up to 3 times before falling back to leverage_l2.
ScoreVector leverage_l2_sketched(std::span<const Vec2> rows, std::size_t sketch_rows,
                                 std::uint64_t seed);

/// sup_eta |x_i . eta| / |X eta|_1, exact for two columns.
ScoreVector leverage_l1(std::span<const Vec2> rows);

/// Fixed point w_i = sqrt(x_i^T (X^T W^-1 X)^-1 x_i) started from l2 leverage.
ScoreVector lewis_weights_l1(std::span<const Vec2> rows, int max_iters = 100, double tol = 1e-10);

}  // namespace irt
