#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "irt/model.hpp"
#include "irt/weighted_coreset.hpp"

namespace irt {

struct Box {
  double lower;
  double upper;
  double clamp(double v) const noexcept { return v < lower ? lower : (v > upper ? upper : v); }
};

/// Box constraints used by every conditional solve.
struct Bounds {
  Box a{0.01, 5.0};
  Box b{-6.0, 6.0};
  Box theta{-6.0, 6.0};
  Box c{0.0, 0.4999};
};

struct FitConfig {
  int max_main_iterations = 50;
  double inner_tolerance = 1e-8;
  int inner_max_steps = 200;
  Bounds bounds{};
  std::uint64_t seed = 0;
  bool monotone_guard = true;
  /// Main loop stops once the relative objective improvement drops below this.
  double relative_stop = 1e-10;

  void validate() const;
};

/// Gradient of conditional_nll in (eta0, eta1) and, when a shared c is given, in c.
struct ConditionalGradient {
  double d_eta0 = 0.0;
  double d_eta1 = 0.0;
  double d_c = 0.0;
};

ConditionalGradient conditional_gradient(const SignedDesign& design, Vec2 eta,
                                         std::optional<double> shared_c = std::nullopt);

/// Box-constrained problem in (eta0, eta1[, c]); c is free only when free_c.
struct ConditionalProblem {
  std::array<double, 3> lower{};
  std::array<double, 3> upper{};
  std::array<double, 3> init{};
  bool free_c = false;
  double tolerance = 1e-8;
  int max_steps = 200;
};

struct ConditionalResult {
  std::array<double, 3> params{};
  double objective = 0.0;
  double initial_objective = 0.0;
  double projected_gradient_norm = 0.0;
  int steps = 0;
  bool converged = false;
};

/// Projected Newton with Armijo backtracking; falls back to a projected
/// gradient step when the reduced Hessian is not positive definite.
ConditionalResult solve_conditional(const SignedDesign& design, const ConditionalProblem& problem);

/// Item step (ByItem: eta = (a, b) and c for 3PL) or ability step
/// (ByExaminee: eta = (theta, -1)). `init` holds (eta0, eta1, c).
ConditionalResult fit_conditional(const SignedDesign& design, ModelKind kind,
                                  Orientation orientation, const Bounds& bounds,
                                  std::array<double, 3> init, double tolerance = 1e-8,
                                  int max_steps = 200);

struct FitTrace {
  /// Objective before the first iteration followed by one value per iteration.
  std::vector<double> objective;
  double seconds_ability_step = 0.0;
  double seconds_item_step = 0.0;
  double seconds_total = 0.0;
  int iterations = 0;
  int rejected_updates = 0;
};

struct FitResult {
  ItemParameters items;
  AbilityParameters abilities;
  FitTrace trace;
};

/// Deterministic starting point: standardized row-sum scores for theta,
/// a = 1, b = logit of the failure rate, c = max(c_min, 0.1) for 3PL.
std::pair<ItemParameters, AbilityParameters> initial_parameters(const ResponseMatrix& y,
                                                                ModelKind model,
                                                                const FitConfig& config);

/// Sum over items of the coreset-weighted item objective.
double coreset_objective(const ResponseMatrix& y, const ItemParameters& items,
                         const AbilityParameters& abilities, const WeightedCoreset& coreset);

/// Alternating conditional maximum likelihood. With a coreset the item step
/// only sums over the coreset examinees with their weights, and the traced
/// objective is coreset_objective.
FitResult alternate_fit(const ResponseMatrix& y, ModelKind model, const FitConfig& config,
                        const WeightedCoreset* coreset = nullptr,
                        std::optional<std::pair<ItemParameters, AbilityParameters>> start =
                            std::nullopt);

/// theta' = (theta - mean)/sd, a' = a sd, b' = b - a mean (population sd).
std::pair<ItemParameters, AbilityParameters> standardize(const ItemParameters& items,
                                                         const AbilityParameters& abilities);

}  // namespace irt
