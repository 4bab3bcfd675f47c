#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "irt/model.hpp"
#include "irt/mu.hpp"
#include "irt/sampling.hpp"
#include "irt/weighted_coreset.hpp"

namespace irt {

/// Smallest power of two (possibly fractional) that is >= x, for x > 0.
double next_power_of_two(double x);

/// Rows (theta_j, -1) used for examinee compression.
std::vector<Vec2> ability_rows(std::span<const double> theta);

/// sqrt(l2 leverage of (theta_j, -1)) + 1/n. One vector serves every item
/// because flipping row signs leaves leverage unchanged.
std::vector<double> scores_2pl(std::span<const double> theta, bool sketched = false,
                               std::uint64_t seed = 0, std::size_t sketch_rows = 256);

/// Per-row 3PL sensitivity bounds for one design, already rounded up to a
/// power of two. Fail rows: 42.5 mu1^2 (|U_i| + 1/m'), Pass rows:
/// 3.5 E (1 + mu0) / m''. `basis_norms` holds |U_i| for each row.
std::vector<double> scores_3pl(const SignedDesign& design, std::span<const double> basis_norms,
                               double mu0, double mu1, double e_term);

enum class MuPolicy { Auto, Heuristic, Exact };

struct CoresetOptions {
  bool sketched = false;
  std::size_t sketch_rows = 256;
  int rounds = 1;
  MuPolicy mu_policy = MuPolicy::Auto;
  /// Auto switches to the exact sweep at or below this many rows.
  std::size_t exact_mu_limit = 5000;
  double epsilon = 0.1;
  double kappa = 10.0;
  SamplingMethod method = SamplingMethod::IIDAlias;
  std::uint64_t seed = 0;
};

/// c rounded up to the grid of spacing epsilon / (6 kappa mu^2), kept below 0.5.
double round_guessing_up(double c, double mu, double epsilon, double kappa);

/// Examinee coreset shared by every item's conditional problem.
/// 1PL/2PL: scores_2pl then sampling. 3PL: per-item sensitivity bounds
/// combined by the maximum over items; examinees whose responses are all equal
/// are appended with weight 1 outside the sample.
WeightedCoreset build_coreset(const ResponseMatrix& y, const ItemParameters& items,
                              const AbilityParameters& abilities, ModelKind model, std::size_t k,
                              const CoresetOptions& options = {});

/// Per-item mu estimate on the item design at the given parameters.
MuEstimate item_mu(const ResponseMatrix& y, const ItemParameters& items,
                   const AbilityParameters& abilities, std::size_t item, MuPolicy policy,
                   std::size_t exact_limit = 5000);

}  // namespace irt
