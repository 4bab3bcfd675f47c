#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace irt {

/// A weighted subsample of rows. Indices are distinct; repeated i.i.d. draws
/// are folded into the weight. Rows force-included outside the sampling
/// scheme sit at the tail (the last `forced` entries) with weight 1.
struct WeightedCoreset {
  std::vector<std::size_t> indices;
  std::vector<double> u;
  std::vector<std::size_t> multiplicity;
  /// Number of sampled draws (excludes forced rows).
  std::size_t k = 0;
  std::size_t forced = 0;
  /// Unnormalized sampling scores over the whole population (0 for forced rows).
  std::vector<double> scores;
  double total_score = 0.0;
  std::uint64_t seed = 0;

  std::size_t population() const noexcept { return scores.size(); }
  std::size_t distinct() const noexcept { return indices.size(); }
};

/// Writes `index,u,score` rows with shortest round-trip float formatting.
void write_coreset_csv(const WeightedCoreset& coreset, const std::string& path);

/// Reads index/u/score rows back; population-level fields are not restored.
WeightedCoreset read_coreset_csv(const std::string& path);

}  // namespace irt
