#pragma once

#include <cstdint>

#include "irt/model.hpp"

namespace irt {

struct TruncatedNormal {
  double mean;
  double sd;
  double lower;  // inclusive
  double upper;  // exclusive
};

struct GenConfig {
  std::size_t n = 1000;
  std::size_t m = 20;
  ModelKind model = ModelKind::TwoPL;
  std::uint64_t seed = 1;
  TruncatedNormal a{2.75, 0.3, 0.0, 1e300};
  TruncatedNormal b{0.0, 1.0, -1e300, 1e300};
  TruncatedNormal theta{0.0, 1.0, -1e300, 1e300};
  /// sd 0.1, not variance 0.1.
  TruncatedNormal c{0.1, 0.1, 0.0, 0.5};

  void validate() const;
};

struct SyntheticData {
  ResponseMatrix y;
  ItemParameters items;
  AbilityParameters abilities;
};

/// Each parameter and each response draws from its own counter-derived
/// substream, so output depends only on the seed.
SyntheticData generate_synthetic(const GenConfig& config);

/// Rejection draw from a truncated normal using substream `stream` of `seed`.
double draw_truncated_normal(const TruncatedNormal& dist, std::uint64_t seed, std::uint64_t stream);

}  // namespace irt
