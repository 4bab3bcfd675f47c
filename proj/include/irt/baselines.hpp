#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "irt/model.hpp"
#include "irt/weighted_coreset.hpp"

namespace irt {

enum class BaselineKind { Uniform, DistanceSampling, L1Leverage, LewisL1 };

BaselineKind parse_baseline_kind(std::string_view name);
std::string_view to_string(BaselineKind kind);

/// k i.i.d. uniform draws, each carrying weight n/k.
WeightedCoreset uniform_coreset(std::size_t n, std::size_t k, std::uint64_t seed);

/// k-means++ seeds `centers` centers; scores d^2 / sum d^2 + 1/n.
WeightedCoreset distance_sampling_coreset(std::span<const Vec2> points, std::size_t k,
                                          std::size_t centers, std::uint64_t seed);

/// l1 leverage or l1 Lewis weights plus a 1/n floor.
WeightedCoreset score_based_coreset(BaselineKind kind, std::span<const Vec2> rows, std::size_t k,
                                    std::uint64_t seed);

/// The k-means++ centers used by distance sampling (exposed for tests).
std::vector<Vec2> kmeanspp_centers(std::span<const Vec2> points, std::size_t centers,
                                   std::uint64_t seed);

}  // namespace irt
