#pragma once

#include <cstdint>
#include <span>

#include "irt/weighted_coreset.hpp"

namespace irt {

enum class SamplingMethod { IIDAlias, ChaoReservoir };

/// IIDAlias: k i.i.d. draws with p_j = s_j / S, duplicates folded into
/// u_j = mult_j * S / (k s_j). ChaoReservoir: one-pass weighted sample of k
/// distinct rows, u_j = 1 / pi_j with pi_j = min(1, k s_j / S) after capping.
WeightedCoreset sample_weighted(std::span<const double> scores, std::size_t k, std::uint64_t seed,
                                SamplingMethod method = SamplingMethod::IIDAlias);

/// Final inclusion probabilities of the Chao reservoir for sample size k.
std::vector<double> chao_inclusion_probabilities(std::span<const double> scores, std::size_t k);

}  // namespace irt
