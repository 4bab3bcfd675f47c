#include "irt/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <vector>

#include "irt/error.hpp"
#include "irt/rng.hpp"
#include "irt/summation.hpp"

namespace irt {
namespace {

void check_scores(std::span<const double> scores, std::size_t k) {
  require(k >= 1, ErrorCode::InvalidArgument, "sample size k must be >= 1");
  bool positive = false;
  for (double s : scores) {
    require(std::isfinite(s) && s >= 0.0, ErrorCode::InvalidArgument,
            "scores must be finite and nonnegative");
    positive = positive || s > 0.0;
  }
  require(positive, ErrorCode::InvalidArgument, "at least one score must be positive");
}

// Vose's alias method.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> p) : prob_(p.size()), alias_(p.size()) {
    const std::size_t n = p.size();
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = p[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t i : large) prob_[i] = 1.0, alias_[i] = i;
    for (std::size_t i : small) prob_[i] = 1.0, alias_[i] = i;
  }

  std::size_t draw(std::uint64_t column_bits, std::uint64_t coin_bits) const {
    const std::size_t col = static_cast<std::size_t>(
        CounterRng::to_unit(column_bits) * static_cast<double>(prob_.size()));
    const std::size_t c = std::min(col, prob_.size() - 1);
    return CounterRng::to_unit(coin_bits) < prob_[c] ? c : alias_[c];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

WeightedCoreset sample_alias(std::span<const double> scores, std::size_t k, std::uint64_t seed,
                             double total) {
  std::vector<double> p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = scores[i] / total;
  const AliasTable table(p);
  const CounterRng rng(seed, 0xA11A5ull);
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t d = 0; d < k; ++d) ++counts[table.draw(rng.at(2 * d), rng.at(2 * d + 1))];

  WeightedCoreset out;
  for (const auto& [j, mult] : counts) {
    out.indices.push_back(j);
    out.multiplicity.push_back(mult);
    out.u.push_back(static_cast<double>(mult) * total / (static_cast<double>(k) * scores[j]));
  }
  return out;
}

// Capping state: rows whose k s / W would reach 1 are held with probability 1,
// the rest share the remaining budget k_u in proportion to weight over W_u.
struct Capping {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> capped;
  double uncapped_weight = 0.0;
  std::size_t uncapped_budget = 0;

  double pi(double w, bool is_capped) const {
    if (is_capped) return 1.0;
    return std::min(1.0, static_cast<double>(uncapped_budget) * w / uncapped_weight);
  }
};

WeightedCoreset sample_chao(std::span<const double> scores, std::size_t k, std::uint64_t seed) {
  const std::size_t n = scores.size();
  const CounterRng rng(seed, 0xC4A0ull);
  std::vector<char> is_capped(n, 0);
  std::vector<std::size_t> reservoir;
  reservoir.reserve(k);
  Capping cap;

  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = scores[i];
    if (w <= 0.0) continue;
    ++t;
    if (reservoir.size() < k) {
      reservoir.push_back(i);
      is_capped[i] = 1;
      cap.capped.push({w, i});
      continue;
    }
    const double ratio_before =
        cap.uncapped_weight > 0 ? static_cast<double>(cap.uncapped_budget) / cap.uncapped_weight : 0.0;

    // Insert the new row as uncapped, then restore the capping fixed point.
    cap.uncapped_weight += w;
    std::vector<std::size_t> released;
    bool new_capped = false;
    for (bool changed = true; changed;) {
      changed = false;
      if (!new_capped && static_cast<double>(cap.uncapped_budget) * w >= cap.uncapped_weight &&
          cap.uncapped_budget > 0) {
        new_capped = true;
        cap.uncapped_weight -= w;
        --cap.uncapped_budget;
        changed = true;
      }
      if (!cap.capped.empty()) {
        const auto [wc, jc] = cap.capped.top();
        if (static_cast<double>(cap.uncapped_budget + 1) * wc < cap.uncapped_weight + wc) {
          cap.capped.pop();
          is_capped[jc] = 0;
          cap.uncapped_weight += wc;
          ++cap.uncapped_budget;
          released.push_back(jc);
          changed = true;
        }
      }
      if (new_capped && static_cast<double>(cap.uncapped_budget + 1) * w < cap.uncapped_weight + w) {
        new_capped = false;
        cap.uncapped_weight += w;
        ++cap.uncapped_budget;
        changed = true;
      }
    }
    const double pi_new = cap.pi(w, new_capped);
    const double ratio_after =
        cap.uncapped_weight > 0 ? static_cast<double>(cap.uncapped_budget) / cap.uncapped_weight : 0.0;
    if (CounterRng::to_unit(rng.at(2 * t)) < pi_new) {
      // Evict: released rows with (1 - pi_j) / pi_new, otherwise uniformly
      // among rows that were uncapped before this step.
      double coin = CounterRng::to_unit(rng.at(2 * t + 1)) * pi_new;
      std::size_t victim = n;
      for (std::size_t j : released) {
        coin -= 1.0 - cap.pi(scores[j], false);
        if (coin < 0.0) {
          victim = j;
          break;
        }
      }
      std::vector<std::size_t> slots;
      if (victim == n) {
        for (std::size_t s = 0; s < reservoir.size(); ++s) {
          const std::size_t j = reservoir[s];
          if (is_capped[j]) continue;
          if (std::find(released.begin(), released.end(), j) != released.end()) continue;
          slots.push_back(s);
        }
        const double each = ratio_before > 0 ? 1.0 - ratio_after / ratio_before : 0.0;
        std::size_t pick = each > 0 ? static_cast<std::size_t>(coin / each) : slots.size();
        if (pick >= slots.size()) pick = slots.empty() ? 0 : slots.size() - 1;
        if (!slots.empty()) victim = reservoir[slots[pick]];
      }
      if (victim == n) {
        // Numerical leftover: evict the lightest uncapped member.
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j : reservoir)
          if (!is_capped[j] && scores[j] < best) best = scores[j], victim = j;
      }
      if (victim != n) {
        *std::find(reservoir.begin(), reservoir.end(), victim) = i;
      }
    }
    if (new_capped) {
      is_capped[i] = 1;
      cap.capped.push({w, i});
    }
  }

  std::sort(reservoir.begin(), reservoir.end());
  WeightedCoreset out;
  for (std::size_t j : reservoir) {
    out.indices.push_back(j);
    out.multiplicity.push_back(1);
    out.u.push_back(1.0 / cap.pi(scores[j], is_capped[j] != 0));
  }
  return out;
}

}  // namespace

std::vector<double> chao_inclusion_probabilities(std::span<const double> scores, std::size_t k) {
  check_scores(scores, k);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });
  double rest = pairwise_sum(scores);
  std::size_t budget = k;
  std::vector<double> pi(scores.size(), 0.0);
  std::size_t c = 0;
  while (c < order.size() && budget > 0 && static_cast<double>(budget) * scores[order[c]] >= rest) {
    pi[order[c]] = 1.0;
    rest -= scores[order[c]];
    --budget;
    ++c;
  }
  for (; c < order.size(); ++c)
    pi[order[c]] = rest > 0 ? std::min(1.0, static_cast<double>(budget) * scores[order[c]] / rest) : 0.0;
  return pi;
}

WeightedCoreset sample_weighted(std::span<const double> scores, std::size_t k, std::uint64_t seed,
                                SamplingMethod method) {
  check_scores(scores, k);
  const double total = pairwise_sum(scores);
  WeightedCoreset out = method == SamplingMethod::IIDAlias ? sample_alias(scores, k, seed, total)
                                                           : sample_chao(scores, k, seed);
  out.k = method == SamplingMethod::IIDAlias ? k : out.indices.size();
  out.scores.assign(scores.begin(), scores.end());
  out.total_score = total;
  out.seed = seed;
  return out;
}

}  // namespace irt
