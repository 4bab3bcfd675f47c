#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace irt {

/// Block-pairwise accumulator. Terms are summed sequentially inside fixed
/// blocks of 128 and block totals are merged in a binary tree, so the result
/// depends only on the order of add() calls.
template <class T>
class PairwiseSum {
 public:
  static constexpr std::size_t kBlock = 128;

  explicit PairwiseSum(T zero = T{}) : zero_(zero), block_(zero) {
    levels_.fill(zero);
  }

  void add(const T& term) {
    block_ += term;
    if (++in_block_ == kBlock) flush_block();
  }

  T total() const {
    T acc = block_;
    for (std::size_t lvl = 0; lvl < levels_.size(); ++lvl)
      if (occupied_ & (std::size_t{1} << lvl)) acc += levels_[lvl];
    return acc;
  }

 private:
  void flush_block() {
    T carry = block_;
    std::size_t lvl = 0;
    while (occupied_ & (std::size_t{1} << lvl)) {
      carry += levels_[lvl];
      levels_[lvl] = zero_;
      occupied_ &= ~(std::size_t{1} << lvl);
      ++lvl;
    }
    levels_[lvl] = carry;
    occupied_ |= std::size_t{1} << lvl;
    block_ = zero_;
    in_block_ = 0;
  }

  T zero_;
  T block_;
  std::size_t in_block_ = 0;
  std::size_t occupied_ = 0;
  std::array<T, 48> levels_{};
};

inline double pairwise_sum(std::span<const double> xs) {
  PairwiseSum<double> acc;
  for (double x : xs) acc.add(x);
  return acc.total();
}

}  // namespace irt
