#pragma once

#include <cstdint>
#include <vector>

namespace wsp::detail {

/// Lexicographic enumeration of restricted-growth strings: a[0] = 0 and
/// a[i] <= max(a[0..i-1]) + 1. Each string encodes one set partition of
/// {0, ..., n-1}; block numbers appear in first-occurrence order.
class RestrictedGrowthStrings {
 public:
  explicit RestrictedGrowthStrings(std::size_t n)
      : digits_(n, 0), fresh_(n == 0) {}

  /// Current string; n = 0 has the single empty partition.
  const std::vector<std::uint32_t>& current() const noexcept { return digits_; }

  std::uint32_t block_count() const noexcept {
    std::uint32_t max = 0;
    for (std::uint32_t d : digits_)
      if (d > max) max = d;
    return digits_.empty() ? 0 : max + 1;
  }

  /// Advance to the lexicographic successor; false once exhausted.
  bool advance() {
    if (fresh_) return false;
    for (std::size_t i = digits_.size(); i-- > 1;) {
      std::uint32_t prefix_max = 0;
      for (std::size_t j = 0; j < i; ++j)
        if (digits_[j] > prefix_max) prefix_max = digits_[j];
      if (digits_[i] <= prefix_max) {
        ++digits_[i];
        for (std::size_t j = i + 1; j < digits_.size(); ++j) digits_[j] = 0;
        return true;
      }
    }
    fresh_ = true;
    return false;
  }

 private:
  std::vector<std::uint32_t> digits_;
  bool fresh_;
};

/// Bell number, saturating at uint64 max (triangle recurrence).
inline std::uint64_t bell_number(std::size_t n) {
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<std::uint64_t> next(i + 1);
    next[0] = row.back();
    for (std::size_t j = 1; j <= i; ++j) {
      std::uint64_t sum = next[j - 1] + row[j - 1];
      if (sum < next[j - 1]) sum = UINT64_MAX;  // overflow clamp
      next[j] = sum;
    }
    row = std::move(next);
  }
  return row[0];
}

}  // namespace wsp::detail
