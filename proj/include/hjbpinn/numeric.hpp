#pragma once

#include <cstddef>
#include <span>

namespace hjbpinn {

inline constexpr std::size_t kSumChunk = 256;

/// Sequential sums over fixed chunks of kSumChunk, combined pairwise. The
/// reduction tree depends only on the length, so results are reproducible.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= kSumChunk) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t chunks = (v.size() + kSumChunk - 1) / kSumChunk;
  const std::size_t half = (chunks / 2) * kSumChunk;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace hjbpinn
