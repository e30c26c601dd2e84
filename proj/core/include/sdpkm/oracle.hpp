#pragma once

#include "sdpkm/dataset.hpp"
#include "sdpkm/kmeans.hpp"

#include <cstdint>
#include <stdexcept>

namespace sdpkm {

/// Thrown by solve_exact when the search space exceeds the caller's limit.
class PartitionLimitExceeded : public std::runtime_error {
 public:
  PartitionLimitExceeded(std::uint64_t count, std::uint64_t limit);
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_;
};

/// Stirling number of the second kind S(n, k), saturating at UINT64_MAX.
std::uint64_t stirling2(int n, int k);

struct OracleResult {
  Assignment best;
  double zstar;
  std::uint64_t partitions_evaluated;
};

inline constexpr std::uint64_t kDefaultPartitionLimit = 5'000'000;

/// Globally optimal k-means by enumerating every partition into exactly k
/// nonempty blocks as restricted-growth strings in lexicographic order.
/// Ties keep the first partition found.
OracleResult solve_exact(const DataSet& ds, int k, std::uint64_t limit = kDefaultPartitionLimit);

}  // namespace sdpkm
