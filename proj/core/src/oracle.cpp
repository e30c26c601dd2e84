#include "sdpkm/oracle.hpp"

#include <limits>
#include <string>
#include <vector>

namespace sdpkm {

PartitionLimitExceeded::PartitionLimitExceeded(std::uint64_t count, std::uint64_t limit)
    : std::runtime_error("exhaustive search needs S(N,k) = " +
                         (count == UINT64_MAX ? std::string("> 2^64") : std::to_string(count)) +
                         " partitions, limit is " + std::to_string(limit)),
      count_(count) {}

std::uint64_t stirling2(int n, int k) {
  if (n < 0 || k < 0) return 0;
  // S(i, j) = j S(i-1, j) + S(i-1, j-1), rolling over i.
  std::vector<std::uint64_t> row(static_cast<std::size_t>(k) + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::min(i, k); j >= 1; --j) {
      const auto jj = static_cast<std::size_t>(j);
      std::uint64_t a = 0;
      if (__builtin_mul_overflow(static_cast<std::uint64_t>(j), row[jj], &a) ||
          __builtin_add_overflow(a, row[jj - 1], &row[jj])) {
        row[jj] = UINT64_MAX;
      }
    }
    row[0] = 0;
  }
  return row[static_cast<std::size_t>(k)];
}

namespace {

class Enumerator {
 public:
  Enumerator(const Eigen::MatrixXd& centered, int k)
      : x_(centered),
        n_(static_cast<int>(centered.cols())),
        k_(k),
        sums_(Eigen::MatrixXd::Zero(centered.rows(), k)),
        counts_(static_cast<std::size_t>(k), 0),
        labels_(static_cast<std::size_t>(n_), 0),
        best_labels_(labels_) {}

  void run() { visit(0, 0); }

  const std::vector<int>& best_labels() const { return best_labels_; }
  std::uint64_t evaluated() const { return evaluated_; }

 private:
  // Maximizes sum_i ||S_i||^2 / |C_i|, equivalent to minimizing the objective.
  void visit(int n, int used) {
    if (n == n_) {
      ++evaluated_;
      double explained = 0.0;
      for (int i = 0; i < k_; ++i) {
        explained += sums_.col(i).squaredNorm() / counts_[static_cast<std::size_t>(i)];
      }
      if (explained > best_) {
        best_ = explained;
        best_labels_ = labels_;
      }
      return;
    }
    const int remaining = n_ - n;
    // b == used opens a new block.
    for (int b = 0; b <= std::min(used, k_ - 1); ++b) {
      const int now_used = b == used ? used + 1 : used;
      if (k_ - now_used > remaining - 1) continue;
      labels_[static_cast<std::size_t>(n)] = b;
      sums_.col(b) += x_.col(n);
      ++counts_[static_cast<std::size_t>(b)];
      visit(n + 1, now_used);
      sums_.col(b) -= x_.col(n);
      --counts_[static_cast<std::size_t>(b)];
    }
  }

  const Eigen::MatrixXd& x_;
  int n_;
  int k_;
  Eigen::MatrixXd sums_;
  std::vector<int> counts_;
  std::vector<int> labels_;
  std::vector<int> best_labels_;
  double best_ = -std::numeric_limits<double>::infinity();
  std::uint64_t evaluated_ = 0;
};

}  // namespace

OracleResult solve_exact(const DataSet& ds, int k, std::uint64_t limit) {
  if (k < 1 || k > ds.size()) {
    throw std::invalid_argument("oracle: need 1 <= k <= N, got k = " + std::to_string(k));
  }
  const std::uint64_t count = stirling2(ds.size(), k);
  if (count > limit) throw PartitionLimitExceeded(count, limit);
  const Eigen::MatrixXd centered = ds.points().colwise() - ds.points().rowwise().mean();
  Enumerator e(centered, k);
  e.run();
  Assignment best(e.best_labels(), k);
  const double z = kmeans_objective(ds, best);
  return OracleResult{std::move(best), z, e.evaluated()};
}

}  // namespace sdpkm
