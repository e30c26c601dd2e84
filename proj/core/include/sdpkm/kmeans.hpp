#pragma once

#include "sdpkm/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sdpkm {

/// Partition of N points into exactly k nonempty clusters, labels 0-based.
class Assignment {
 public:
  /// Throws std::invalid_argument if a label is outside [0, k) or a cluster
  /// is empty.
  Assignment(std::vector<int> labels, int k);

  const std::vector<int>& labels() const noexcept { return labels_; }
  int label(int n) const { return labels_.at(static_cast<std::size_t>(n)); }
  int k() const noexcept { return k_; }
  int size() const noexcept { return static_cast<int>(labels_.size()); }

  std::vector<int> cluster_sizes() const;
  /// Indicator vector pi_i (length N, entries 0/1).
  Eigen::VectorXd indicator(int cluster) const;

  /// Relabels clusters in order of first appearance. Two assignments
  /// describe the same partition iff their canonical forms are equal.
  Assignment canonical() const;
  bool same_partition(const Assignment& other) const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<int> labels_;
  int k_;
};

/// Labels may leave clusters empty here; lloyd-style code repairs them.
Assignment repair_empty_clusters(const DataSet& ds, std::vector<int> labels, int k);

/// D x k matrix of cluster means.
Eigen::MatrixXd centroids(const DataSet& ds, const Assignment& a);

/// sum_n ||x_n - c_{a(n)}||^2 with c the cluster means.
double kmeans_objective(const DataSet& ds, const Assignment& a);

/// tr(X^T X) - sum_i tr(X^T X pi_i pi_i^T) / (e^T pi_i).
double kmeans_objective_gram(const DataSet& ds, const Assignment& a);

/// tr(X^T X) - tr(X^T X Y) for an arbitrary N x N matrix Y.
double gram_form(const DataSet& ds, const Eigen::MatrixXd& y);
/// 1/2 tr(D Y) with D the squared-distance matrix.
double distance_form(const DataSet& ds, const Eigen::MatrixXd& y);

/// sum_i pi_i pi_i^T / (e^T pi_i): the relaxation point induced by a partition.
Eigen::MatrixXd partition_matrix(const Assignment& a);

/// Nonnegative N x K matrix with orthonormal columns u_i = pi_i / sqrt(e^T pi_i).
struct StiefelFactor {
  Eigen::MatrixXd u;
};

StiefelFactor assignment_to_stiefel(const Assignment& a);

/// Inverse of assignment_to_stiefel. Checks nonnegativity, orthonormality and
/// sum_i u_i u_i^T e = e to `tol`; throws std::invalid_argument naming the
/// violated constraint.
Assignment stiefel_to_assignment(const StiefelFactor& f, double tol = 1e-6);

/// One Lloyd iteration: means of `a`, then nearest-mean reassignment (ties to
/// the smallest index), then empty-cluster repair.
Assignment lloyd_step(const DataSet& ds, const Assignment& a);

struct LloydOptions {
  int max_iters = 300;
};

/// Lloyd's algorithm from k distinct data points sampled with `seed`.
Assignment lloyd_full(const DataSet& ds, int k, std::uint64_t seed, LloydOptions opts = {});

/// Nearest-center labels for every point (ties to the smallest index).
std::vector<int> nearest_center(const DataSet& ds, const Eigen::MatrixXd& centers);

}  // namespace sdpkm
