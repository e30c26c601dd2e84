#include "sdpkm/kmeans.hpp"

#include "sdpkm/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdpkm {

Assignment::Assignment(std::vector<int> labels, int k) : labels_(std::move(labels)), k_(k) {
  if (k_ < 1) throw std::invalid_argument("cluster count must be >= 1");
  std::vector<int> counts(static_cast<std::size_t>(k_), 0);
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    const int l = labels_[n];
    if (l < 0 || l >= k_) {
      throw std::invalid_argument("label " + std::to_string(l) + " of point " +
                                  std::to_string(n) + " outside [0, " + std::to_string(k_) + ")");
    }
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int i = 0; i < k_; ++i) {
    if (counts[static_cast<std::size_t>(i)] == 0) {
      throw std::invalid_argument("cluster " + std::to_string(i) + " is empty");
    }
  }
}

std::vector<int> Assignment::cluster_sizes() const {
  std::vector<int> counts(static_cast<std::size_t>(k_), 0);
  for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

Eigen::VectorXd Assignment::indicator(int cluster) const {
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(size());
  for (int n = 0; n < size(); ++n) {
    if (labels_[static_cast<std::size_t>(n)] == cluster) pi(n) = 1.0;
  }
  return pi;
}

Assignment Assignment::canonical() const {
  std::vector<int> remap(static_cast<std::size_t>(k_), -1);
  std::vector<int> out(labels_.size());
  int next = 0;
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    int& m = remap[static_cast<std::size_t>(labels_[n])];
    if (m < 0) m = next++;
    out[n] = m;
  }
  return Assignment(std::move(out), k_);
}

bool Assignment::same_partition(const Assignment& other) const {
  return k_ == other.k_ && canonical().labels_ == other.canonical().labels_;
}

Eigen::MatrixXd centroids(const DataSet& ds, const Assignment& a) {
  if (a.size() != ds.size()) throw std::invalid_argument("assignment size mismatch");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ds.dim(), a.k());
  const auto sizes = a.cluster_sizes();
  for (int n = 0; n < ds.size(); ++n) c.col(a.label(n)) += ds.points().col(n);
  for (int i = 0; i < a.k(); ++i) c.col(i) /= static_cast<double>(sizes[static_cast<std::size_t>(i)]);
  return c;
}

double kmeans_objective(const DataSet& ds, const Assignment& a) {
  const Eigen::MatrixXd c = centroids(ds, a);
  double total = 0.0;
  for (int n = 0; n < ds.size(); ++n) {
    total += (ds.points().col(n) - c.col(a.label(n))).squaredNorm();
  }
  return total;
}

double kmeans_objective_gram(const DataSet& ds, const Assignment& a) {
  if (a.size() != ds.size()) throw std::invalid_argument("assignment size mismatch");
  double value = ds.gram_trace();
  for (int i = 0; i < a.k(); ++i) {
    const Eigen::VectorXd pi = a.indicator(i);
    value -= pi.dot(ds.gram() * pi) / pi.sum();
  }
  return value;
}

double gram_form(const DataSet& ds, const Eigen::MatrixXd& y) {
  return ds.gram_trace() - (ds.gram().cwiseProduct(y)).sum();
}

double distance_form(const DataSet& ds, const Eigen::MatrixXd& y) {
  return 0.5 * (ds.sqdist().cwiseProduct(y)).sum();
}

Eigen::MatrixXd partition_matrix(const Assignment& a) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(a.size(), a.size());
  for (int i = 0; i < a.k(); ++i) {
    const Eigen::VectorXd pi = a.indicator(i);
    y += pi * pi.transpose() / pi.sum();
  }
  return y;
}

StiefelFactor assignment_to_stiefel(const Assignment& a) {
  StiefelFactor f{Eigen::MatrixXd::Zero(a.size(), a.k())};
  for (int i = 0; i < a.k(); ++i) {
    const Eigen::VectorXd pi = a.indicator(i);
    f.u.col(i) = pi / std::sqrt(pi.sum());
  }
  return f;
}

Assignment stiefel_to_assignment(const StiefelFactor& f, double tol) {
  const Eigen::MatrixXd& u = f.u;
  const auto n = u.rows();
  const auto k = u.cols();
  if (n < 1 || k < 1) throw std::invalid_argument("empty Stiefel factor");
  if (u.minCoeff() < -tol) throw std::invalid_argument("nonnegativity violated: min entry " +
                                                       std::to_string(u.minCoeff()));
  const Eigen::MatrixXd gram = u.transpose() * u;
  const double ortho = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (ortho > tol) {
    throw std::invalid_argument("orthonormality violated by " + std::to_string(ortho));
  }
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd pis = u * (u.transpose() * e).asDiagonal();  // column i: u_i u_i^T e
  const double row_sum = (pis.rowwise().sum() - e).cwiseAbs().maxCoeff();
  if (row_sum > tol) {
    throw std::invalid_argument("row-sum constraint sum_i u_i u_i^T e = e violated by " +
                                std::to_string(row_sum));
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) {
    Eigen::Index best = 0;
    pis.row(p).maxCoeff(&best);
    labels[static_cast<std::size_t>(p)] = static_cast<int>(best);
  }
  return Assignment(std::move(labels), static_cast<int>(k));
}

std::vector<int> nearest_center(const DataSet& ds, const Eigen::MatrixXd& centers) {
  std::vector<int> labels(static_cast<std::size_t>(ds.size()));
  for (int n = 0; n < ds.size(); ++n) {
    int best = 0;
    double best_d = (ds.points().col(n) - centers.col(0)).squaredNorm();
    for (int i = 1; i < centers.cols(); ++i) {
      const double d = (ds.points().col(n) - centers.col(i)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    labels[static_cast<std::size_t>(n)] = best;
  }
  return labels;
}

Assignment repair_empty_clusters(const DataSet& ds, std::vector<int> labels, int k) {
  if (k > ds.size()) throw std::invalid_argument("more clusters than points");
  if (static_cast<int>(labels.size()) != ds.size()) {
    throw std::invalid_argument("label count does not match dataset");
  }
  for (;;) {
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    const auto empty = std::find(counts.begin(), counts.end(), 0);
    if (empty == counts.end()) break;
    // Move the point farthest from its own mean, taken from a cluster that
    // can spare it.
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(ds.dim(), k);
    for (int n = 0; n < ds.size(); ++n) {
      means.col(labels[static_cast<std::size_t>(n)]) += ds.points().col(n);
    }
    for (int i = 0; i < k; ++i) {
      if (counts[static_cast<std::size_t>(i)] > 0) {
        means.col(i) /= static_cast<double>(counts[static_cast<std::size_t>(i)]);
      }
    }
    int far = -1;
    double far_d = -1.0;
    for (int n = 0; n < ds.size(); ++n) {
      const int l = labels[static_cast<std::size_t>(n)];
      if (counts[static_cast<std::size_t>(l)] < 2) continue;
      const double d = (ds.points().col(n) - means.col(l)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = n;
      }
    }
    labels[static_cast<std::size_t>(far)] = static_cast<int>(empty - counts.begin());
  }
  return Assignment(std::move(labels), k);
}

Assignment lloyd_step(const DataSet& ds, const Assignment& a) {
  return repair_empty_clusters(ds, nearest_center(ds, centroids(ds, a)), a.k());
}

Assignment lloyd_full(const DataSet& ds, int k, std::uint64_t seed, LloydOptions opts) {
  if (k < 1 || k > ds.size()) {
    throw std::invalid_argument("lloyd: need 1 <= k <= N, got k = " + std::to_string(k) +
                                ", N = " + std::to_string(ds.size()));
  }
  Rng rng(seed);
  std::vector<int> idx(static_cast<std::size_t>(ds.size()));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd init(ds.dim(), k);
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(idx.size() - static_cast<std::size_t>(i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    init.col(i) = ds.points().col(idx[static_cast<std::size_t>(i)]);
  }
  Assignment current = repair_empty_clusters(ds, nearest_center(ds, init), k);
  for (int it = 0; it < opts.max_iters; ++it) {
    Assignment next = lloyd_step(ds, current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

}  // namespace sdpkm
