#pragma once

#include "sdpkm/dataset.hpp"
#include "sdpkm/kmeans.hpp"
#include "sdpkm/random.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <vector>

namespace sdpkm::test {

inline DataSet random_data(Rng& rng, int d, int n, double spread = 1.0) {
  Eigen::MatrixXd x(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) x(i, j) = spread * rng.normal();
  }
  return DataSet(x);
}

/// Points grouped into k well separated blobs along the first axis.
inline DataSet blob_data(Rng& rng, int d, int n, int k, double gap = 3.0) {
  Eigen::MatrixXd x(d, n);
  for (int j = 0; j < n; ++j) {
    const int c = j * k / n;
    for (int i = 0; i < d; ++i) x(i, j) = rng.normal() + (i == 0 ? gap * c : 0.0);
  }
  return DataSet(x);
}

/// Labels with every cluster nonempty: the first k points seed the clusters.
inline std::vector<int> random_labels(Rng& rng, int n, int k) {
  std::vector<int> l(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) l[static_cast<std::size_t>(j)] = j < k ? j : static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  for (int j = n - 1; j > 0; --j) std::swap(l[static_cast<std::size_t>(j)], l[rng.below(static_cast<std::uint64_t>(j + 1))]);
  return l;
}

/// Within-cluster scatter from explicit centroid loops.
inline double scatter(const DataSet& ds, const std::vector<int>& labels, int k) {
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim());
    int count = 0;
    for (int j = 0; j < ds.size(); ++j) {
      if (labels[static_cast<std::size_t>(j)] == c) {
        mean += ds.points().col(j);
        ++count;
      }
    }
    if (count == 0) return std::numeric_limits<double>::infinity();
    mean /= count;
    for (int j = 0; j < ds.size(); ++j) {
      if (labels[static_cast<std::size_t>(j)] == c) total += (ds.points().col(j) - mean).squaredNorm();
    }
  }
  return total;
}

/// Best scatter over all labelings in [k]^N with every cluster used; an
/// independent brute force over label vectors rather than set partitions.
inline double brute_force_zstar(const DataSet& ds, int k) {
  const int n = ds.size();
  std::vector<int> l(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int)> rec = [&](int j) {
    if (j == n) {
      best = std::min(best, scatter(ds, l, k));
      return;
    }
    for (int c = 0; c < k; ++c) {
      l[static_cast<std::size_t>(j)] = c;
      rec(j + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace sdpkm::test
