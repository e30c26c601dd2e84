#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace sdpkm {

/// Raised when input data is malformed (non-finite values, ragged CSV rows).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point matrix X (D features x N points) with its Gram matrix X^T X and
/// pairwise squared distances. Immutable after construction.
class DataSet {
 public:
  /// Validates finiteness and precomputes the derived matrices.
  /// Throws DataError naming the first offending (row, column) entry.
  explicit DataSet(Eigen::MatrixXd points);

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::MatrixXd& sqdist() const noexcept { return sqdist_; }

  int dim() const noexcept { return static_cast<int>(points_.rows()); }
  int size() const noexcept { return static_cast<int>(points_.cols()); }

  /// tr(X^T X).
  double gram_trace() const noexcept { return gram_.trace(); }

  /// Same data, every coordinate multiplied by `factor`.
  DataSet scaled(double factor) const { return DataSet(points_ * factor); }

 private:
  Eigen::MatrixXd points_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd sqdist_;
};

/// Equivalent to constructing a DataSet; kept as a named entry point.
DataSet load_dataset(const Eigen::MatrixXd& points);

/// Reads a headerless CSV with one point per row and transposes to D x N.
DataSet read_csv(const std::filesystem::path& path);
DataSet parse_csv(const std::string& text);

/// Writes one point per row, 12 significant digits.
void write_csv(const DataSet& ds, const std::filesystem::path& path);
std::string format_csv(const DataSet& ds);

}  // namespace sdpkm
