#pragma once

#include "sdpkm/conic/cones.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdpkm::conic {

/// Structural defect in a problem (dimension mismatch, bad variable map).
class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Named, contiguous range of solver coordinates. When `psd_order` > 0 the
/// range holds svec of a symmetric matrix of that order.
struct VariableBlock {
  std::string name;
  int offset = 0;
  int length = 0;
  int psd_order = 0;

  friend bool operator==(const VariableBlock&, const VariableBlock&) = default;
};

/// Standard form:  minimize c^T x  subject to  A x + s = b,  s in K.
/// The dual is  maximize -b^T y  subject to  A^T y + c = 0,  y in K*.
struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a;
  Eigen::VectorXd b;
  ConeSpec cones;
  std::vector<VariableBlock> variable_map;
  /// Added to c^T x when reporting objective values.
  double objective_offset = 0.0;
  /// Free-form tag identifying the producer (e.g. "r2").
  std::string label;
  /// Cluster count the producer was built for; 0 when not applicable.
  int clusters = 0;

  int num_vars() const noexcept { return static_cast<int>(c.size()); }
  int num_rows() const noexcept { return static_cast<int>(b.size()); }

  /// Throws ProblemError on any structural inconsistency.
  void validate() const;

  const VariableBlock& block(std::string_view name) const;
};

/// Self-describing JSON container: dimensions, cone list, A as triplets,
/// b, c, variable map and objective offset.
std::string dump_problem_json(const ConicProblem& p);
ConicProblem parse_problem_json(std::string_view text);

/// sum_j coef_j x_j + constant.
struct Affine {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  Affine& add(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
};

/// Assembles a ConicProblem from affine slack expressions: each added row
/// states  s_r = affine_r(x)  with s_r governed by the row's cone, which the
/// builder turns into A row = -terms, b = constant.
class ProblemBuilder {
 public:
  /// Reserves `length` coordinates; returns the offset.
  int add_variables(std::string name, int length, int psd_order = 0);
  /// Reserves svec(n) coordinates for an order-n symmetric matrix.
  int add_matrix(std::string name, int n) { return add_variables(std::move(name), svec_size(n), n); }

  void add_cost(int var, double coef);
  void set_objective_offset(double v) { offset_ = v; }

  /// affine == 0.
  void add_zero(const Affine& row);
  /// affine >= 0 componentwise.
  void add_nonneg(const Affine& row);
  /// (x, t) rows in order, t last.
  void add_soc(const std::vector<Affine>& rows);
  /// svec(M) of an order-n matrix given entrywise in svec order.
  void add_psd(int n, const std::vector<Affine>& svec_rows);

  int num_vars() const noexcept { return nvars_; }
  int num_rows() const noexcept { return static_cast<int>(rhs_.size()); }

  ConicProblem build(std::string label) const;

 private:
  void push_row(const Affine& row);
  void push_cone(Cone c);

  int nvars_ = 0;
  std::vector<VariableBlock> map_;
  std::vector<std::pair<int, double>> cost_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<double> rhs_;
  ConeSpec cones_;
  double offset_ = 0.0;
};

}  // namespace sdpkm::conic
