#pragma once

#include "sdpkm/conic/problem.hpp"
#include "sdpkm/conic/solver.hpp"
#include "sdpkm/dataset.hpp"

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace sdpkm {

/// The relaxation hierarchy, tightest first: Z* >= R0 = R0bar >= R1 >= R2.
enum class Relaxation { R0, R0Bar, R1, R2 };

std::string to_string(Relaxation r);
Relaxation relaxation_from_string(const std::string& name);

/// How the k-means objective enters the cost vector. Both agree on every
/// feasible point because all relaxations force the aggregate row sums to 1.
enum class ObjectiveForm {
  /// 1/2 tr(D Y) with D the squared distances; objective_offset = 0.
  Distance,
  /// -tr(X^T X Y) with objective_offset = tr(X^T X).
  Gram,
};

/// Storage of the bordered lifted blocks of R0 and R0bar.
enum class LiftedEncoding {
  /// Each block is stored whole, order 2N+3, with every structural row.
  Full,
  /// Each block is the order N+2 moment matrix Z of (u, 1, w). The full
  /// block is recovered as B Z B^T with s = w e - u and the border equal to
  /// the `one` column; the feasible sets coincide.
  Reduced,
  /// Only V per block, with V DNN, its trace, and V(n,n) >= V(n,m). This is
  /// the closure of the projection of the lifted feasible set onto V, so the
  /// optimal value is the same. The lifted problem does not attain it in
  /// general: z can only be pushed to infinity, which stalls first-order
  /// solvers, while this form is attained and small.
  Compact,
};

std::string to_string(LiftedEncoding e);
LiftedEncoding lifted_encoding_from_string(const std::string& name);

struct BuildOptions {
  ObjectiveForm objective = ObjectiveForm::Distance;
  LiftedEncoding lifted = LiftedEncoding::Full;
  /// R0bar only: keep the unit entries of the second bordered block exactly
  /// as displayed (border "1", corner K-1) instead of scaling them to K-1.
  /// Needs LiftedEncoding::Full since the other forms tie border to `one`.
  bool literal_r0bar_border = false;
};

/// Forces point `point` into cluster `cluster` via e_point^T V_cluster e = 1.
struct Pin {
  int cluster;
  int point;

  friend bool operator==(const Pin&, const Pin&) = default;
};

// Lifted block layout, order 2N+3 (0-based):
//   [0, N)        V rows/cols        N        the constant 1
//   [N+1, 2N+1)   s rows/cols        2N+1     w (diag entry z)
//   2N+2          border p = (u, 1, s, w, 1)
struct LiftedLayout {
  int n;
  int one() const noexcept { return n; }
  int s_begin() const noexcept { return n + 1; }
  int wz() const noexcept { return 2 * n + 1; }
  int border() const noexcept { return 2 * n + 2; }
  int order() const noexcept { return 2 * n + 3; }
};

/// A bordered block [[Q, p], [p^T, corner]] with named views. For R0bar the
/// same views carry W, gamma, eta, rho, psi, theta, beta, Sigma, Theta.
struct LiftedBlock {
  Eigen::MatrixXd m;

  int n() const noexcept { return static_cast<int>((m.rows() - 3) / 2); }
  LiftedLayout layout() const noexcept { return {n()}; }

  Eigen::MatrixXd v() const { return m.topLeftCorner(n(), n()); }
  Eigen::VectorXd u() const { return m.block(0, n(), n(), 1); }
  Eigen::VectorXd s() const { return m.block(n() + 1, n(), n(), 1); }
  double w() const { return m(2 * n() + 1, n()); }
  Eigen::MatrixXd g() const { return m.block(0, n() + 1, n(), n()); }
  Eigen::VectorXd h() const { return m.block(0, 2 * n() + 1, n(), 1); }
  Eigen::MatrixXd y() const { return m.block(n() + 1, n() + 1, n(), n()); }
  Eigen::VectorXd r() const { return m.block(n() + 1, 2 * n() + 1, n(), 1); }
  double z() const { return m(2 * n() + 1, 2 * n() + 1); }
  Eigen::VectorXd border() const { return m.col(2 * n() + 2); }
};

struct R0Solution {
  /// V_i for every cluster.
  std::vector<Eigen::MatrixXd> v;
  /// Bordered block per cluster; empty under LiftedEncoding::Compact.
  std::vector<LiftedBlock> lifted;
};

struct R0BarSolution {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
  /// The two bordered blocks, the second with corner K-1; empty under
  /// LiftedEncoding::Compact.
  std::vector<LiftedBlock> lifted;
};

struct R1Solution {
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
};

struct R2Solution {
  Eigen::MatrixXd y;
};

/// Full order 2N+3 block from the reduced moment matrix of (u, 1, w).
Eigen::MatrixXd expand_lifted(const Eigen::MatrixXd& z);
/// Inverse of expand_lifted on blocks that satisfy the structural rows.
Eigen::MatrixXd reduce_lifted(const Eigen::MatrixXd& m);

using RelaxationSolution = std::variant<R0Solution, R0BarSolution, R1Solution, R2Solution>;

/// Sum of the cluster matrices: sum_i V_i, W_1 + W_2, or Y.
Eigen::MatrixXd aggregate_matrix(const RelaxationSolution& sol);

conic::ConicProblem build_r2(const DataSet& ds, int k, const BuildOptions& opts = {});
conic::ConicProblem build_r1(const DataSet& ds, int k, const BuildOptions& opts = {});
conic::ConicProblem build_r0bar(const DataSet& ds, int k, const BuildOptions& opts = {});
/// The pin (0, 0) is always present; listing it again is allowed. Throws
/// std::invalid_argument on duplicate or out-of-range pins.
conic::ConicProblem build_r0(const DataSet& ds, int k, const std::vector<Pin>& pins = {},
                             const BuildOptions& opts = {});
conic::ConicProblem build_relaxation(Relaxation r, const DataSet& ds, int k,
                                     const BuildOptions& opts = {});

struct Extraction {
  RelaxationSolution solution;
  /// c^T x + objective_offset.
  double value = 0.0;
  /// Human-readable invariant violations beyond the tolerance.
  std::vector<std::string> violations;
  double max_violation = 0.0;
};

/// Structured view of a solver result. Invariants are checked against
/// max(tol, absolute primal residual) and reported, never clipped. Throws
/// conic::ProblemError if the variable map does not match a known builder.
Extraction extract(const conic::ConicProblem& p, const conic::ConicSolution& sol,
                   double tol = 1e-6);

/// Inverse of extract: solver coordinates for a structured point.
Eigen::VectorXd to_solver_vector(const conic::ConicProblem& p, const RelaxationSolution& sol);

/// Max violation of Ax + s = b with s = b - Ax projected onto K, i.e. how
/// far `x` is from feasibility in absolute terms.
double feasibility_violation(const conic::ConicProblem& p, const Eigen::VectorXd& x);

/// c^T x + objective_offset.
double objective_value(const conic::ConicProblem& p, const Eigen::VectorXd& x);

/// Encoding of an R0 or R0bar problem, read from its variable map.
LiftedEncoding lifted_encoding(const conic::ConicProblem& p);

/// R0 -> R0bar: block 1 kept, blocks 2..K summed.
R0BarSolution aggregate_r0(const R0Solution& sol);
/// R0bar -> R0: block 1 kept, block 2 divided by K-1 and replicated.
R0Solution split_r0bar(const R0BarSolution& sol, int k);

/// Symbol -> coordinate listing for audit.
std::string index_map_listing(const conic::ConicProblem& p);

}  // namespace sdpkm
