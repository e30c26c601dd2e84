#pragma once

#include "sdpkm/conic/problem.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>

namespace sdpkm::conic {

enum class SolveStatus { Optimal, MaxIters, InfeasibleSuspected };

std::string to_string(SolveStatus s);

struct SolverConfig {
  /// Relative tolerance on primal residual, dual residual and duality gap.
  double tol = 1e-5;
  int max_iters = 50'000;
  /// Ruiz equilibration passes over A.
  int ruiz_iters = 10;
  double rho = 0.1;
  /// Penalty multiplier for equality (Zero cone) rows.
  double rho_eq_scale = 1e3;
  double sigma = 1e-6;
  /// Over-relaxation in (0, 2).
  double alpha = 1.6;
  bool adaptive_rho = true;
  /// Anderson acceleration memory; 0 runs plain ADMM.
  int anderson_memory = 0;
  /// An accelerated point is kept only if its fixed-point residual is at
  /// most this factor times that of the plain iterate it replaced.
  double anderson_safeguard = 1.0;
  /// Residuals are evaluated every `check_every` iterations.
  int check_every = 25;
  bool verbose = false;
};

/// Residuals are measured in infinity norm on the unscaled problem:
///   primal = ||Ax + s - b|| / (1 + ||b||)
///   dual   = ||A^T y + c|| / (1 + ||c||)
///   gap    = |c^T x + b^T y| / (1 + |c^T x| + |b^T y|)
struct ConicSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  SolveStatus status = SolveStatus::MaxIters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  /// c^T x + objective_offset.
  double primal_objective = 0.0;
  /// -b^T y + objective_offset.
  double dual_objective = 0.0;
  int factorizations = 0;
};

/// Residuals of an arbitrary (x, s, y) triple, using the definitions above.
struct Residuals {
  double primal;
  double dual;
  double gap;
};
Residuals compute_residuals(const ConicProblem& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& s, const Eigen::VectorXd& y);

/// Operator-splitting (ADMM) solver with a private workspace. The linear
/// system  (sigma I + A^T R A) x = rhs  is reduced through the rows of A that
/// touch a single variable: those fold into a diagonal Delta. Short rows G_s
/// join a sparse Cholesky factor of  P = Delta + G_s^T R_s G_s; long rows
/// G_l (row sums, traces) enter through Woodbury with a dense factor of
/// R_l^{-1} + G_l P^{-1} G_l^T. Factors are cached across iterations and
/// across solves that only change b.
class SolverSession {
 public:
  /// Validates and equilibrates `problem`. Throws ProblemError on structural
  /// defects.
  SolverSession(ConicProblem problem, SolverConfig cfg = {});
  ~SolverSession();
  SolverSession(SolverSession&&) noexcept;
  SolverSession& operator=(SolverSession&&) noexcept;

  ConicSolution solve();

  /// Replaces b; the cached factorization stays valid.
  void update_rhs(const Eigen::VectorXd& b);

  const ConicProblem& problem() const noexcept;
  const SolverConfig& config() const noexcept;
  /// Number of factorizations performed over the session's lifetime.
  int factorizations() const noexcept;

 private:
  struct Workspace;
  std::unique_ptr<Workspace> ws_;
};

ConicSolution solve(const ConicProblem& problem, const SolverConfig& cfg = {});

}  // namespace sdpkm::conic
