#include "sdpkm/conic/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace sdpkm::conic {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::MaxIters:
      return "max_iters";
    case SolveStatus::InfeasibleSuspected:
      return "infeasible_suspected";
  }
  return "unknown";
}

namespace {

using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ColMat = Eigen::SparseMatrix<double>;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Residuals compute_residuals(const ConicProblem& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const Eigen::VectorXd rp = p.a * x + s - p.b;
  const Eigen::VectorXd rd = p.a.transpose() * y + p.c;
  const double cx = p.c.dot(x);
  const double by = p.b.dot(y);
  return {inf_norm(rp) / (1.0 + inf_norm(p.b)), inf_norm(rd) / (1.0 + inf_norm(p.c)),
          std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by))};
}

struct SolverSession::Workspace {
  ConicProblem prob;
  SolverConfig cfg;

  // Equilibrated data: as = diag(e) A diag(d), cs = cost_scale * d .* c, bs = e .* b.
  RowMat as;
  Eigen::VectorXd d, e, cs, bs;
  double cost_scale = 1.0;

  // Row partition for the linear system: rows touching one variable fold
  // into a diagonal, short rows go into a sparse factor, long rows (row sums,
  // traces) would fill that factor and are handled by Woodbury instead.
  static constexpr int kLongRow = 10;
  std::vector<int> single_row, single_col;
  std::vector<double> single_val;
  std::vector<int> short_rows, long_rows;
  ColMat g_short;
  RowMat g_long;
  std::vector<bool> row_is_zero_cone;

  double rho = 0.1;
  Eigen::VectorXd r;      // per-row penalties
  Eigen::VectorXd delta;  // diagonal of sigma I + sum over single rows
  // P = Delta + G_s^T R_s G_s
  Eigen::SimplicialLLT<ColMat> p_llt;
  // W = P^{-1} G_l^T and the factor of  R_l^{-1} + G_l W.
  Eigen::MatrixXd w_long;
  Eigen::LLT<Eigen::MatrixXd> s_llt;
  int factor_count = 0;

  void equilibrate();
  void classify_rows();
  void set_rho(double value);
  void factor();
  Eigen::VectorXd solve_p(const Eigen::VectorXd& rhs) const;
  Eigen::VectorXd solve_linear(const Eigen::VectorXd& rhs) const;
  ConicSolution run();
};

void SolverSession::Workspace::equilibrate() {
  const int n = prob.num_vars();
  const int m = prob.num_rows();
  as = prob.a;
  d = Eigen::VectorXd::Ones(n);
  e = Eigen::VectorXd::Ones(m);
  for (int pass = 0; pass < cfg.ruiz_iters; ++pass) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < as.outerSize(); ++i) {
      for (RowMat::InnerIterator it(as, i); it; ++it) {
        const double v = std::abs(it.value());
        row(i) = std::max(row(i), v);
        col(it.col()) = std::max(col(it.col()), v);
      }
    }
    Eigen::VectorXd ds = col.unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
    Eigen::VectorXd es = row.unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
    // Non-separable cones need one scale per atom to stay invariant.
    int off = 0;
    for (const auto& c : prob.cones) {
      const int len = c.size();
      if (c.kind == ConeKind::SecondOrder || c.kind == ConeKind::Psd) {
        es.segment(off, len).setConstant(es.segment(off, len).mean());
      }
      off += len;
    }
    as = es.asDiagonal() * as * ds.asDiagonal();
    d = d.cwiseProduct(ds);
    e = e.cwiseProduct(es);
  }
  cs = d.cwiseProduct(prob.c);
  const double cmax = inf_norm(cs);
  cost_scale = cmax > 0.0 ? std::clamp(1.0 / cmax, 1e-4, 1e4) : 1.0;
  cs *= cost_scale;
  bs = e.cwiseProduct(prob.b);
}

void SolverSession::Workspace::classify_rows() {
  const int m = prob.num_rows();
  row_is_zero_cone.assign(static_cast<std::size_t>(m), false);
  int off = 0;
  for (const auto& c : prob.cones) {
    if (c.kind == ConeKind::Zero) {
      for (int r = off; r < off + c.size(); ++r) row_is_zero_cone[static_cast<std::size_t>(r)] = true;
    }
    off += c.size();
  }
  std::vector<Eigen::Triplet<double>> strip, ltrip;
  for (int i = 0; i < m; ++i) {
    const auto nnz = as.outerIndexPtr()[i + 1] - as.outerIndexPtr()[i];
    if (nnz == 1) {
      RowMat::InnerIterator it(as, i);
      single_row.push_back(i);
      single_col.push_back(static_cast<int>(it.col()));
      single_val.push_back(it.value());
      continue;
    }
    if (nnz == 0) continue;
    auto& rows = nnz < kLongRow ? short_rows : long_rows;
    auto& trip = nnz < kLongRow ? strip : ltrip;
    const int gi = static_cast<int>(rows.size());
    rows.push_back(i);
    for (RowMat::InnerIterator it(as, i); it; ++it) {
      trip.emplace_back(gi, static_cast<int>(it.col()), it.value());
    }
  }
  g_short.resize(static_cast<Eigen::Index>(short_rows.size()), prob.num_vars());
  g_short.setFromTriplets(strip.begin(), strip.end());
  g_long.resize(static_cast<Eigen::Index>(long_rows.size()), prob.num_vars());
  g_long.setFromTriplets(ltrip.begin(), ltrip.end());
}

void SolverSession::Workspace::set_rho(double value) {
  rho = value;
  const int m = prob.num_rows();
  r.resize(m);
  for (int i = 0; i < m; ++i) {
    r(i) = row_is_zero_cone[static_cast<std::size_t>(i)] ? rho * cfg.rho_eq_scale : rho;
  }
  factor();
}

namespace {

Eigen::VectorXd penalties(const Eigen::VectorXd& r, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = r(rows[i]);
  return out;
}

}  // namespace

void SolverSession::Workspace::factor() {
  delta = Eigen::VectorXd::Constant(prob.num_vars(), cfg.sigma);
  for (std::size_t k = 0; k < single_row.size(); ++k) {
    delta(single_col[k]) += r(single_row[k]) * single_val[k] * single_val[k];
  }
  if (!short_rows.empty()) {
    const Eigen::VectorXd rs = penalties(r, short_rows);
    ColMat pm = ColMat(g_short.transpose()) * rs.asDiagonal() * g_short;
    for (Eigen::Index i = 0; i < pm.rows(); ++i) pm.coeffRef(i, i) += delta(i);
    p_llt.compute(pm);
    if (p_llt.info() != Eigen::Success) {
      throw std::runtime_error("sparse Cholesky factorization failed");
    }
  }
  if (!long_rows.empty()) {
    const Eigen::MatrixXd glt = Eigen::MatrixXd(g_long.transpose());
    w_long.resize(glt.rows(), glt.cols());
    for (Eigen::Index j = 0; j < glt.cols(); ++j) w_long.col(j) = solve_p(glt.col(j));
    Eigen::MatrixXd schur = g_long * w_long;
    schur.diagonal() += penalties(r, long_rows).cwiseInverse();
    s_llt.compute(schur);
    if (s_llt.info() != Eigen::Success) {
      throw std::runtime_error("dense Cholesky factorization failed");
    }
  }
  ++factor_count;
}

Eigen::VectorXd SolverSession::Workspace::solve_p(const Eigen::VectorXd& rhs) const {
  if (short_rows.empty()) return rhs.cwiseQuotient(delta);
  return p_llt.solve(rhs);
}

Eigen::VectorXd SolverSession::Workspace::solve_linear(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd t = solve_p(rhs);
  if (long_rows.empty()) return t;
  const Eigen::VectorXd z = s_llt.solve(g_long * t);
  t.noalias() -= w_long * z;
  return t;
}

namespace {

/// Type-II Anderson acceleration over a ring buffer of iterate and residual
/// differences. Least squares via regularized normal equations.
class Anderson {
 public:
  Anderson(int memory, Eigen::Index dim) : mem_(memory), dw_(dim, memory), dg_(dim, memory),
        gram_(memory, memory) {}

  void reset() {
    count_ = 0;
    have_prev_ = false;
  }

  /// Feeds the input `w` of the plain map and its residual `g` = T(w) - w.
  /// Returns false when no accelerated point is available yet; otherwise
  /// writes it into `out`.
  bool step(const Eigen::VectorXd& w, const Eigen::VectorXd& g, Eigen::VectorXd& out) {
    if (mem_ == 0) return false;
    if (have_prev_) {
      const int col = head_;
      dw_.col(col) = w - w_prev_;
      dg_.col(col) = g - g_prev_;
      head_ = (head_ + 1) % mem_;
      count_ = std::min(count_ + 1, mem_);
      for (int j = 0; j < count_; ++j) {
        const double v = dg_.col(col).dot(dg_.col(j));
        gram_(col, j) = v;
        gram_(j, col) = v;
      }
    }
    w_prev_ = w;
    g_prev_ = g;
    have_prev_ = true;
    if (count_ == 0) return false;

    const Eigen::MatrixXd h = gram_.topLeftCorner(count_, count_);
    const double reg = 1e-10 * std::max(h.diagonal().maxCoeff(), 1e-300);
    const Eigen::VectorXd rhs = dg_.leftCols(count_).transpose() * g;
    const Eigen::VectorXd gamma =
        (h + reg * Eigen::MatrixXd::Identity(count_, count_)).ldlt().solve(rhs);
    if (!gamma.allFinite()) {
      reset();
      return false;
    }
    out = w + g - (dw_.leftCols(count_) + dg_.leftCols(count_)) * gamma;
    return out.allFinite();
  }

 private:
  int mem_;
  int head_ = 0;
  int count_ = 0;
  bool have_prev_ = false;
  Eigen::MatrixXd dw_, dg_, gram_;
  Eigen::VectorXd w_prev_, g_prev_;
};

}  // namespace

ConicSolution SolverSession::Workspace::run() {
  const Eigen::Index n = prob.num_vars();
  const Eigen::Index m = prob.num_rows();
  const Eigen::Index dim = n + 2 * m;
  // State w = (x, s, y) in scaled coordinates; `w` is the input of the next
  // plain step and `t` its output.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd t(dim), g(dim), accel(dim), fallback(dim);
  Eigen::VectorXd rhs(n), xt(n), st(m), sh(m);
  const double alpha = cfg.alpha;

  auto plain_step = [&](const Eigen::VectorXd& in, Eigen::VectorXd& o) {
    const auto x = in.head(n);
    const auto s = in.segment(n, m);
    const auto y = in.tail(m);
    rhs = cfg.sigma * x - cs + as.transpose() * (r.cwiseProduct(bs - s) - y);
    xt = solve_linear(rhs);
    st = bs - as * xt;
    sh = alpha * st + (1.0 - alpha) * s;
    o.head(n) = alpha * xt + (1.0 - alpha) * x;
    auto snew = o.segment(n, m);
    snew = sh - y.cwiseQuotient(r);
    Eigen::VectorXd proj = snew;
    project_cone(prob.cones, proj);
    snew = proj;
    o.tail(m) = y + r.cwiseProduct(snew - sh);
  };

  // Weights (1, sqrt(r), 1/sqrt(r)): the metric in which the plain step is
  // nonexpansive, so residual norms compare like with like.
  Eigen::VectorXd metric(dim);
  auto set_metric = [&] {
    metric.head(n).setOnes();
    metric.segment(n, m) = r.cwiseSqrt();
    metric.tail(m) = r.cwiseSqrt().cwiseInverse();
  };
  set_metric();
  Anderson aa(cfg.anderson_memory, dim);
  bool accelerated = false;
  double plain_norm = 0.0;

  ConicSolution out;
  bool stopped = false;
  auto unscale = [&](ConicSolution& sol) {
    sol.x = d.cwiseProduct(t.head(n));
    sol.s = t.segment(n, m).cwiseQuotient(e);
    sol.y = e.cwiseProduct(t.tail(m)) / cost_scale;
  };

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    plain_step(w, t);
    g = t - w;
    const double gnorm = metric.cwiseProduct(g).norm();
    if (accelerated && !(gnorm <= cfg.anderson_safeguard * plain_norm)) {
      // The accelerated point did worse than the plain iterate it replaced.
      w = fallback;
      aa.reset();
      plain_step(w, t);
      g = t - w;
    }
    plain_norm = metric.cwiseProduct(g).norm();
    fallback = t;
    accelerated = aa.step(metric.cwiseProduct(w), metric.cwiseProduct(g), accel);
    w = accelerated ? Eigen::VectorXd(accel.cwiseQuotient(metric)) : t;

    const bool last = it + 1 == cfg.max_iters;
    if ((it + 1) % cfg.check_every != 0 && !last) continue;

    if (!t.allFinite()) {
      out.status = SolveStatus::InfeasibleSuspected;
      stopped = true;
      ++it;
      break;
    }
    unscale(out);
    const Residuals res = compute_residuals(prob, out.x, out.s, out.y);
    out.primal_residual = res.primal;
    out.dual_residual = res.dual;
    out.gap = res.gap;
    if (cfg.verbose) {
      std::fprintf(stderr, "iter %6d  pres %.3e  dres %.3e  gap %.3e  rho %.2e\n", it + 1,
                   res.primal, res.dual, res.gap, rho);
    }
    if (std::max({res.primal, res.dual, res.gap}) <= cfg.tol) {
      out.status = SolveStatus::Optimal;
      stopped = true;
      ++it;
      break;
    }
    if (inf_norm(out.y) > 1e12 * (1.0 + inf_norm(prob.c))) {
      out.status = SolveStatus::InfeasibleSuspected;
      stopped = true;
      ++it;
      break;
    }
    if (cfg.adaptive_rho) {
      const auto x = t.head(n);
      const auto s = t.segment(n, m);
      const auto y = t.tail(m);
      const Eigen::VectorXd ax = as * x;
      const Eigen::VectorXd aty = as.transpose() * y;
      const double pr = inf_norm(ax + s - bs) /
                        std::max({inf_norm(ax), inf_norm(s), inf_norm(bs), 1e-12});
      const double du = inf_norm(aty + cs) / std::max({inf_norm(aty), inf_norm(cs), 1e-12});
      if (pr > 0.0 && du > 0.0) {
        const double proposed = std::clamp(rho * std::sqrt(pr / du), 1e-6, 1e6);
        if (proposed > 5.0 * rho || proposed < 0.2 * rho) {
          set_rho(proposed);
          // The fixed-point map changed; restart from the last plain iterate.
          w = t;
          set_metric();
          aa.reset();
          accelerated = false;
        }
      }
    }
  }
  if (!stopped) out.status = SolveStatus::MaxIters;
  out.iterations = it;
  unscale(out);
  const Residuals res = compute_residuals(prob, out.x, out.s, out.y);
  out.primal_residual = res.primal;
  out.dual_residual = res.dual;
  out.gap = res.gap;
  out.primal_objective = prob.c.dot(out.x) + prob.objective_offset;
  out.dual_objective = -prob.b.dot(out.y) + prob.objective_offset;
  out.factorizations = factor_count;
  return out;
}

SolverSession::SolverSession(ConicProblem problem, SolverConfig cfg)
    : ws_(std::make_unique<Workspace>()) {
  problem.validate();
  if (cfg.tol <= 0.0 || cfg.max_iters < 1 || cfg.check_every < 1 || cfg.rho <= 0.0 ||
      cfg.sigma <= 0.0 || cfg.alpha <= 0.0 || cfg.alpha >= 2.0 || cfg.anderson_memory < 0 ||
      cfg.anderson_safeguard <= 0.0) {
    throw ProblemError("invalid solver configuration");
  }
  ws_->prob = std::move(problem);
  ws_->cfg = cfg;
  ws_->equilibrate();
  ws_->classify_rows();
  ws_->set_rho(cfg.rho);
}

SolverSession::~SolverSession() = default;
SolverSession::SolverSession(SolverSession&&) noexcept = default;
SolverSession& SolverSession::operator=(SolverSession&&) noexcept = default;

ConicSolution SolverSession::solve() {
  if (ws_->rho != ws_->cfg.rho) ws_->set_rho(ws_->cfg.rho);
  return ws_->run();
}

void SolverSession::update_rhs(const Eigen::VectorXd& b) {
  if (b.size() != ws_->prob.num_rows()) throw ProblemError("rhs length mismatch");
  ws_->prob.b = b;
  ws_->bs = ws_->e.cwiseProduct(b);
}

const ConicProblem& SolverSession::problem() const noexcept { return ws_->prob; }
const SolverConfig& SolverSession::config() const noexcept { return ws_->cfg; }
int SolverSession::factorizations() const noexcept { return ws_->factor_count; }

ConicSolution solve(const ConicProblem& problem, const SolverConfig& cfg) {
  SolverSession session(problem, cfg);
  return session.solve();
}

}  // namespace sdpkm::conic
