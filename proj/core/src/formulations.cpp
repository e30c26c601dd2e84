#include "sdpkm/formulations.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sdpkm {

using conic::Affine;
using conic::ConicProblem;
using conic::ProblemBuilder;
using conic::ProblemError;

std::string to_string(Relaxation r) {
  switch (r) {
    case Relaxation::R0:
      return "r0";
    case Relaxation::R0Bar:
      return "r0bar";
    case Relaxation::R1:
      return "r1";
    case Relaxation::R2:
      return "r2";
  }
  return "unknown";
}

Relaxation relaxation_from_string(const std::string& name) {
  if (name == "r0") return Relaxation::R0;
  if (name == "r0bar") return Relaxation::R0Bar;
  if (name == "r1") return Relaxation::R1;
  if (name == "r2") return Relaxation::R2;
  throw std::invalid_argument("unknown relaxation '" + name + "'");
}

std::string to_string(LiftedEncoding e) {
  switch (e) {
    case LiftedEncoding::Full:
      return "full";
    case LiftedEncoding::Reduced:
      return "reduced";
    case LiftedEncoding::Compact:
      return "compact";
  }
  return "unknown";
}

LiftedEncoding lifted_encoding_from_string(const std::string& name) {
  if (name == "full") return LiftedEncoding::Full;
  if (name == "reduced") return LiftedEncoding::Reduced;
  if (name == "compact") return LiftedEncoding::Compact;
  throw std::invalid_argument("unknown lifted encoding '" + name + "'");
}

namespace {

void check_k(const DataSet& ds, int k) {
  if (k < 1 || k > ds.size()) {
    throw std::invalid_argument("need 1 <= k <= N, got k = " + std::to_string(k) +
                                ", N = " + std::to_string(ds.size()));
  }
}

/// Entry (row, col) of the symmetric matrix stored at `offset`.
struct MatrixVar {
  int offset;
  int order;

  int index(int row, int col) const { return offset + conic::svec_index(row, col); }
  double scale(int row, int col) const { return conic::svec_entry_scale(row, col); }
  /// Adds coef * M(row, col) to `a`.
  void add(Affine& a, int row, int col, double coef) const {
    a.add(index(row, col), coef * scale(row, col));
  }
};

/// A lifted block addressed in full (order 2N+3) coordinates. In the reduced
/// encoding the stored matrix is Z = moment matrix of (u, 1, w), order N+2,
/// and the full block is B Z B^T with s = w e - u and the border equal to
/// the `one` column.
struct LiftedVar {
  MatrixVar stored;
  int n;
  bool reduced;

  int full_order() const { return 2 * n + 3; }

  /// Full index -> (stored index, coefficient) combination.
  std::vector<std::pair<int, double>> rep(int a) const {
    if (!reduced) return {{a, 1.0}};
    const LiftedLayout L{n};
    if (a < n) return {{a, 1.0}};
    if (a == L.one() || a == L.border()) return {{n, 1.0}};
    if (a == L.wz()) return {{n + 1, 1.0}};
    return {{n + 1, 1.0}, {a - L.s_begin(), -1.0}};
  }

  void add(Affine& t, int a, int b, double coef) const {
    for (const auto& [i, ci] : rep(a)) {
      for (const auto& [j, cj] : rep(b)) stored.add(t, i, j, coef * ci * cj);
    }
  }
};

/// Sorts terms, merges duplicates and drops zeros.
Affine canonical(const Affine& a) {
  Affine out;
  out.constant = a.constant;
  std::vector<std::pair<int, double>> t = a.terms;
  std::sort(t.begin(), t.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [var, coef] : t) {
    if (!out.terms.empty() && out.terms.back().first == var) {
      out.terms.back().second += coef;
    } else {
      out.terms.emplace_back(var, coef);
    }
  }
  std::erase_if(out.terms, [](const auto& term) { return std::abs(term.second) < 1e-14; });
  return out;
}

/// Adds canonical rows, skipping identities (0 = 0) and exact repeats.
class RowSink {
 public:
  explicit RowSink(ProblemBuilder& pb) : pb_(pb) {}

  void zero(const Affine& row) {
    const Affine c = canonical(row);
    if (c.terms.empty()) {
      if (std::abs(c.constant) > 1e-14) throw ProblemError("infeasible constant row");
      return;
    }
    if (seen_zero_.insert(key(c)).second) pb_.add_zero(c);
  }

  void nonneg(const Affine& row) {
    const Affine c = canonical(row);
    if (c.terms.empty()) {
      if (c.constant < -1e-14) throw ProblemError("infeasible constant row");
      return;
    }
    if (seen_nonneg_.insert(key(c)).second) pb_.add_nonneg(c);
  }

 private:
  static std::vector<double> key(const Affine& a) {
    std::vector<double> k{a.constant};
    for (const auto& [var, coef] : a.terms) {
      k.push_back(var);
      k.push_back(coef);
    }
    return k;
  }

  ProblemBuilder& pb_;
  std::set<std::vector<double>> seen_zero_;
  std::set<std::vector<double>> seen_nonneg_;
};

void add_psd_rows(ProblemBuilder& pb, const MatrixVar& mv) {
  const int len = conic::svec_size(mv.order);
  std::vector<Affine> rows(static_cast<std::size_t>(len));
  for (int j = 0; j < len; ++j) rows[static_cast<std::size_t>(j)].add(mv.offset + j, 1.0);
  pb.add_psd(mv.order, rows);
}

/// Doubly nonnegative membership: every distinct entry >= 0 and svec(M) in PSD.
void add_dnn(ProblemBuilder& pb, const MatrixVar& mv) {
  const int len = conic::svec_size(mv.order);
  for (int j = 0; j < len; ++j) pb.add_nonneg(Affine{}.add(mv.offset + j, 1.0));
  add_psd_rows(pb, mv);
}

/// Cost of the k-means objective on an N x N cluster matrix occupying rows
/// and columns [0, N) of `mv`.
void add_objective(ProblemBuilder& pb, const DataSet& ds, const MatrixVar& mv,
                   ObjectiveForm form) {
  const int n = ds.size();
  for (int q = 0; q < n; ++q) {
    for (int p = 0; p <= q; ++p) {
      // Both triangles contribute for p != q.
      const double mult = p == q ? 1.0 : 2.0;
      const double coef = form == ObjectiveForm::Distance ? 0.5 * ds.sqdist()(p, q)
                                                          : -ds.gram()(p, q);
      if (coef != 0.0) pb.add_cost(mv.index(p, q), mult * coef * mv.scale(p, q));
    }
  }
}

double objective_offset(const DataSet& ds, ObjectiveForm form) {
  return form == ObjectiveForm::Gram ? ds.gram_trace() : 0.0;
}

/// Structural rows of one lifted block. `corner` is the bottom-right entry,
/// `mid` the value of Q(one, one) and of the border's copy of it. Rows that
/// the reduced encoding satisfies identically are dropped by the sink.
void add_lifted_block(ProblemBuilder& pb, const LiftedVar& lv, double corner, double mid,
                      double trace) {
  const int n = lv.n;
  const LiftedLayout L{n};
  const int one = L.one(), wz = L.wz(), bd = L.border();
  RowSink rows(pb);

  Affine a;
  lv.add(a, one, one, 1.0);
  a.constant = -mid;
  rows.zero(a);
  a = {};
  lv.add(a, bd, bd, 1.0);
  a.constant = -corner;
  rows.zero(a);
  a = {};
  lv.add(a, one, bd, 1.0);
  a.constant = -mid;
  rows.zero(a);

  // Border column repeats column `one` of Q: p = (u, 1, s, w).
  for (int j = 0; j < bd; ++j) {
    if (j == one) continue;
    Affine t;
    lv.add(t, j, bd, 1.0);
    lv.add(t, j, one, -1.0);
    rows.zero(t);
  }

  Affine tr;
  for (int p = 0; p < n; ++p) lv.add(tr, p, p, 1.0);
  tr.constant = -trace;
  rows.zero(tr);

  // diag(V) = h
  for (int p = 0; p < n; ++p) {
    Affine t;
    lv.add(t, p, p, 1.0);
    lv.add(t, p, wz, -1.0);
    rows.zero(t);
  }
  // u + s = w e
  for (int p = 0; p < n; ++p) {
    Affine t;
    lv.add(t, p, one, 1.0);
    lv.add(t, L.s_begin() + p, one, 1.0);
    lv.add(t, wz, one, -1.0);
    rows.zero(t);
  }
  // diag(V + Y + 2G) + z e - 2h - 2r = 0
  for (int p = 0; p < n; ++p) {
    const int sp = L.s_begin() + p;
    Affine t;
    lv.add(t, p, p, 1.0);
    lv.add(t, sp, sp, 1.0);
    lv.add(t, p, sp, 2.0);
    lv.add(t, wz, wz, 1.0);
    lv.add(t, p, wz, -2.0);
    lv.add(t, sp, wz, -2.0);
    rows.zero(t);
  }
  // (u, t) in SOC with t the fixed entry Q(one, one).
  std::vector<Affine> soc(static_cast<std::size_t>(n) + 1);
  for (int p = 0; p < n; ++p) lv.add(soc[static_cast<std::size_t>(p)], p, one, 1.0);
  lv.add(soc.back(), one, one, 1.0);
  pb.add_soc(soc);

  // Every distinct entry of the full block is nonnegative.
  for (int b = 0; b < lv.full_order(); ++b) {
    for (int c = 0; c <= b; ++c) {
      Affine t;
      lv.add(t, c, b, 1.0);
      rows.nonneg(t);
    }
  }
  add_psd_rows(pb, lv.stored);
}

/// Row sums of the [0, N) x [0, N) blocks of `mats`, one equality per point.
void add_row_sums(ProblemBuilder& pb, const std::vector<MatrixVar>& mats, int n) {
  for (int p = 0; p < n; ++p) {
    Affine t;
    for (const auto& mv : mats) {
      for (int q = 0; q < n; ++q) mv.add(t, p, q, 1.0);
    }
    t.constant = -1.0;
    pb.add_zero(t);
  }
}

/// e_point^T M e = 1 on the [0, N) block.
void add_pin(ProblemBuilder& pb, const MatrixVar& mv, int n, int point) {
  Affine t;
  for (int q = 0; q < n; ++q) mv.add(t, point, q, 1.0);
  t.constant = -1.0;
  pb.add_zero(t);
}

LiftedVar add_lifted_var(ProblemBuilder& pb, const std::string& name, int n, bool reduced) {
  const int order = reduced ? n + 2 : 2 * n + 3;
  return {{pb.add_matrix(name, order), order}, n, reduced};
}

/// Compact block: V DNN with the given trace and V(n,n) >= V(n,m), the
/// image of G = u s^T >= 0 once s and w are eliminated.
void add_compact_block(ProblemBuilder& pb, const MatrixVar& mv, double trace) {
  const int n = mv.order;
  Affine tr;
  for (int p = 0; p < n; ++p) mv.add(tr, p, p, 1.0);
  tr.constant = -trace;
  pb.add_zero(tr);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      Affine t;
      mv.add(t, p, p, 1.0);
      mv.add(t, p, q, -1.0);
      pb.add_nonneg(t);
    }
  }
  add_dnn(pb, mv);
}

/// Block names per relaxation and encoding; extraction keys off them.
std::string block_name(Relaxation r, LiftedEncoding e, int i) {
  const bool bar = r == Relaxation::R0Bar;
  switch (e) {
    case LiftedEncoding::Full:
      return (bar ? "A" : "M") + std::to_string(i + 1);
    case LiftedEncoding::Reduced:
      return (bar ? "ZB" : "Z") + std::to_string(i + 1);
    case LiftedEncoding::Compact:
      return (bar ? "W" : "V") + std::to_string(i + 1);
  }
  throw std::invalid_argument("unknown lifted encoding");
}

}  // namespace

Eigen::MatrixXd expand_lifted(const Eigen::MatrixXd& z) {
  const int n = static_cast<int>(z.rows()) - 2;
  if (n < 1 || z.cols() != z.rows()) throw std::invalid_argument("reduced block must be square, order >= 3");
  const LiftedLayout L{n};
  // B maps reduced coordinates (V, one, w) to the full layout.
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(L.order(), n + 2);
  for (int p = 0; p < n; ++p) {
    b(p, p) = 1.0;
    b(L.s_begin() + p, n + 1) = 1.0;
    b(L.s_begin() + p, p) = -1.0;
  }
  b(L.one(), n) = 1.0;
  b(L.border(), n) = 1.0;
  b(L.wz(), n + 1) = 1.0;
  return b * z * b.transpose();
}

Eigen::MatrixXd reduce_lifted(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>((m.rows() - 3) / 2);
  if (m.rows() != 2 * n + 3 || m.cols() != m.rows()) {
    throw std::invalid_argument("full block must be square of odd order >= 5");
  }
  std::vector<int> sel(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) sel[static_cast<std::size_t>(p)] = p;
  sel.push_back(n);
  sel.push_back(2 * n + 1);
  return m(sel, sel);
}

ConicProblem build_r2(const DataSet& ds, int k, const BuildOptions& opts) {
  check_k(ds, k);
  const int n = ds.size();
  ProblemBuilder pb;
  const MatrixVar y{pb.add_matrix("Y", n), n};
  add_objective(pb, ds, y, opts.objective);
  pb.set_objective_offset(objective_offset(ds, opts.objective));
  Affine tr;
  for (int p = 0; p < n; ++p) y.add(tr, p, p, 1.0);
  tr.constant = -static_cast<double>(k);
  pb.add_zero(tr);
  add_row_sums(pb, {y}, n);
  add_dnn(pb, y);
  auto prob = pb.build("r2");
  prob.clusters = k;
  return prob;
}

ConicProblem build_r1(const DataSet& ds, int k, const BuildOptions& opts) {
  check_k(ds, k);
  const int n = ds.size();
  ProblemBuilder pb;
  const MatrixVar w1{pb.add_matrix("W1", n), n};
  const MatrixVar w2{pb.add_matrix("W2", n), n};
  add_objective(pb, ds, w1, opts.objective);
  add_objective(pb, ds, w2, opts.objective);
  pb.set_objective_offset(objective_offset(ds, opts.objective));
  Affine t1, t2;
  for (int p = 0; p < n; ++p) {
    w1.add(t1, p, p, 1.0);
    w2.add(t2, p, p, 1.0);
  }
  t1.constant = -1.0;
  t2.constant = -static_cast<double>(k - 1);
  pb.add_zero(t1);
  pb.add_zero(t2);
  add_row_sums(pb, {w1, w2}, n);
  add_pin(pb, w1, n, 0);
  add_dnn(pb, w1);
  add_dnn(pb, w2);
  auto prob = pb.build("r1");
  prob.clusters = k;
  return prob;
}

ConicProblem build_r0bar(const DataSet& ds, int k, const BuildOptions& opts) {
  check_k(ds, k);
  const int n = ds.size();
  if (opts.lifted != LiftedEncoding::Full && opts.literal_r0bar_border) {
    throw std::invalid_argument("the literal R0bar border needs the full lifted encoding");
  }
  const double km1 = static_cast<double>(k - 1);
  ProblemBuilder pb;
  std::vector<MatrixVar> blocks;
  if (opts.lifted == LiftedEncoding::Compact) {
    for (int i = 0; i < 2; ++i) {
      blocks.push_back({pb.add_matrix(block_name(Relaxation::R0Bar, opts.lifted, i), n), n});
    }
    add_compact_block(pb, blocks[0], 1.0);
    add_compact_block(pb, blocks[1], km1);
  } else {
    const bool reduced = opts.lifted == LiftedEncoding::Reduced;
    const LiftedVar a1 = add_lifted_var(pb, block_name(Relaxation::R0Bar, opts.lifted, 0), n, reduced);
    const LiftedVar a2 = add_lifted_var(pb, block_name(Relaxation::R0Bar, opts.lifted, 1), n, reduced);
    add_lifted_block(pb, a1, 1.0, 1.0, 1.0);
    add_lifted_block(pb, a2, km1, opts.literal_r0bar_border ? 1.0 : km1, km1);
    blocks = {a1.stored, a2.stored};
  }
  for (const auto& mv : blocks) add_objective(pb, ds, mv, opts.objective);
  pb.set_objective_offset(objective_offset(ds, opts.objective));
  add_row_sums(pb, blocks, n);
  add_pin(pb, blocks[0], n, 0);
  auto prob = pb.build("r0bar");
  prob.clusters = k;
  return prob;
}

ConicProblem build_r0(const DataSet& ds, int k, const std::vector<Pin>& pins,
                      const BuildOptions& opts) {
  check_k(ds, k);
  const int n = ds.size();
  std::vector<Pin> all{{0, 0}};
  for (const auto& p : pins) {
    if (p.cluster < 0 || p.cluster >= k || p.point < 0 || p.point >= n) {
      throw std::invalid_argument("pin (" + std::to_string(p.cluster) + ", " +
                                  std::to_string(p.point) + ") out of range");
    }
    if (p == Pin{0, 0}) continue;
    for (const auto& q : all) {
      if (q.cluster == p.cluster || q.point == p.point) {
        throw std::invalid_argument("duplicate pin (" + std::to_string(p.cluster) + ", " +
                                    std::to_string(p.point) + ")");
      }
    }
    all.push_back(p);
  }
  ProblemBuilder pb;
  std::vector<MatrixVar> blocks;
  if (opts.lifted == LiftedEncoding::Compact) {
    for (int i = 0; i < k; ++i) {
      blocks.push_back({pb.add_matrix(block_name(Relaxation::R0, opts.lifted, i), n), n});
    }
    for (const auto& mv : blocks) add_compact_block(pb, mv, 1.0);
  } else {
    const bool reduced = opts.lifted == LiftedEncoding::Reduced;
    std::vector<LiftedVar> lifted;
    for (int i = 0; i < k; ++i) {
      lifted.push_back(add_lifted_var(pb, block_name(Relaxation::R0, opts.lifted, i), n, reduced));
      blocks.push_back(lifted.back().stored);
    }
    for (const auto& lv : lifted) add_lifted_block(pb, lv, 1.0, 1.0, 1.0);
  }
  for (const auto& mv : blocks) add_objective(pb, ds, mv, opts.objective);
  pb.set_objective_offset(objective_offset(ds, opts.objective));
  add_row_sums(pb, blocks, n);
  for (const auto& p : all) add_pin(pb, blocks[static_cast<std::size_t>(p.cluster)], n, p.point);
  auto prob = pb.build("r0");
  prob.clusters = k;
  return prob;
}

ConicProblem build_relaxation(Relaxation r, const DataSet& ds, int k, const BuildOptions& opts) {
  switch (r) {
    case Relaxation::R0:
      return build_r0(ds, k, {}, opts);
    case Relaxation::R0Bar:
      return build_r0bar(ds, k, opts);
    case Relaxation::R1:
      return build_r1(ds, k, opts);
    case Relaxation::R2:
      return build_r2(ds, k, opts);
  }
  throw std::invalid_argument("unknown relaxation");
}

Eigen::MatrixXd aggregate_matrix(const RelaxationSolution& sol) {
  return std::visit(
      [](const auto& s) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, R0Solution>) {
          Eigen::MatrixXd sum = s.v.front();
          for (std::size_t i = 1; i < s.v.size(); ++i) sum += s.v[i];
          return sum;
        } else if constexpr (std::is_same_v<T, R0BarSolution>) {
          return s.w1 + s.w2;
        } else if constexpr (std::is_same_v<T, R1Solution>) {
          return s.w1 + s.w2;
        } else {
          return s.y;
        }
      },
      sol);
}

namespace {

Eigen::MatrixXd block_matrix(const conic::VariableBlock& blk, const Eigen::VectorXd& x) {
  if (blk.psd_order < 1) throw ProblemError("block '" + blk.name + "' is not a matrix block");
  return conic::smat(x.segment(blk.offset, blk.length), blk.psd_order);
}

bool has_block(const ConicProblem& p, const std::string& name) {
  return std::any_of(p.variable_map.begin(), p.variable_map.end(),
                     [&](const auto& b) { return b.name == name; });
}

/// Matrix blocks of an R0 or R0bar problem in order, with their encoding.
std::pair<LiftedEncoding, std::vector<const conic::VariableBlock*>> lifted_blocks(
    const ConicProblem& p) {
  const Relaxation r = p.label == "r0bar" ? Relaxation::R0Bar : Relaxation::R0;
  for (const auto e : {LiftedEncoding::Full, LiftedEncoding::Reduced, LiftedEncoding::Compact}) {
    std::vector<const conic::VariableBlock*> found;
    for (int i = 0; has_block(p, block_name(r, e, i)); ++i) found.push_back(&p.block(block_name(r, e, i)));
    if (!found.empty()) return {e, found};
  }
  throw ProblemError(p.label + " problem without recognizable matrix blocks");
}

/// V and, when lifted, the full bordered block of each stored block.
void read_blocks(const ConicProblem& p, const Eigen::VectorXd& x, std::vector<Eigen::MatrixXd>& v,
                 std::vector<LiftedBlock>& lifted) {
  const auto [enc, blocks] = lifted_blocks(p);
  for (const auto* blk : blocks) {
    Eigen::MatrixXd m = block_matrix(*blk, x);
    if (enc == LiftedEncoding::Compact) {
      v.push_back(std::move(m));
      continue;
    }
    LiftedBlock lb{enc == LiftedEncoding::Reduced ? expand_lifted(m) : std::move(m)};
    v.push_back(lb.v());
    lifted.push_back(std::move(lb));
  }
}

class InvariantReport {
 public:
  explicit InvariantReport(double limit) : limit_(limit) {}

  void check(const std::string& what, double violation) {
    worst_ = std::max(worst_, violation);
    if (violation > limit_) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s violated by %.3e", what.c_str(), violation);
      messages_.emplace_back(buf);
    }
  }

  void nonneg(const std::string& what, const Eigen::MatrixXd& m) {
    check(what + " >= 0", std::max(0.0, -m.minCoeff()));
  }

  void psd(const std::string& what, const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    check(what + " PSD", std::max(0.0, -es.eigenvalues()(0)));
  }

  void equal(const std::string& what, double lhs, double rhs) { check(what, std::abs(lhs - rhs)); }

  void equal(const std::string& what, const Eigen::MatrixXd& lhs, const Eigen::MatrixXd& rhs) {
    check(what, (lhs - rhs).cwiseAbs().maxCoeff());
  }

  std::vector<std::string> take_messages() { return std::move(messages_); }
  double worst() const noexcept { return worst_; }

 private:
  double limit_;
  double worst_ = 0.0;
  std::vector<std::string> messages_;
};

/// Trace, DNN and the V(n,n) >= V(n,m) rows shared by every encoding.
void check_v(InvariantReport& rep, const std::string& tag, const Eigen::MatrixXd& v, double trace) {
  rep.equal("tr(V" + tag + ") = " + std::to_string(trace), v.trace(), trace);
  rep.nonneg("V" + tag, v);
  rep.psd("V" + tag, v);
  const Eigen::MatrixXd dom = v.diagonal().replicate(1, v.cols()) - v;
  rep.check("V" + tag + "(n,n) >= V" + tag + "(n,m)", std::max(0.0, -dom.minCoeff()));
}

void check_lifted(InvariantReport& rep, const std::string& tag, const LiftedBlock& b,
                  double corner) {
  const int n = b.n();
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(n);
  rep.equal("diag(V" + tag + ") = h" + tag, Eigen::MatrixXd(b.v().diagonal()),
            Eigen::MatrixXd(b.h()));
  rep.equal("u" + tag + " + s" + tag + " = w e", Eigen::MatrixXd(b.u() + b.s()),
            Eigen::MatrixXd(b.w() * e));
  const Eigen::VectorXd lin = (b.v() + b.y() + 2.0 * b.g()).diagonal() + b.z() * e - 2.0 * b.h() -
                              2.0 * b.r();
  rep.check("squared-equality system of block " + tag, lin.cwiseAbs().maxCoeff());
  rep.equal("corner of block " + tag, b.m(b.layout().border(), b.layout().border()), corner);
  rep.nonneg("block " + tag, b.m);
  rep.psd("block " + tag, b.m);
}

}  // namespace

Extraction extract(const ConicProblem& p, const conic::ConicSolution& sol, double tol) {
  if (sol.status == conic::SolveStatus::InfeasibleSuspected) {
    throw std::invalid_argument("cannot extract from a solve flagged infeasible");
  }
  if (sol.x.size() != p.num_vars()) throw ProblemError("solution length does not match problem");
  const double abs_primal = sol.primal_residual * (1.0 + p.b.cwiseAbs().maxCoeff());
  InvariantReport rep(std::max(tol, abs_primal));
  Extraction out{R2Solution{}, objective_value(p, sol.x), {}, 0.0};

  if (p.label == "r2") {
    R2Solution r{block_matrix(p.block("Y"), sol.x)};
    const int n = static_cast<int>(r.y.rows());
    // Row 0 is the trace row, stored as  -tr(Y) + s = -K.
    rep.equal("tr(Y) = K", r.y.trace(), p.clusters);
    rep.equal("Y e = e", Eigen::MatrixXd(r.y.rowwise().sum()),
              Eigen::MatrixXd(Eigen::VectorXd::Ones(n)));
    rep.nonneg("Y", r.y);
    rep.psd("Y", r.y);
    out.solution = std::move(r);
  } else if (p.label == "r1") {
    R1Solution r{block_matrix(p.block("W1"), sol.x), block_matrix(p.block("W2"), sol.x)};
    const int n = static_cast<int>(r.w1.rows());
    rep.equal("tr(W1) = 1", r.w1.trace(), 1.0);
    rep.equal("tr(W2) = K-1", r.w2.trace(), p.clusters - 1.0);
    rep.equal("W1 e + W2 e = e", Eigen::MatrixXd((r.w1 + r.w2).rowwise().sum()),
              Eigen::MatrixXd(Eigen::VectorXd::Ones(n)));
    rep.equal("e1^T W1 e = 1", r.w1.row(0).sum(), 1.0);
    rep.nonneg("W1", r.w1);
    rep.nonneg("W2", r.w2);
    rep.psd("W1", r.w1);
    rep.psd("W2", r.w2);
    out.solution = std::move(r);
  } else if (p.label == "r0bar") {
    std::vector<Eigen::MatrixXd> v;
    R0BarSolution r;
    read_blocks(p, sol.x, v, r.lifted);
    if (v.size() != 2) throw ProblemError("r0bar problem needs exactly two blocks");
    r.w1 = std::move(v[0]);
    r.w2 = std::move(v[1]);
    const int n = static_cast<int>(r.w1.rows());
    check_v(rep, "1", r.w1, 1.0);
    check_v(rep, "2", r.w2, p.clusters - 1.0);
    if (!r.lifted.empty()) {
      check_lifted(rep, "1", r.lifted[0], 1.0);
      const int bd = r.lifted[1].layout().border();
      check_lifted(rep, "2", r.lifted[1], r.lifted[1].m(bd, bd));
    }
    rep.equal("W1 e + W2 e = e", Eigen::MatrixXd((r.w1 + r.w2).rowwise().sum()),
              Eigen::MatrixXd(Eigen::VectorXd::Ones(n)));
    rep.equal("e1^T W1 e = 1", r.w1.row(0).sum(), 1.0);
    out.solution = std::move(r);
  } else if (p.label == "r0") {
    R0Solution r;
    read_blocks(p, sol.x, r.v, r.lifted);
    const int n = static_cast<int>(r.v.front().rows());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < r.v.size(); ++i) {
      check_v(rep, std::to_string(i + 1), r.v[i], 1.0);
      if (!r.lifted.empty()) check_lifted(rep, std::to_string(i + 1), r.lifted[i], 1.0);
      sum += r.v[i];
    }
    rep.equal("sum_i V_i e = e", Eigen::MatrixXd(sum.rowwise().sum()),
              Eigen::MatrixXd(Eigen::VectorXd::Ones(n)));
    rep.equal("e1^T V1 e = 1", r.v.front().row(0).sum(), 1.0);
    out.solution = std::move(r);
  } else {
    throw ProblemError("unknown problem label '" + p.label + "'");
  }
  out.max_violation = rep.worst();
  out.violations = rep.take_messages();
  return out;
}

Eigen::VectorXd to_solver_vector(const ConicProblem& p, const RelaxationSolution& sol) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.num_vars());
  auto put = [&](const conic::VariableBlock& blk, const Eigen::MatrixXd& m) {
    if (m.rows() != blk.psd_order || m.cols() != blk.psd_order) {
      throw ProblemError("matrix for block '" + blk.name + "' has the wrong order");
    }
    x.segment(blk.offset, blk.length) = conic::svec(m);
  };
  // Lifted problems need the bordered blocks; compact ones only V.
  auto put_blocks = [&](const std::vector<Eigen::MatrixXd>& v,
                        const std::vector<LiftedBlock>& lifted) {
    const auto [enc, blocks] = lifted_blocks(p);
    const std::size_t have = enc == LiftedEncoding::Compact ? v.size() : lifted.size();
    if (have != blocks.size()) {
      throw ProblemError("solution has " + std::to_string(have) + " blocks, problem needs " +
                         std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      switch (enc) {
        case LiftedEncoding::Compact:
          put(*blocks[i], v[i]);
          break;
        case LiftedEncoding::Reduced:
          put(*blocks[i], reduce_lifted(lifted[i].m));
          break;
        case LiftedEncoding::Full:
          put(*blocks[i], lifted[i].m);
          break;
      }
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, R0Solution>) {
          put_blocks(s.v, s.lifted);
        } else if constexpr (std::is_same_v<T, R0BarSolution>) {
          put_blocks({s.w1, s.w2}, s.lifted);
        } else if constexpr (std::is_same_v<T, R1Solution>) {
          put(p.block("W1"), s.w1);
          put(p.block("W2"), s.w2);
        } else {
          put(p.block("Y"), s.y);
        }
      },
      sol);
  return x;
}

double feasibility_violation(const ConicProblem& p, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = p.b - p.a * x;
  return conic::cone_violation(p.cones, s);
}

double objective_value(const ConicProblem& p, const Eigen::VectorXd& x) {
  return p.c.dot(x) + p.objective_offset;
}

LiftedEncoding lifted_encoding(const ConicProblem& p) {
  if (p.label != "r0" && p.label != "r0bar") {
    throw ProblemError("problem '" + p.label + "' has no lifted blocks");
  }
  return lifted_blocks(p).first;
}

R0BarSolution aggregate_r0(const R0Solution& sol) {
  if (sol.v.empty()) throw std::invalid_argument("empty R0 solution");
  R0BarSolution out{sol.v.front(), Eigen::MatrixXd::Zero(sol.v.front().rows(), sol.v.front().cols()),
                    {}};
  for (std::size_t i = 1; i < sol.v.size(); ++i) out.w2 += sol.v[i];
  if (!sol.lifted.empty()) {
    LiftedBlock rest{Eigen::MatrixXd::Zero(sol.lifted.front().m.rows(), sol.lifted.front().m.cols())};
    for (std::size_t i = 1; i < sol.lifted.size(); ++i) rest.m += sol.lifted[i].m;
    out.lifted = {sol.lifted.front(), std::move(rest)};
  }
  return out;
}

R0Solution split_r0bar(const R0BarSolution& sol, int k) {
  if (k < 2) throw std::invalid_argument("splitting needs k >= 2");
  const double share = 1.0 / static_cast<double>(k - 1);
  R0Solution out;
  out.v.push_back(sol.w1);
  for (int i = 1; i < k; ++i) out.v.push_back(sol.w2 * share);
  if (!sol.lifted.empty()) {
    out.lifted.push_back(sol.lifted[0]);
    for (int i = 1; i < k; ++i) out.lifted.push_back({sol.lifted[1].m * share});
  }
  return out;
}

std::string index_map_listing(const ConicProblem& p) {
  std::ostringstream os;
  os << "problem " << p.label << ": " << p.num_vars() << " variables, " << p.num_rows()
     << " rows, objective offset " << p.objective_offset << "\n";
  os << "svec layout: upper triangle, column-major, entry (i,j) at j(j+1)/2 + i, "
        "off-diagonals scaled by sqrt(2)\n";
  for (const auto& blk : p.variable_map) {
    os << blk.name << ": x[" << blk.offset << ", " << blk.offset + blk.length << ")";
    if (blk.psd_order > 0) os << " = svec of order-" << blk.psd_order << " matrix";
    os << "\n";
    const bool lifted_problem = p.label == "r0" || p.label == "r0bar";
    const auto enc = lifted_problem ? lifted_blocks(p).first : LiftedEncoding::Full;
    if (lifted_problem && enc == LiftedEncoding::Compact) {
      os << "  V with V(n,n) >= V(n,m): closure of the lifted set projected onto V\n";
    } else if (lifted_problem && enc == LiftedEncoding::Reduced) {
      const int n = blk.psd_order - 2;
      os << "  moment matrix of (u, 1, w): V [0," << n << ")x[0," << n << "), u col " << n
         << ", h col " << n + 1 << ", w at (" << n << "," << n + 1 << "), z at (" << n + 1 << ","
         << n + 1 << "); s = w e - u, G = h e^T - V, Y = V - h e^T - e h^T + z ee^T, "
            "r = z e - h, border = column " << n << "\n";
    } else if (lifted_problem) {
      const int n = (blk.psd_order - 3) / 2;
      const bool bar = p.label == "r0bar";
      auto range = [](int a, int b) { return "[" + std::to_string(a) + "," + std::to_string(b) + ")"; };
      os << "  " << (bar ? "W" : "V") << "   rows " << range(0, n) << " cols " << range(0, n) << "\n";
      os << "  " << (bar ? "gamma" : "u") << "   rows " << range(0, n) << " col " << n << "\n";
      os << "  " << (bar ? "eta" : "s") << "   rows " << range(n + 1, 2 * n + 1) << " col " << n << "\n";
      os << "  " << (bar ? "rho" : "w") << "   row " << 2 * n + 1 << " col " << n << "\n";
      os << "  " << (bar ? "Theta" : "G") << "   rows " << range(0, n) << " cols " << range(n + 1, 2 * n + 1) << "\n";
      os << "  " << (bar ? "psi" : "h") << "   rows " << range(0, n) << " col " << 2 * n + 1 << "\n";
      os << "  " << (bar ? "Sigma" : "Y") << "   rows " << range(n + 1, 2 * n + 1) << " cols " << range(n + 1, 2 * n + 1) << "\n";
      os << "  " << (bar ? "theta" : "r") << "   rows " << range(n + 1, 2 * n + 1) << " col " << 2 * n + 1 << "\n";
      os << "  " << (bar ? "beta" : "z") << "   row " << 2 * n + 1 << " col " << 2 * n + 1 << "\n";
      os << "  border (" << (bar ? "alpha" : "p") << ", corner) col " << 2 * n + 2 << "\n";
    }
  }
  int off = 0;
  for (const auto& c : p.cones) {
    os << "cone " << conic::to_string(c.kind) << "(" << c.dim << "): rows [" << off << ", "
       << off + c.size() << ")\n";
    off += c.size();
  }
  return os.str();
}

}  // namespace sdpkm
