#include "sdpkm/conic/cones.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace sdpkm::conic {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

int Cone::size() const noexcept { return kind == ConeKind::Psd ? svec_size(dim) : dim; }

int total_size(const ConeSpec& cones) {
  int total = 0;
  for (const auto& c : cones) total += c.size();
  return total;
}

std::string to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::Zero:
      return "zero";
    case ConeKind::NonNeg:
      return "nonneg";
    case ConeKind::SecondOrder:
      return "soc";
    case ConeKind::Psd:
      return "psd";
  }
  return "unknown";
}

ConeKind cone_kind_from_string(const std::string& name) {
  if (name == "zero") return ConeKind::Zero;
  if (name == "nonneg") return ConeKind::NonNeg;
  if (name == "soc") return ConeKind::SecondOrder;
  if (name == "psd") return ConeKind::Psd;
  throw std::invalid_argument("unknown cone kind '" + name + "'");
}

double svec_entry_scale(int row, int col) noexcept { return row == col ? 1.0 : 1.0 / kSqrt2; }

int svec_order(int len) noexcept {
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  return svec_size(n) == len ? n : -1;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) v(k++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    v(k++) = m(j, j);
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      m(i, j) = m(j, i) = v(k++) / kSqrt2;
    }
    m(j, j) = v(k++);
  }
  return m;
}

void project_nonneg_inplace(Eigen::Ref<Eigen::VectorXd> v) { v = v.cwiseMax(0.0); }

Eigen::VectorXd project_nonneg(const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  project_nonneg_inplace(out);
  return out;
}

void project_soc_inplace(Eigen::Ref<Eigen::VectorXd> v) {
  const Eigen::Index m = v.size();
  const double t = v(m - 1);
  const double nx = v.head(m - 1).norm();
  if (nx <= t) return;
  if (nx <= -t) {
    v.setZero();
    return;
  }
  const double a = 0.5 * (nx + t);
  v.head(m - 1) *= a / nx;
  v(m - 1) = a;
}

Eigen::VectorXd project_soc(const Eigen::VectorXd& v) {
  if (v.size() < 2) throw std::invalid_argument("second-order cone needs dimension >= 2");
  Eigen::VectorXd out = v;
  project_soc_inplace(out);
  return out;
}

namespace {

// Clamps negative eigenvalues; rebuilds from whichever eigen-subspace is
// smaller.
void clamp_psd(Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed in PSD projection");
  }
  const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
  const Eigen::Index n = lam.size();
  Eigen::Index neg = 0;
  while (neg < n && lam(neg) < 0.0) ++neg;
  if (neg == 0) return;
  const Eigen::MatrixXd& q = es.eigenvectors();
  if (neg <= n - neg) {
    const auto qn = q.leftCols(neg);
    m.noalias() -= qn * lam.head(neg).asDiagonal() * qn.transpose();
  } else {
    const auto qp = q.rightCols(n - neg);
    m.noalias() = qp * lam.tail(n - neg).asDiagonal() * qp.transpose();
  }
}

}  // namespace

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("PSD projection needs a square matrix");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("PSD projection input is not symmetric");
  }
  Eigen::MatrixXd out = 0.5 * (m + m.transpose());
  clamp_psd(out);
  return 0.5 * (out + out.transpose());
}

void project_psd_svec_inplace(Eigen::Ref<Eigen::VectorXd> v, int n) {
  Eigen::MatrixXd m = smat(v, n);
  clamp_psd(m);
  v = svec(m);
}

void project_cone(const ConeSpec& cones, Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index off = 0;
  for (const auto& c : cones) {
    const int len = c.size();
    auto seg = v.segment(off, len);
    switch (c.kind) {
      case ConeKind::Zero:
        seg.setZero();
        break;
      case ConeKind::NonNeg:
        project_nonneg_inplace(seg);
        break;
      case ConeKind::SecondOrder:
        project_soc_inplace(seg);
        break;
      case ConeKind::Psd:
        project_psd_svec_inplace(seg, c.dim);
        break;
    }
    off += len;
  }
}

double cone_violation(const ConeSpec& cones, const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::VectorXd p = v;
  project_cone(cones, p);
  double worst = 0.0;
  Eigen::Index off = 0;
  for (const auto& c : cones) {
    const int len = c.size();
    worst = std::max(worst, (v.segment(off, len) - p.segment(off, len)).norm());
    off += len;
  }
  return worst;
}

}  // namespace sdpkm::conic
