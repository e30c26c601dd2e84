#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sdpkm::conic {

enum class ConeKind { Zero, NonNeg, SecondOrder, Psd };

/// One factor of a cone product. For Psd, `dim` is the matrix order n and the
/// atom spans n(n+1)/2 slack coordinates; for every other kind `dim` is the
/// number of coordinates. SecondOrder atoms are ordered (x, t) with ||x|| <= t.
struct Cone {
  ConeKind kind;
  int dim;

  static Cone zero(int m) { return {ConeKind::Zero, m}; }
  static Cone nonneg(int m) { return {ConeKind::NonNeg, m}; }
  static Cone second_order(int m) { return {ConeKind::SecondOrder, m}; }
  static Cone psd(int n) { return {ConeKind::Psd, n}; }

  /// Number of slack coordinates the atom occupies.
  int size() const noexcept;

  friend bool operator==(const Cone&, const Cone&) = default;
};

using ConeSpec = std::vector<Cone>;

int total_size(const ConeSpec& cones);
std::string to_string(ConeKind kind);
ConeKind cone_kind_from_string(const std::string& name);

// Symmetric vectorization: upper triangle, column-major, off-diagonal
// entries scaled by sqrt(2) so that <svec(A), svec(B)> = tr(AB).

constexpr int svec_size(int n) noexcept { return n * (n + 1) / 2; }

/// Position of entry (row, col) of an order-n matrix (either triangle).
constexpr int svec_index(int row, int col) noexcept {
  if (row > col) {
    const int t = row;
    row = col;
    col = t;
  }
  return col * (col + 1) / 2 + row;
}

/// Coefficient that maps svec coordinate to matrix entry: 1 on the diagonal,
/// 1/sqrt(2) off it.
double svec_entry_scale(int row, int col) noexcept;

Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);
/// Inverse of svec_size; returns -1 if `len` is not triangular.
int svec_order(int len) noexcept;

Eigen::VectorXd project_nonneg(const Eigen::VectorXd& v);
/// Closed-form projection onto {(x, t) : ||x|| <= t}.
Eigen::VectorXd project_soc(const Eigen::VectorXd& v);
/// Eigenvalue clamp. Throws std::runtime_error if the eigensolver fails.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m);

/// In-place projections on slices of a slack vector.
void project_nonneg_inplace(Eigen::Ref<Eigen::VectorXd> v);
void project_soc_inplace(Eigen::Ref<Eigen::VectorXd> v);
void project_psd_svec_inplace(Eigen::Ref<Eigen::VectorXd> v, int n);

/// Projects each atom's slice of `v` onto its cone (Zero atoms are set to 0).
void project_cone(const ConeSpec& cones, Eigen::Ref<Eigen::VectorXd> v);

/// Distance of each atom slice from its cone, max over atoms.
double cone_violation(const ConeSpec& cones, const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace sdpkm::conic
