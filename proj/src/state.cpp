#include "pstomo/state.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pstomo {

std::string to_string(Basis b) {
  return b == Basis::Computational ? "computational" : "triplet_singlet";
}

void validate_density_matrix(const Matrix4c& m) {
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw StateError("density matrix is not Hermitian");
  }
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw StateError("density matrix trace deviates from 1 by " +
                     std::to_string(std::abs(tr - 1.0)));
  }
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kEigenvalueClipTol) {
    throw StateError("density matrix has eigenvalue " +
                     std::to_string(es.eigenvalues().minCoeff()));
  }
}

TwoPhotonState TwoPhotonState::make(const Matrix4c& m, Basis basis) {
  validate_density_matrix(m);
  return TwoPhotonState{m, basis};
}

namespace {

// Clips eigenvalues in [-kEigenvalueClipTol, 0) to zero and renormalizes.
Matrix4c clipped(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  Matrix4c out = es.eigenvectors() * ev.asDiagonal() *
                 es.eigenvectors().adjoint();
  return out / out.trace().real();
}

Matrix4c spin_flip(const Matrix4c& rho) {
  // sigma_y (x) sigma_y in the computational basis.
  Matrix4c yy = Matrix4c::Zero();
  yy(0, 3) = -1;
  yy(1, 2) = 1;
  yy(2, 1) = 1;
  yy(3, 0) = -1;
  return yy * rho.conjugate() * yy;
}

Matrix4c in_computational(const TwoPhotonState& s) {
  if (s.basis == Basis::Computational) return s.matrix;
  const Matrix4c& u = ts_to_cb_isometry();
  return u * s.matrix * u.adjoint();
}

}  // namespace

const Matrix4c& ts_to_cb_isometry() {
  static const Matrix4c u = [] {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix4c m = Matrix4c::Zero();
    m(0, 0) = 1;          // HH
    m(1, 1) = r;          // psi+ = (HV + VH)/sqrt(2)
    m(2, 1) = r;
    m(3, 2) = 1;          // VV
    m(1, 3) = r;          // psi- = (HV - VH)/sqrt(2)
    m(2, 3) = -r;
    return m;
  }();
  return u;
}

double concurrence(const TwoPhotonState& state) {
  validate_density_matrix(state.matrix);
  Matrix4c rho = clipped(in_computational(state));
  Matrix4c prod = rho * spin_flip(rho);
  Eigen::ComplexEigenSolver<Matrix4c> es(prod, false);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) {
    lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  }
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double negativity(const TwoPhotonState& state) {
  validate_density_matrix(state.matrix);
  Matrix4c rho = clipped(in_computational(state));
  // Partial transpose over the second photon: (i,j),(k,l) -> (i,l),(k,j).
  Matrix4c pt;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          pt(2 * i + j, 2 * k + l) = rho(2 * i + l, 2 * k + j);
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(pt, Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (es.eigenvalues()(i) < 0) neg -= es.eigenvalues()(i);
  }
  return neg;
}

TwoPhotonState basis_convert(const TwoPhotonState& state, Basis target) {
  validate_density_matrix(state.matrix);
  if (state.basis == target) return state;
  const Matrix4c& u = ts_to_cb_isometry();
  Matrix4c out = (target == Basis::Computational)
                     ? Matrix4c(u * state.matrix * u.adjoint())
                     : Matrix4c(u.adjoint() * state.matrix * u);
  return TwoPhotonState{out, target};
}

double noon_fidelity(const TwoPhotonState& state, double theta, double phi) {
  Matrix4c rho = in_computational(state);
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  psi(0) = std::cos(theta);
  psi(3) = std::polar(std::sin(theta), phi);
  return std::max(0.0, (psi.adjoint() * rho * psi)(0).real());
}

NoonFidelityMax noon_fidelity_max(const TwoPhotonState& state) {
  Matrix4c rho = in_computational(state);
  Matrix2c block;
  block << rho(0, 0), rho(0, 3), rho(3, 0), rho(3, 3);
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(block);
  int imax;
  es.eigenvalues().maxCoeff(&imax);
  Eigen::Vector2cd v = es.eigenvectors().col(imax);
  // Fix gauge so the HH component is real non-negative.
  if (std::abs(v(0)) > 0) v *= std::conj(v(0)) / std::abs(v(0));
  return NoonFidelityMax{std::max(0.0, es.eigenvalues()(imax)),
                         std::atan2(std::abs(v(1)), v(0).real()),
                         std::arg(v(1))};
}

namespace {

Matrix4c swap_conjugate(const Matrix4c& rho) {
  Matrix4c s = Matrix4c::Identity();
  s(1, 1) = 0;
  s(2, 2) = 0;
  s(1, 2) = 1;
  s(2, 1) = 1;
  return s * rho * s;
}

}  // namespace

TwoPhotonState permutation_symmetrize(const TwoPhotonState& state) {
  Matrix4c rho = in_computational(state);
  Matrix4c sym = 0.5 * (swap_conjugate(rho) + rho);
  TwoPhotonState out{sym, Basis::Computational};
  return basis_convert(out, state.basis);
}

double pi_distance(const TwoPhotonState& state) {
  Matrix4c rho = in_computational(state);
  return (swap_conjugate(rho) - rho).norm();
}

double fidelity(const TwoPhotonState& a, const TwoPhotonState& b) {
  if (a.basis != b.basis) {
    throw StateError("fidelity: states must share a basis");
  }
  Matrix4c ra = clipped(a.matrix);
  Matrix4c rb = clipped(b.matrix);
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(ra);
  Matrix4c sqrt_a = es.eigenvectors() *
                    es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix4c> es2(sqrt_a * rb * sqrt_a);
  double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::min(1.0, tr * tr);
}

}  // namespace pstomo
