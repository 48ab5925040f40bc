#ifndef PSTOMO_STATE_HPP
#define PSTOMO_STATE_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pstomo {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Matrix2c = Eigen::Matrix2cd;

// Basis order is part of the type: Computational = {HH, HV, VH, VV},
// TripletSinglet = {HH, psi+, VV, psi-} with psi+- = (HV +- VH)/sqrt(2).
enum class Basis { Computational, TripletSinglet };

std::string to_string(Basis b);

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trace-normalized two-photon polarization density matrix with its basis tag.
// Construction validates Hermiticity, positivity and unit trace; eigenvalues
// in [-1e-10, 0) are tolerated (and clipped by the entanglement measures),
// anything more negative is rejected.
struct TwoPhotonState {
  Matrix4c matrix = Matrix4c::Zero();
  Basis basis = Basis::Computational;

  static TwoPhotonState make(const Matrix4c& m, Basis basis);
};

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kEigenvalueClipTol = 1e-10;
inline constexpr double kTraceTol = 1e-6;

// Throws StateError if m is not a valid density matrix.
void validate_density_matrix(const Matrix4c& m);

// Wootters concurrence, in [0, 1].
double concurrence(const TwoPhotonState& state);

// Sum of |negative eigenvalues| of the partial transpose over the second
// photon; positive iff the state is NPT.
double negativity(const TwoPhotonState& state);

// Unitary change of basis between Computational and TripletSinglet.
TwoPhotonState basis_convert(const TwoPhotonState& state, Basis target);

// <psi|rho|psi> for |psi> = cos(theta)|HH> + e^{i phi} sin(theta)|VV>.
double noon_fidelity(const TwoPhotonState& state, double theta, double phi);

struct NoonFidelityMax {
  double fidelity;
  double theta;
  double phi;
};

// Maximum of noon_fidelity over theta, phi via the 2x2 eigenproblem on the
// {HH, VV} block.
NoonFidelityMax noon_fidelity_max(const TwoPhotonState& state);

// (S rho S + rho)/2 with S the swap of the two photons.
TwoPhotonState permutation_symmetrize(const TwoPhotonState& state);

// Frobenius norm of S rho S - rho.
double pi_distance(const TwoPhotonState& state);

// Uhlmann fidelity Tr[sqrt(sqrt(a) b sqrt(a))]^2 between two states in the
// same basis.
double fidelity(const TwoPhotonState& a, const TwoPhotonState& b);

// Fixed isometry whose columns are the triplet-singlet vectors expressed in
// the computational basis; rho_CB = U rho_TS U^dagger.
const Matrix4c& ts_to_cb_isometry();

}  // namespace pstomo

#endif
