#ifndef PSTOMO_FORWARD_HPP
#define PSTOMO_FORWARD_HPP

#include <vector>

#include "pstomo/state.hpp"

namespace pstomo {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Physical description of the polarization-squeezed beam: an H-polarized
// coherent field of flux phi_C combined with V-polarized squeezed vacuum of
// flux phi_S and bandwidth gamma, at relative phase `phase`.  `dephasing` is
// the residual phase-noise standard deviation (radians) and `leakage` the
// coherent-amplitude intensity fraction leaking into the V polarization.
struct SourceParams {
  double phi_C = 0.0;      // photons/s
  double phi_S = 0.0;      // photons/s
  double gamma = 1.0;      // rad/s
  double phase = 0.0;      // rad
  double dephasing = 0.0;  // rad
  double leakage = 0.0;    // dimensionless

  // Below-threshold pump parameter, from phi_S = gamma eps^2 / (2(1-eps^2)),
  // i.e. eps = sqrt(phi_S / (gamma/2 + phi_S)).
  double pump_epsilon() const;
  void validate() const;
};

// Stationary second moments of the V field at delay tau:
// n_tau = <Ev^dag(t) Ev(t+tau)>, m_tau = <Ev(t) Ev(t+tau)>.
struct FieldMoments {
  Complex n_tau;
  Complex m_tau;
  double tau;
};

// The 16 second-order correlation values R_{ij,mn}(tau) arranged as a 4x4
// Hermitian matrix over the pair basis {HH, HV, VH, VV}: r(a, b) holds
// R_{a,b} = <E_i^dag(t) E_j^dag(t+tau) E_n(t+tau) E_m(t)> with a = (ij),
// b = (mn).  This is exactly the arrangement of the unnormalized two-photon
// density matrix.
struct CorrelationTensor {
  Matrix4c r;
  double tau;
};

FieldMoments field_moments(const SourceParams& params, double tau);

CorrelationTensor correlation_tensor(const SourceParams& params, double tau);

TwoPhotonState two_photon_dm(const SourceParams& params, double tau);

// Element-wise integral of the unnormalized tensor over |tau| in [lo, hi],
// then normalized.  Adaptive Simpson quadrature, relative tolerance 1e-9.
TwoPhotonState window_average_dm(const SourceParams& params, double tau_lo,
                                 double tau_hi);

// Unnormalized window integral of the tensor (used by the simulator and the
// forward CLI; trace carries the relative pair-rate weight of the window).
Matrix4c window_integral(const SourceParams& params, double tau_lo,
                         double tau_hi);

struct CsCheck {
  double lhs_a, rhs_a;
  bool violated_a;
  double lhs_b, rhs_b;
  bool violated_b;
};

// Cauchy-Schwarz inequalities |R_HH,VV|^2 <= R_HV,HV R_VH,VH and
// |R_HV,VH|^2 <= R_HH,HH R_VV,VV; violated when lhs exceeds rhs beyond a
// 1e-12 relative tolerance.
CsCheck cs_inequality_check(const CorrelationTensor& tensor);

struct LocusPoint {
  double phi_C;
  double phi_S;
  bool valid;  // phi_S < gamma
};

// Samples of the high-concurrence locus phi_S = phi_C^2 / gamma.
std::vector<LocusPoint> sweet_spot_locus(double gamma,
                                         const std::vector<double>& phi_C);

struct PairRates {
  double sv_rate;  // R_VV,VV(tau)
  double cs_rate;  // R_HH,HH
};

PairRates pair_rate_components(const SourceParams& params, double tau);

// Solves R_VV,VV(tau*) = R_HH,HH for gamma by bracketed bisection.  Two
// branches exist; this returns the fast-decay root (gamma tau* of order 1),
// the one for which the concurrence maximum sits at the crossover delay.
double fit_gamma(double crossover_tau, double phi_C, double phi_S);

}  // namespace pstomo

#endif
