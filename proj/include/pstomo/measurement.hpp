#ifndef PSTOMO_MEASUREMENT_HPP
#define PSTOMO_MEASUREMENT_HPP

#include <array>

#include "pstomo/state.hpp"

namespace pstomo {

struct MeasurementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProjectorClass { P1, P2, P3 };  // |HH><HH|, |VV><VV|, |HV><HV|+|VH><VH|
enum class DetectorPair { D1D2, D3D4, Cross };

struct MeasurementSetting {
  int m = 0;  // outcome index 1..10
  double theta_hwp = 0.0;
  double theta_qwp = 0.0;
  ProjectorClass projector = ProjectorClass::P1;
  DetectorPair detectors = DetectorPair::D1D2;
};

// The 10 tomography outcomes obtained with 7 physical waveplate settings.
const std::array<MeasurementSetting, 10>& default_settings();

// Standard half-wave-plate Jones matrix [[cos2t, sin2t], [sin2t, -cos2t]].
Matrix2c jones_hwp(double theta);

// Quarter-wave-plate Jones matrix
// [[cos^2 t + i sin^2 t, (1-i) sin t cos t], [(1-i) sin t cos t, i cos^2 t + sin^2 t]].
Matrix2c jones_qwp(double theta);

// POVM element (U_HWP U_QWP)^(x2) P_m (U_QWP^dag U_HWP^dag)^(x2).
Matrix4c povm_element(const MeasurementSetting& setting);

// Per-setting singles, backgrounds and brightness together with the
// path-and-detector efficiencies and the coincidence window.
struct CalibrationData {
  std::array<double, 4> gamma{};                  // normalized, sum 1
  std::array<std::array<double, 4>, 10> beta{};   // singles rates, counts/s
  std::array<std::array<double, 4>, 10> background{};  // counts/s
  std::array<double, 10> alpha{};                 // brightness, counts/s
  double delta_tau_s = 0.0;                       // coincidence window

  void validate() const;

  // Uniform gamma, zero background, equal per-setting brightness.
  static CalibrationData ideal(double brightness, double delta_tau_s);
};

// gamma_i = beta_{i,45deg} / sum_j beta_{j,45deg}.
std::array<double, 4> calibrate_efficiencies(const std::array<double, 4>& beta_45);

// Coincidence efficiency: eta_{1,4,5,8,9} = 2 g1 g2, eta_2 = 2 g3 g4,
// eta_{3,6,7,10} = (g1+g2)(g3+g4).
double eta_factor(int m, const std::array<double, 4>& gamma);

// Accidental-coincidence rate for outcome m, aggregated over the detector
// pairs involved: acc^{(i,j)} = [b_i b_j - (b_i - bg_i)(b_j - bg_j)] dtau.
double accidentals(const std::array<double, 4>& beta,
                   const std::array<double, 4>& background, double delta_tau,
                   int m);

double accidentals(const CalibrationData& calib, int m);

// n_th,m rate: Tr[Pi_m rho_CB] eta_m alpha_m + acc_m (counts/s).  rho must be
// in the computational basis.
double expected_counts(const TwoPhotonState& rho, const MeasurementSetting& setting,
                       const CalibrationData& calib);

}  // namespace pstomo

#endif
