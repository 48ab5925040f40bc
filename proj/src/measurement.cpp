#include "pstomo/measurement.hpp"

#include <cmath>
#include <numeric>

namespace pstomo {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const std::array<MeasurementSetting, 10>& default_settings() {
  using P = ProjectorClass;
  using D = DetectorPair;
  static const std::array<MeasurementSetting, 10> table = {{
      {1, 0.0, 0.0, P::P1, D::D1D2},
      {2, 0.0, 0.0, P::P2, D::D3D4},
      {3, 0.0, 0.0, P::P3, D::Cross},
      {4, kPi / 16, 0.0, P::P1, D::D1D2},
      {5, kPi / 8, 0.0, P::P1, D::D1D2},
      {6, kPi / 8, 0.0, P::P3, D::Cross},
      {7, kPi / 8, kPi / 4, P::P3, D::Cross},
      {8, kPi / 8, kPi / 8, P::P1, D::D1D2},
      {9, kPi / 4, kPi / 8, P::P1, D::D1D2},
      {10, 0.0, kPi / 8, P::P3, D::Cross},
  }};
  return table;
}

Matrix2c jones_hwp(double theta) {
  const double c = std::cos(2 * theta), s = std::sin(2 * theta);
  Matrix2c u;
  u << c, s, s, -c;
  return u;
}

Matrix2c jones_qwp(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Complex i(0, 1);
  const Complex off = (1.0 - i) * s * c;
  Matrix2c u;
  u << c * c + i * s * s, off, off, i * c * c + s * s;
  return u;
}

namespace {

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Matrix4c projector(ProjectorClass p) {
  Matrix4c m = Matrix4c::Zero();
  switch (p) {
    case ProjectorClass::P1: m(0, 0) = 1; break;
    case ProjectorClass::P2: m(3, 3) = 1; break;
    case ProjectorClass::P3: m(1, 1) = 1; m(2, 2) = 1; break;
  }
  return m;
}

}  // namespace

Matrix4c povm_element(const MeasurementSetting& setting) {
  const Matrix2c u = jones_hwp(setting.theta_hwp) * jones_qwp(setting.theta_qwp);
  const Matrix4c uu = kron(u, u);
  return uu * projector(setting.projector) * uu.adjoint();
}

void CalibrationData::validate() const {
  double sum = 0.0;
  for (double g : gamma) {
    if (g < 0) throw MeasurementError("gamma_i must be >= 0");
    sum += g;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw MeasurementError("gamma must sum to 1");
  }
  for (int m = 0; m < 10; ++m) {
    for (int i = 0; i < 4; ++i) {
      if (beta[m][i] < 0 || background[m][i] < 0) {
        throw MeasurementError("rates must be >= 0");
      }
      if (background[m][i] > beta[m][i]) {
        throw MeasurementError("background exceeds singles rate");
      }
    }
    if (alpha[m] < 0) throw MeasurementError("alpha_m must be >= 0");
  }
  if (!(delta_tau_s > 0)) throw MeasurementError("delta_tau must be > 0");
}

CalibrationData CalibrationData::ideal(double brightness, double delta_tau_s) {
  CalibrationData c;
  c.gamma = {0.25, 0.25, 0.25, 0.25};
  for (int m = 0; m < 10; ++m) {
    c.alpha[m] = brightness;
    for (int i = 0; i < 4; ++i) {
      // beta_{i,m} = gamma_i alpha_m / 4 keeps alpha_m = sum_i beta_{i,m}/gamma_i.
      c.beta[m][i] = c.gamma[i] * brightness / 4.0;
      c.background[m][i] = 0.0;
    }
  }
  c.delta_tau_s = delta_tau_s;
  return c;
}

std::array<double, 4> calibrate_efficiencies(
    const std::array<double, 4>& beta_45) {
  double sum = 0.0;
  for (double b : beta_45) {
    if (!(b > 0)) throw MeasurementError("calibration rates must be > 0");
    sum += b;
  }
  std::array<double, 4> g;
  for (int i = 0; i < 4; ++i) g[i] = beta_45[i] / sum;
  return g;
}

double eta_factor(int m, const std::array<double, 4>& gamma) {
  switch (m) {
    case 1: case 4: case 5: case 8: case 9:
      return 2.0 * gamma[0] * gamma[1];
    case 2:
      return 2.0 * gamma[2] * gamma[3];
    case 3: case 6: case 7: case 10:
      return (gamma[0] + gamma[1]) * (gamma[2] + gamma[3]);
    default:
      throw MeasurementError("eta_factor: m must be in 1..10");
  }
}

namespace {

double acc_pair(const std::array<double, 4>& beta,
                const std::array<double, 4>& bg, double dtau, int i, int j) {
  return (beta[i] * beta[j] - (beta[i] - bg[i]) * (beta[j] - bg[j])) * dtau;
}

}  // namespace

double accidentals(const std::array<double, 4>& beta,
                   const std::array<double, 4>& background, double delta_tau,
                   int m) {
  if (!(delta_tau > 0)) throw MeasurementError("delta_tau must be > 0");
  switch (m) {
    case 1: case 4: case 5: case 8: case 9:
      return acc_pair(beta, background, delta_tau, 0, 1);
    case 2:
      return acc_pair(beta, background, delta_tau, 2, 3);
    case 3: case 6: case 7: case 10: {
      double acc = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 2; j < 4; ++j)
          acc += acc_pair(beta, background, delta_tau, i, j);
      return acc;
    }
    default:
      throw MeasurementError("accidentals: m must be in 1..10");
  }
}

double accidentals(const CalibrationData& calib, int m) {
  return accidentals(calib.beta[m - 1], calib.background[m - 1],
                     calib.delta_tau_s, m);
}

double expected_counts(const TwoPhotonState& rho,
                       const MeasurementSetting& setting,
                       const CalibrationData& calib) {
  if (rho.basis != Basis::Computational) {
    throw MeasurementError("expected_counts: rho must be in computational basis");
  }
  const double prob =
      std::max(0.0, (povm_element(setting) * rho.matrix).trace().real());
  return prob * eta_factor(setting.m, calib.gamma) * calib.alpha[setting.m - 1] +
         accidentals(calib, setting.m);
}

}  // namespace pstomo
