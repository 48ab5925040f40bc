#include "pstomo/forward.hpp"

#include <cmath>

namespace pstomo {

double SourceParams::pump_epsilon() const {
  return std::sqrt(2.0 * phi_S / (gamma + 2.0 * phi_S));
}

void SourceParams::validate() const {
  if (phi_C < 0 || phi_S < 0) throw ModelError("fluxes must be >= 0");
  if (!(gamma > 0)) throw ModelError("gamma must be > 0");
  if (dephasing < 0) throw ModelError("dephasing must be >= 0");
  if (leakage < 0 || leakage > 1) throw ModelError("leakage must be in [0,1]");
  if (!(pump_epsilon() < 1.0)) throw ModelError("above-threshold pump");
}

FieldMoments field_moments(const SourceParams& params, double tau) {
  params.validate();
  const double eps = params.pump_epsilon();
  const double g = params.gamma;
  const double t = std::abs(tau);
  const double fast = std::exp(-g * (1.0 + eps) * t) / (1.0 + eps);
  const double slow = std::exp(-g * (1.0 - eps) * t) / (1.0 - eps);
  const double pre = eps * g / 4.0;
  FieldMoments fm;
  fm.n_tau = Complex(pre * (slow - fast), 0.0);
  fm.m_tau = std::polar(1.0, params.phase) * (pre * (slow + fast));
  fm.tau = tau;
  return fm;
}

CorrelationTensor correlation_tensor(const SourceParams& params, double tau) {
  const FieldMoments fm = field_moments(params, tau);
  const Complex n0 = field_moments(params, 0.0).n_tau;
  const Complex nt = fm.n_tau;
  const Complex mt = fm.m_tau;
  const double a = std::sqrt(params.phi_C);     // coherent amplitude, real
  const double aa = params.phi_C;               // |alpha|^2
  const Complex nu(std::sqrt(params.leakage * params.phi_C), 0.0);
  const Complex nu2 = nu * nu;
  const double anu = std::norm(nu);

  // Gaussian-moment factorization with the H field a classical amplitude and
  // the V field a displaced Gaussian (displacement nu from CS leakage).
  Matrix4c r;
  r(0, 0) = aa * aa;
  r(0, 1) = aa * a * nu;
  r(0, 2) = r(0, 1);
  r(0, 3) = aa * (nu2 + mt);
  r(1, 1) = aa * (anu + n0);
  r(1, 2) = aa * (anu + std::conj(nt));
  r(1, 3) = a * (anu * nu + std::conj(nu) * mt + nu * std::conj(nt) + nu * n0);
  r(2, 2) = aa * (anu + n0);
  r(2, 3) = a * (anu * nu + std::conj(nu) * mt + nu * n0 + nu * nt);
  r(3, 3) = anu * anu + 2.0 * anu * n0.real() + 2.0 * anu * nt.real() +
            2.0 * (std::conj(nu2) * mt).real() + std::norm(n0) +
            std::norm(nt) + std::norm(mt);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) r(i, j) = std::conj(r(j, i));

  if (params.dephasing > 0) {
    const double s2 = params.dephasing * params.dephasing;
    const double k2 = std::exp(-2.0 * s2);       // phase order 2
    const double k1 = std::exp(-0.5 * s2);       // phase order 1
    r(0, 3) *= k2;
    r(3, 0) *= k2;
    for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 3}, {2, 3}}) {
      r(i, j) *= k1;
      r(j, i) *= k1;
    }
  }
  return CorrelationTensor{r, tau};
}

TwoPhotonState two_photon_dm(const SourceParams& params, double tau) {
  if (params.phi_C <= 0 && params.phi_S <= 0) {
    throw ModelError("two_photon_dm: at least one flux must be positive");
  }
  Matrix4c r = correlation_tensor(params, tau).r;
  const double tr = r.trace().real();
  if (!(tr > 0)) throw ModelError("two_photon_dm: zero correlation tensor");
  return TwoPhotonState::make(r / tr, Basis::Computational);
}

namespace {

constexpr double kQuadRelTol = 1e-9;

Matrix4c tensor_at(const SourceParams& p, double t) {
  return correlation_tensor(p, t).r;
}

Matrix4c simpson(const SourceParams& p, double a, double b, const Matrix4c& fa,
                 const Matrix4c& fm, const Matrix4c& fb, const Matrix4c& whole,
                 double tol, int depth) {
  const double m = 0.5 * (a + b);
  const Matrix4c fl = tensor_at(p, 0.5 * (a + m));
  const Matrix4c fr = tensor_at(p, 0.5 * (m + b));
  const Matrix4c left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
  const Matrix4c right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
  const Matrix4c err = left + right - whole;
  if (depth <= 0 || err.norm() <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  return simpson(p, a, m, fa, fl, fm, left, 0.5 * tol, depth - 1) +
         simpson(p, m, b, fm, fr, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

Matrix4c window_integral(const SourceParams& params, double tau_lo,
                         double tau_hi) {
  if (!(tau_lo < tau_hi)) throw ModelError("window: tau_lo must be < tau_hi");
  const Matrix4c fa = tensor_at(params, tau_lo);
  const Matrix4c fb = tensor_at(params, tau_hi);
  const Matrix4c fm = tensor_at(params, 0.5 * (tau_lo + tau_hi));
  const Matrix4c whole = (tau_hi - tau_lo) / 6.0 * (fa + 4.0 * fm + fb);
  const double tol = kQuadRelTol * std::max(whole.norm(), 1e-300);
  return simpson(params, tau_lo, tau_hi, fa, fm, fb, whole, tol, 40);
}

TwoPhotonState window_average_dm(const SourceParams& params, double tau_lo,
                                 double tau_hi) {
  Matrix4c r = window_integral(params, tau_lo, tau_hi);
  const double tr = r.trace().real();
  if (!(tr > 0)) throw ModelError("window_average_dm: zero integral");
  r /= tr;
  r = 0.5 * (r + r.adjoint().eval());  // scrub quadrature roundoff
  return TwoPhotonState::make(r, Basis::Computational);
}

CsCheck cs_inequality_check(const CorrelationTensor& tensor) {
  const Matrix4c& r = tensor.r;
  CsCheck c;
  c.lhs_a = std::norm(r(0, 3));
  c.rhs_a = r(1, 1).real() * r(2, 2).real();
  c.lhs_b = std::norm(r(1, 2));
  c.rhs_b = r(0, 0).real() * r(3, 3).real();
  const double ta = 1e-12 * std::max(c.lhs_a, c.rhs_a);
  const double tb = 1e-12 * std::max(c.lhs_b, c.rhs_b);
  c.violated_a = c.lhs_a > c.rhs_a + ta;
  c.violated_b = c.lhs_b > c.rhs_b + tb;
  return c;
}

std::vector<LocusPoint> sweet_spot_locus(double gamma,
                                         const std::vector<double>& phi_C) {
  if (!(gamma > 0)) throw ModelError("sweet_spot_locus: gamma must be > 0");
  std::vector<LocusPoint> out;
  out.reserve(phi_C.size());
  for (double pc : phi_C) {
    const double ps = pc * pc / gamma;
    out.push_back(LocusPoint{pc, ps, ps < gamma});
  }
  return out;
}

PairRates pair_rate_components(const SourceParams& params, double tau) {
  const Matrix4c r = correlation_tensor(params, tau).r;
  return PairRates{r(3, 3).real(), r(0, 0).real()};
}

double fit_gamma(double crossover_tau, double phi_C, double phi_S) {
  if (!(crossover_tau > 0)) throw ModelError("fit_gamma: tau* must be > 0");
  if (!(phi_C > 0) || !(phi_S > 0)) {
    throw ModelError("fit_gamma: fluxes must be > 0");
  }
  if (phi_S >= phi_C) {
    // sv_rate(tau) >= phi_S^2 for all gamma, so it never drops to cs_rate.
    throw ModelError("fit_gamma: no crossover, phi_S >= phi_C");
  }
  auto resid = [&](double g) {
    SourceParams p{phi_C, phi_S, g, 0.0, 0.0, 0.0};
    return pair_rate_components(p, crossover_tau).sv_rate - phi_C * phi_C;
  };
  // Locate the peak of the residual over gamma, then bisect on the
  // fast-decay side of it.
  double g_peak = 0.0, r_peak = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double g = std::max(phi_S, 1.0) *
                     std::pow(10.0, -2.0 + 10.0 * i / 400.0);
    const double v = resid(g);
    if (v > r_peak) {
      r_peak = v;
      g_peak = g;
    }
  }
  if (r_peak <= 0) throw ModelError("fit_gamma: no crossover in bracket");
  double lo = g_peak, hi = g_peak;
  int guard = 0;
  while (resid(hi) > 0) {
    hi *= 2.0;
    if (++guard > 200) throw ModelError("fit_gamma: bracket expansion failed");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (resid(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pstomo
