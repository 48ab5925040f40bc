#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pstomo/forward.hpp"

using namespace pstomo;

namespace {

SourceParams random_params(std::mt19937_64& rng, bool with_leakage = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SourceParams p;
  p.gamma = std::pow(10.0, 6.0 + 3.0 * u(rng));
  p.phi_C = std::pow(10.0, 4.0 + 3.0 * u(rng));
  p.phi_S = p.gamma * (0.001 + 0.8 * u(rng));
  p.phase = 6.283185307179586 * u(rng);
  p.leakage = with_leakage ? 0.2 * u(rng) : 0.0;
  return p;
}

// Brute-force tensor entry via the Wick oracle: R_{(ij),(mn)} =
// <E_i^dag(t) E_j^dag(t+tau) E_n(t+tau) E_m(t)> with H a c-number and V a
// displaced Gaussian.
Complex oracle_entry(const SourceParams& p, double tau, int a, int b) {
  const double alpha = std::sqrt(p.phi_C);
  const Complex nu(std::sqrt(p.leakage * p.phi_C), 0.0);
  const FieldMoments f0 = field_moments(p, 0.0);
  const FieldMoments ft = field_moments(p, tau);
  const oracle::WickMoments mom{f0.n_tau, ft.n_tau, f0.m_tau, ft.m_tau};
  auto make = [&](int pol, bool dagger, int time) {
    oracle::WickFactor f;
    f.fluctuates = (pol == 1);
    f.dagger = dagger;
    f.time = time;
    f.mean = (pol == 1) ? nu : Complex(alpha, 0.0);
    return f;
  };
  const int i = a / 2, j = a % 2, m = b / 2, n = b % 2;
  const std::array<oracle::WickFactor, 4> factors{
      make(i, true, 0), make(j, true, 1), make(n, false, 1),
      make(m, false, 0)};
  return oracle::wick_fourth_moment(factors, mom);
}

constexpr double kPhiC = 9.6e5;   // ph/s
constexpr double kPhiS = 1.9e5;   // ph/s

}  // namespace

TEST_CASE("source parameter validation") {
  CHECK_THROWS_AS(field_moments(SourceParams{-1.0, 0.0, 1e6}, 0.0), ModelError);
  CHECK_THROWS_AS(field_moments(SourceParams{1.0, 1.0, 0.0}, 0.0), ModelError);
  CHECK_THROWS_AS(field_moments(SourceParams{1.0, 1.0, 1e6, 0.0, -0.1}, 0.0),
                  ModelError);
  SourceParams ok{1e5, 1e4, 1e7};
  CHECK(ok.pump_epsilon() < 1.0);
  CHECK(ok.pump_epsilon() ==
        doctest::Approx(std::sqrt(2.0 * 1e4 / (1e7 + 2.0 * 1e4))));
}

TEST_CASE("field moments basic structure") {
  const SourceParams p{0.0, 2e5, 1e7, 1.1};
  // n(0) = phi_S exactly
  CHECK(field_moments(p, 0.0).n_tau.real() ==
        doctest::Approx(p.phi_S).epsilon(1e-12));
  CHECK(field_moments(p, 0.0).n_tau.imag() == 0.0);

  // symmetry: n(-tau) = n(tau)* (real here), m(-tau) = m(tau)
  const auto fp = field_moments(p, 3e-8);
  const auto fm = field_moments(p, -3e-8);
  CHECK(std::abs(fp.n_tau - std::conj(fm.n_tau)) < 1e-12 * p.phi_S);
  CHECK(std::abs(fp.m_tau - fm.m_tau) < 1e-12 * p.phi_S);

  // |n(tau)| <= n(0), both decay to 0
  CHECK(std::abs(fp.n_tau) <= p.phi_S);
  const auto far = field_moments(p, 1e-4);
  CHECK(std::abs(far.n_tau) < 1e-12 * p.phi_S);
  CHECK(std::abs(far.m_tau) < 1e-12 * p.phi_S);

  // phase of m is the source phase
  CHECK(std::arg(fp.m_tau) == doctest::Approx(1.1).epsilon(1e-12));
}

TEST_CASE("weak-squeezing limit |m(0)|^2 / (Gamma phi_S) -> 1/2") {
  const double gamma = 1e7;
  double prev_err = 1.0;
  for (double ratio : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const SourceParams p{0.0, gamma * ratio, gamma};
    const double m0 = std::abs(field_moments(p, 0.0).m_tau);
    const double err = std::abs(m0 * m0 / (gamma * p.phi_S) - 0.5);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-7);
}

TEST_CASE("moments match numeric inverse FT of the Lorentzian spectra") {
  // Independent frequency-domain route: the two-pole output spectra
  //   N(w) = (eps G^2/2) [L_-(w) - L_+(w)],  M(w) = e^{i phi}(eps G^2/2)[L_- + L_+]
  // with L_{-+}(w) = 1/(G^2 (1 -+ eps)^2 + w^2), inverse-transformed by brute
  // Simpson quadrature.
  const SourceParams p{0.0, 3e5, 1e7, 0.7};
  const double g = p.gamma;
  const double eps = p.pump_epsilon();
  const double am = g * (1.0 - eps), ap = g * (1.0 + eps);
  const double pre = eps * g * g / 2.0;

  auto inv_ft = [&](double tau, int sign) {
    const double W = 5000.0 * g;
    const int N = 400000;  // even
    const double h = 2.0 * W / N;
    Complex acc(0, 0);
    for (int k = 0; k <= N; ++k) {
      const double w = -W + k * h;
      const double spec = pre * (1.0 / (am * am + w * w) +
                                 sign / (ap * ap + w * w));
      const double simp = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += simp * spec * std::polar(1.0, w * tau);
    }
    return acc * h / 3.0 / (2.0 * 3.14159265358979323846);
  };

  for (double tau : {0.0, 0.3 / g, 1.0 / g, 2.0 / g}) {
    const auto fm = field_moments(p, tau);
    const Complex n_ft = inv_ft(tau, -1);
    const Complex m_ft = std::polar(1.0, p.phase) * inv_ft(tau, +1);
    CHECK(std::abs(n_ft - fm.n_tau) < 5e-3 * std::abs(fm.n_tau));
    CHECK(std::abs(m_ft - fm.m_tau) < 5e-3 * std::abs(fm.m_tau));
  }
}

TEST_CASE("correlation tensor matches the Wick oracle entry by entry") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const SourceParams p = random_params(rng, trial % 2 == 1);
    std::uniform_real_distribution<double> ut(0.0, 3.0);
    const double tau = ut(rng) / p.gamma;
    const Matrix4c r = correlation_tensor(p, tau).r;
    const double scale = r.cwiseAbs().maxCoeff();
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const Complex want = oracle_entry(p, tau, a, b);
        CHECK(std::abs(r(a, b) - want) < 1e-10 * scale);
      }
    }
  }
}

TEST_CASE("tensor structure: hermiticity, real nonneg diagonal, X form") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const SourceParams p = random_params(rng, true);
    const Matrix4c r = correlation_tensor(p, 0.4 / p.gamma).r;
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-10 * r.norm());
    for (int i = 0; i < 4; ++i) {
      CHECK(r(i, i).imag() == 0.0);
      CHECK(r(i, i).real() >= 0.0);
    }
  }
  // leakage = 0: exactly zero off-X entries
  for (int trial = 0; trial < 100; ++trial) {
    const SourceParams p = random_params(rng, false);
    const Matrix4c r = correlation_tensor(p, 0.7 / p.gamma).r;
    for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 3}, {2, 3}}) {
      CHECK(r(i, j) == Complex(0, 0));
      CHECK(r(j, i) == Complex(0, 0));
    }
  }
}

TEST_CASE("special flux limits of the tensor") {
  // phi_S = 0: only R_HH,HH nonzero; state is |HH><HH|
  const SourceParams cs{1e5, 0.0, 1e7};
  const Matrix4c r = correlation_tensor(cs, 1e-8).r;
  CHECK(r(0, 0).real() == doctest::Approx(1e10));
  CHECK(r.cwiseAbs().sum() == doctest::Approx(1e10));
  const auto st = two_photon_dm(cs, 1e-8);
  CHECK(st.matrix(0, 0).real() == doctest::Approx(1.0));

  // phi_C = 0: only R_VV,VV nonzero
  const SourceParams sv{0.0, 2e5, 1e7};
  const Matrix4c rs = correlation_tensor(sv, 1e-8).r;
  CHECK(rs(3, 3).real() > 0.0);
  CHECK(rs.cwiseAbs().sum() == doctest::Approx(rs(3, 3).real()));

  CHECK_THROWS_AS(two_photon_dm(SourceParams{0.0, 0.0, 1e7}, 0.0), ModelError);
}

TEST_CASE("dephasing multiplies coherences by the phase-order factors") {
  SourceParams p{kPhiC, kPhiS, 6.7e7, 0.4, 0.0, 0.05};
  const Matrix4c r0 = correlation_tensor(p, 5e-9).r;
  p.dephasing = 0.3;
  const Matrix4c r1 = correlation_tensor(p, 5e-9).r;
  const double s2 = 0.3 * 0.3;
  CHECK(std::abs(r1(0, 3) - r0(0, 3) * std::exp(-2.0 * s2)) <
        1e-12 * std::abs(r0(0, 3)));
  CHECK(std::abs(r1(0, 1) - r0(0, 1) * std::exp(-0.5 * s2)) <
        1e-12 * std::abs(r0(0, 1)));
  for (int i = 0; i < 4; ++i) CHECK(r1(i, i) == r0(i, i));
  // strong dephasing kills concurrence, diagonals untouched
  p.leakage = 0.0;
  p.dephasing = 0.0;
  const auto base = two_photon_dm(p, 5e-9);
  CHECK(concurrence(base) > 0.1);
  p.dephasing = 20.0;
  const auto killed = two_photon_dm(p, 5e-9);
  CHECK(concurrence(killed) < 1e-10);
  for (int i = 0; i < 4; ++i) {
    CHECK(killed.matrix(i, i).real() ==
          doctest::Approx(base.matrix(i, i).real()).epsilon(1e-10));
  }
}

TEST_CASE("two-photon state invariants") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const SourceParams p = random_params(rng, trial % 3 == 0);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    const auto rho = two_photon_dm(p, ut(rng) / p.gamma);
    CHECK(rho.matrix.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pi_distance(rho) < 1e-12);
  }
  // tau -> inf: concurrence -> 0
  const SourceParams p{kPhiC, kPhiS, 6.7e7};
  CHECK(concurrence(two_photon_dm(p, 1e-5)) == doctest::Approx(0.0));
}

TEST_CASE("concurrence even in tau and non-increasing in |tau| on locus") {
  const double gamma = 6.7e7;
  const double phi_S = 1.9e5;
  const SourceParams p{std::sqrt(gamma * phi_S), phi_S, gamma};
  double prev = 2.0;
  for (int k = 0; k <= 40; ++k) {
    const double tau = k * 2e-9;
    const double c = concurrence(two_photon_dm(p, tau));
    CHECK(c == doctest::Approx(concurrence(two_photon_dm(p, -tau)))
                   .epsilon(1e-10));
    CHECK(c <= prev + 1e-12);
    prev = c;
  }
}

TEST_CASE("window averaging") {
  const SourceParams p{kPhiC, kPhiS, 6.7e7, 0.2};
  // degenerate window -> state at the window midpoint
  const auto point = two_photon_dm(p, 1e-8 + 5e-15);
  const auto narrow = window_average_dm(p, 1e-8, 1e-8 + 1e-14);
  CHECK((point.matrix - narrow.matrix).cwiseAbs().maxCoeff() < 1e-7);

  // tau-independent integrand -> that matrix
  const SourceParams flat{1e5, 0.0, 1e7};
  const auto avg = window_average_dm(flat, 0.0, 5e-8);
  CHECK((avg.matrix - two_photon_dm(flat, 0.0).matrix).cwiseAbs().maxCoeff() <
        1e-12);

  // quadrature cross-check against a dense trapezoid sum
  const Matrix4c w = window_integral(p, 0.0, 2.6e-8);
  Matrix4c ref = Matrix4c::Zero();
  const int n = 20000;
  const double h = 2.6e-8 / n;
  for (int k = 0; k <= n; ++k) {
    const double wt = (k == 0 || k == n) ? 0.5 : 1.0;
    ref += wt * correlation_tensor(p, k * h).r;
  }
  ref *= h;
  CHECK((w - ref).norm() < 1e-6 * ref.norm());

  CHECK_THROWS_AS(window_average_dm(p, 2e-8, 1e-8), ModelError);
}

TEST_CASE("Cauchy-Schwarz checks") {
  // classical thermal V light (m = 0): neither inequality violated
  CorrelationTensor thermal;
  thermal.tau = 0.0;
  thermal.r = Matrix4c::Zero();
  const double pc = 1e5, n0 = 3e4;
  thermal.r(0, 0) = pc * pc;
  thermal.r(1, 1) = thermal.r(2, 2) = pc * n0;
  thermal.r(1, 2) = thermal.r(2, 1) = pc * n0;  // n(0), fully bunched
  thermal.r(3, 3) = 2.0 * n0 * n0;
  const auto tc = cs_inequality_check(thermal);
  CHECK_FALSE(tc.violated_a);
  CHECK_FALSE(tc.violated_b);

  // weak squeezing, |m(0)| > n(0): Eq. (1a) violated
  const SourceParams weak{1e5, 1e3, 1e7};
  const auto f = field_moments(weak, 0.0);
  REQUIRE(std::abs(f.m_tau) > std::abs(f.n_tau));
  const auto wc = cs_inequality_check(correlation_tensor(weak, 0.0));
  CHECK(wc.violated_a);

  // violation of either <=> NPT, over a parameter sweep
  std::mt19937_64 rng(29);
  int violated_count = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    SourceParams p = random_params(rng);
    std::uniform_real_distribution<double> ut(0.0, 3.0);
    const double tau = ut(rng) / p.gamma;
    const auto tensor = correlation_tensor(p, tau);
    const auto c = cs_inequality_check(tensor);
    const bool viol = c.violated_a || c.violated_b;
    const bool npt = negativity(two_photon_dm(p, tau)) > 1e-12;
    CHECK(viol == npt);
    violated_count += viol;
  }
  CHECK(violated_count > 100);          // sweep exercises both branches
  CHECK(violated_count < 1000);
}

TEST_CASE("sweet-spot locus") {
  const double gamma = 1e7;
  const auto locus = sweet_spot_locus(gamma, {1e3, 1e5, 5e6, 1e7});
  for (const auto& pt : locus) {
    CHECK(pt.phi_S == doctest::Approx(pt.phi_C * pt.phi_C / gamma));
    CHECK(pt.valid == (pt.phi_S < gamma));
  }
  CHECK(locus[0].valid);
  CHECK_FALSE(locus[3].valid);

  // on-locus beats 10x flux-imbalanced point at equal phi_S
  const double phi_S = 1e4;
  const double on_pc = std::sqrt(gamma * phi_S);
  const double c_on =
      concurrence(two_photon_dm(SourceParams{on_pc, phi_S, gamma}, 0.0));
  const double c_off =
      concurrence(two_photon_dm(SourceParams{10.0 * on_pc, phi_S, gamma}, 0.0));
  CHECK(c_on >= c_off);
}

TEST_CASE("pair rates and gamma fit") {
  const SourceParams p{kPhiC, kPhiS, 6.7e7};
  CHECK(pair_rate_components(p, 0.0).cs_rate ==
        doctest::Approx(pair_rate_components(p, 4e-8).cs_rate));
  double prev = pair_rate_components(p, 0.0).sv_rate;
  for (int k = 1; k <= 20; ++k) {
    const double cur = pair_rate_components(p, k * 3e-9).sv_rate;
    CHECK(cur < prev);
    prev = cur;
  }

  // fitted gamma reproduces the crossover to < 1e-3 ns
  const double tau_star = 15e-9;
  const double g = fit_gamma(tau_star, kPhiC, kPhiS);
  const SourceParams pf{kPhiC, kPhiS, g};
  auto resid = [&](double t) {
    const auto r = pair_rate_components(pf, t);
    return r.sv_rate - r.cs_rate;
  };
  CHECK(std::abs(resid(tau_star)) < 1e-9 * kPhiC * kPhiC);
  CHECK(resid(tau_star - 1e-12) * resid(tau_star + 1e-12) <= 0.0);

  // shorter requested crossover -> larger fitted gamma (fast branch)
  CHECK(fit_gamma(5e-9, kPhiC, kPhiS) > g);

  // crossover delay sits at the concurrence maximum within one grid step
  double best_tau = 0.0, best_c = -1.0;
  const double step = 1e-9;
  for (int k = 0; k <= 60; ++k) {
    const double c = concurrence(two_photon_dm(pf, k * step));
    if (c > best_c) {
      best_c = c;
      best_tau = k * step;
    }
  }
  CHECK(std::abs(best_tau - tau_star) <= 7.0 * step);

  CHECK_THROWS_AS(fit_gamma(15e-9, 1e5, 2e5), ModelError);
  CHECK_THROWS_AS(fit_gamma(-1.0, kPhiC, kPhiS), ModelError);
}
