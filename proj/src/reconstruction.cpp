#include "pstomo/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iostream>
#include <random>
#include <thread>

namespace pstomo {

namespace {

// Position and weight of each parameter inside L (triplet-singlet basis).
struct ParamSlot {
  int row, col;
  Complex weight;
};

constexpr int kNumParams = 10;

const std::array<ParamSlot, kNumParams>& param_slots() {
  static const std::array<ParamSlot, kNumParams> slots = {{
      {0, 0, {1, 0}}, {1, 1, {1, 0}}, {2, 2, {1, 0}}, {3, 3, {1, 0}},
      {1, 0, {1, 0}}, {1, 0, {0, 1}},
      {2, 0, {1, 0}}, {2, 0, {0, 1}},
      {2, 1, {1, 0}}, {2, 1, {0, 1}},
  }};
  return slots;
}

constexpr double kCountFloor = 1e-9;

}  // namespace

Matrix4c cholesky_factor(const CholeskyParams& params) {
  Matrix4c l = Matrix4c::Zero();
  for (int k = 0; k < kNumParams; ++k) {
    const auto& s = param_slots()[k];
    l(s.row, s.col) += s.weight * params.p[k];
  }
  return l;
}

TwoPhotonState cholesky_to_dm(const CholeskyParams& params) {
  const Matrix4c l = cholesky_factor(params);
  Matrix4c g = l.adjoint() * l;
  const double tr = g.trace().real();
  if (!(tr > 0)) throw FitError("cholesky_to_dm: all-zero parameters");
  TwoPhotonState ts{g / tr, Basis::TripletSinglet};
  return basis_convert(ts, Basis::Computational);
}

CholeskyParams dm_to_cholesky(const TwoPhotonState& rho) {
  const Matrix4c x = basis_convert(rho, Basis::TripletSinglet).matrix;
  // Reverse (bottom-up) Cholesky of the 3x3 triplet block: B = L^dag L with
  // L lower triangular; the psi- population factors separately.
  Eigen::Matrix3cd b = x.topLeftCorner<3, 3>();
  Eigen::Matrix3cd l = Eigen::Matrix3cd::Zero();
  l(2, 2) = std::sqrt(std::max(0.0, b(2, 2).real()));
  if (std::abs(l(2, 2)) > 1e-14) {
    l(2, 0) = std::conj(b(0, 2)) / l(2, 2);
    l(2, 1) = std::conj(b(1, 2)) / l(2, 2);
  }
  l(1, 1) = std::sqrt(std::max(0.0, b(1, 1).real() - std::norm(l(2, 1))));
  if (std::abs(l(1, 1)) > 1e-14) {
    l(1, 0) = std::conj((b(0, 1) - std::conj(l(2, 0)) * l(2, 1)) / l(1, 1));
  }
  l(0, 0) = std::sqrt(
      std::max(0.0, b(0, 0).real() - std::norm(l(1, 0)) - std::norm(l(2, 0))));
  CholeskyParams p;
  p.p = {l(0, 0).real(), l(1, 1).real(), l(2, 2).real(),
         std::sqrt(std::max(0.0, x(3, 3).real())),
         l(1, 0).real(), l(1, 0).imag(),
         l(2, 0).real(), l(2, 0).imag(),
         l(2, 1).real(), l(2, 1).imag()};
  return p;
}

namespace {

// Everything the objective needs, precomputed once per fit.
struct FitProblem {
  std::array<Matrix4c, 10> povm_ts;   // U^dag Pi_m U
  std::array<double, 10> scale;       // eta_m alpha_m T_m
  std::array<double, 10> offset;      // acc_m T_m
  std::array<double, 10> observed;    // n_exp,m
};

FitProblem build_problem(const TomographyCounts& records,
                         const CalibrationData& calib) {
  calib.validate();
  const Matrix4c& u = ts_to_cb_isometry();
  FitProblem prob;
  bool any_counts = false;
  for (const auto& setting : default_settings()) {
    const int idx = setting.m - 1;
    const CountRecord& rec = records[idx];
    if (rec.m != setting.m) throw FitError("mle_fit: misordered records");
    if (!(rec.duration > 0)) throw FitError("mle_fit: non-positive duration");
    prob.povm_ts[idx] = u.adjoint() * povm_element(setting) * u;
    prob.scale[idx] = eta_factor(setting.m, calib.gamma) *
                      calib.alpha[idx] * rec.duration;
    prob.offset[idx] = accidentals(calib, setting.m) * rec.duration;
    prob.observed[idx] = static_cast<double>(rec.n_exp);
    if (rec.n_exp > 0) any_counts = true;
  }
  if (!any_counts) throw FitError("mle_fit: all counts are zero");
  return prob;
}

double objective(const FitProblem& prob, const CholeskyParams& params,
                 std::array<double, 10>* grad,
                 std::array<double, 10>* residuals = nullptr) {
  const Matrix4c l = cholesky_factor(params);
  const Matrix4c ld = l.adjoint();
  const double t = l.squaredNorm();
  if (!(t > 0)) return std::numeric_limits<double>::infinity();

  if (grad) grad->fill(0.0);
  double f = 0.0;
  for (int m = 0; m < 10; ++m) {
    const Matrix4c b = prob.povm_ts[m] * ld;  // Pi' L^dag
    const double q = std::max(0.0, (b * l).trace().real()) / t;
    const double nth = std::max(kCountFloor, prob.scale[m] * q + prob.offset[m]);
    const double r = nth - prob.observed[m];
    f += r * r / (2.0 * nth);
    if (residuals) (*residuals)[m] = r;
    if (grad) {
      // d f / d nth, with the 1/(2 nth) weight treated as nth-dependent.
      const double dfdn =
          (nth * nth - prob.observed[m] * prob.observed[m]) / (2.0 * nth * nth);
      for (int k = 0; k < kNumParams; ++k) {
        const auto& s = param_slots()[k];
        // d Tr[Pi' L^dag L] = 2 Re(w (Pi' L^dag)_{c,r}),
        // d Tr[L^dag L]     = 2 Re(w conj(L_{r,c})).
        const double dtrq = 2.0 * (s.weight * b(s.col, s.row)).real();
        const double dtrt = 2.0 * (s.weight * std::conj(l(s.row, s.col))).real();
        const double dq = (dtrq - q * dtrt) / t;
        (*grad)[k] += dfdn * prob.scale[m] * dq;
      }
    }
  }
  return f;
}

struct LocalResult {
  CholeskyParams p;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

using ParamVec = Eigen::Matrix<double, 10, 1>;

ParamVec to_vec(const CholeskyParams& p) {
  ParamVec v;
  for (int i = 0; i < 10; ++i) v(i) = p.p[i];
  return v;
}

CholeskyParams to_params(const ParamVec& v) {
  CholeskyParams p;
  for (int i = 0; i < 10; ++i) p.p[i] = v(i);
  return p;
}

// BFGS with Armijo backtracking on the 10 Cholesky parameters.
LocalResult bfgs(const FitProblem& prob, const CholeskyParams& start,
                 const FitOptions& opt) {
  using Mat10 = Eigen::Matrix<double, 10, 10>;
  ParamVec x = to_vec(start);
  if (x.norm() > 0) x /= x.norm();  // objective is scale-invariant in p
  std::array<double, 10> ga{};
  double f = objective(prob, to_params(x), &ga);
  ParamVec g = to_vec(CholeskyParams{ga});
  Mat10 h = Mat10::Identity();

  LocalResult res;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (g.norm() < opt.gradient_tol * std::max(1.0, std::abs(f))) {
      res.converged = true;
      break;
    }
    ParamVec d = -h * g;
    if (d.dot(g) >= 0) {  // not a descent direction, reset
      h = Mat10::Identity();
      d = -g;
    }
    double step = 1.0;
    const double slope = d.dot(g);
    double f_new = f;
    ParamVec x_new = x;
    bool ok = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = objective(prob, to_params(x_new), nullptr);
      if (f_new <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    std::array<double, 10> ga_new{};
    objective(prob, to_params(x_new), &ga_new);
    ParamVec g_new = to_vec(CholeskyParams{ga_new});
    const ParamVec s = x_new - x;
    const ParamVec y = g_new - g;
    const double ys = y.dot(s);
    if (ys > 1e-12 * y.norm() * s.norm()) {
      const Mat10 i = Mat10::Identity();
      const Mat10 v = i - (s * y.transpose()) / ys;
      h = v * h * v.transpose() + (s * s.transpose()) / ys;
    }
    const double df = f - f_new;
    x = x_new;
    g = g_new;
    f = f_new;
    if (df >= 0 && df < opt.objective_tol * std::max(1.0, std::abs(f))) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.p = to_params(x);
  res.f = f;
  res.iterations = it;
  return res;
}

// Linear-inversion seed: solve Tr[Pi'_m X] = (n_exp,m - acc_m T_m)/(eta alpha T)
// for the Hermitian permutation-invariant X, then project to the nearest PSD
// state.
CholeskyParams linear_inversion_seed(const FitProblem& prob) {
  std::array<Matrix4c, 10> basis{};
  for (auto& b : basis) b = Matrix4c::Zero();
  for (int k = 0; k < 4; ++k) basis[k](k, k) = 1.0;
  const std::array<std::pair<int, int>, 3> off = {{{1, 0}, {2, 0}, {2, 1}}};
  for (int j = 0; j < 3; ++j) {
    auto [r, c] = off[j];
    basis[4 + 2 * j](r, c) = 1.0;
    basis[4 + 2 * j](c, r) = 1.0;
    basis[5 + 2 * j](r, c) = Complex(0, 1);
    basis[5 + 2 * j](c, r) = Complex(0, -1);
  }
  Eigen::Matrix<double, 10, 10> a;
  Eigen::Matrix<double, 10, 1> y;
  for (int m = 0; m < 10; ++m) {
    for (int k = 0; k < 10; ++k) {
      a(m, k) = (prob.povm_ts[m] * basis[k]).trace().real();
    }
    y(m) = (prob.observed[m] - prob.offset[m]) /
           std::max(prob.scale[m], kCountFloor);
  }
  const Eigen::Matrix<double, 10, 1> x = a.colPivHouseholderQr().solve(y);
  Matrix4c rho_ts = Matrix4c::Zero();
  for (int k = 0; k < 10; ++k) rho_ts += x(k) * basis[k];
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho_ts);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.sum() <= 0) ev.setConstant(0.25);
  Matrix4c psd =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  psd /= psd.trace().real();
  return dm_to_cholesky(TwoPhotonState{psd, Basis::TripletSinglet});
}

}  // namespace

double mle_objective(const TomographyCounts& records,
                     const CalibrationData& calib, const CholeskyParams& p,
                     std::array<double, 10>* gradient) {
  return objective(build_problem(records, calib), p, gradient);
}

FitResult mle_fit(const TomographyCounts& records, const CalibrationData& calib,
                  const FitOptions& options) {
  const FitProblem prob = build_problem(records, calib);

  std::vector<CholeskyParams> starts;
  starts.reserve(options.n_starts);
  if (options.init) {
    starts.push_back(*options.init);
  } else {
    starts.push_back(linear_inversion_seed(prob));
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (static_cast<int>(starts.size()) < std::max(1, options.n_starts)) {
    CholeskyParams p;
    for (double& v : p.p) v = gauss(rng);
    starts.push_back(p);
  }

  LocalResult best;
  int total_iterations = 0;
  for (const auto& start : starts) {
    LocalResult r = bfgs(prob, start, options);
    total_iterations += r.iterations;
    if (r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f)) throw FitError("mle_fit: optimization failed");

  FitResult out;
  out.rho_hat = cholesky_to_dm(best.p);
  out.p_hat = best.p;
  out.objective = objective(prob, best.p, nullptr, &out.residuals);
  out.iterations = total_iterations;
  out.converged = best.converged;
  return out;
}

BootstrapResult bootstrap(const TomographyCounts& records,
                          const CalibrationData& calib, int n_resamples,
                          std::uint64_t seed, const FitOptions& fit_options) {
  if (n_resamples < 1) throw FitError("bootstrap: n_resamples must be >= 1");
  const FitResult base = mle_fit(records, calib, fit_options);

  struct Sample {
    double concurrence = 0.0;
    TwoPhotonState rho;
    bool ok = false;
  };
  std::vector<Sample> samples(n_resamples);

  FitOptions resample_options = fit_options;
  resample_options.n_starts = 4;
  resample_options.init = base.p_hat;

  auto run = [&](int r) {
    std::mt19937_64 rng(derive_stream(seed, 0xb00757ULL, r));
    TomographyCounts resampled = records;
    for (auto& rec : resampled) {
      std::poisson_distribution<long long> d(
          std::max<double>(0.0, static_cast<double>(rec.n_exp)));
      rec.n_exp = rec.n_exp > 0 ? d(rng) : 0;
    }
    FitOptions opts = resample_options;
    opts.seed = derive_stream(seed, 0x5a3eULL, r);
    try {
      FitResult fit = mle_fit(resampled, calib, opts);
      if (!fit.converged) return;
      samples[r].concurrence = concurrence(fit.rho_hat);
      samples[r].rho = fit.rho_hat;
      samples[r].ok = true;
    } catch (const std::exception&) {
    }
  };

  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  std::vector<std::future<void>> tasks;
  for (unsigned w = 0; w < workers; ++w) {
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (int r = static_cast<int>(w); r < n_resamples;
           r += static_cast<int>(workers)) {
        run(r);
      }
    }));
  }
  for (auto& t : tasks) t.get();

  BootstrapResult out;
  double sum = 0.0;
  for (const auto& s : samples) {
    if (!s.ok) {
      ++out.n_failed;
      continue;
    }
    sum += s.concurrence;
    out.dm_ensemble.push_back(s.rho);
  }
  const int n_ok = n_resamples - out.n_failed;
  if (n_ok == 0) throw FitError("bootstrap: every resample failed");
  if (out.n_failed > n_resamples / 20) {
    std::cerr << "bootstrap: warning, " << out.n_failed << "/" << n_resamples
              << " resamples failed to converge and were excluded\n";
  }
  out.concurrence_mean = sum / n_ok;
  if (n_ok < 2) {
    out.degenerate = true;
    out.concurrence_sigma = 0.0;
  } else {
    double ss = 0.0;
    int i = 0;
    for (const auto& s : samples) {
      if (s.ok) {
        const double d = s.concurrence - out.concurrence_mean;
        ss += d * d;
        ++i;
      }
    }
    out.concurrence_sigma = std::sqrt(ss / (n_ok - 1));
  }
  return out;
}

}  // namespace pstomo
