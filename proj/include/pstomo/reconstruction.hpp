#ifndef PSTOMO_RECONSTRUCTION_HPP
#define PSTOMO_RECONSTRUCTION_HPP

#include <optional>

#include "pstomo/simulator.hpp"

namespace pstomo {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The 10 real parameters of the lower-triangular factor L in the
// triplet-singlet basis; rho_PI = L^dag L / Tr[L^dag L] is PSD and
// permutation-invariant for any real vector.
struct CholeskyParams {
  std::array<double, 10> p{};
};

// Builds rho from p (normalized, converted to the computational basis).
TwoPhotonState cholesky_to_dm(const CholeskyParams& params);

// L itself, in the triplet-singlet basis.
Matrix4c cholesky_factor(const CholeskyParams& params);

// Inverse map: factor a permutation-invariant density matrix (computational
// basis) into CholeskyParams; used to seed the fit from linear inversion.
CholeskyParams dm_to_cholesky(const TwoPhotonState& rho);

struct FitResult {
  TwoPhotonState rho_hat;
  CholeskyParams p_hat;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::array<double, 10> residuals{};  // n_th,m - n_exp,m
};

struct FitOptions {
  int n_starts = 16;          // 1 data-driven + (n_starts-1) random
  int max_iterations = 400;
  double gradient_tol = 1e-8;
  double objective_tol = 1e-12;
  std::uint64_t seed = 0x5eedULL;
  std::optional<CholeskyParams> init;  // replaces the data-driven start
};

// Minimizes sum_m (n_th,m - n_exp,m)^2 / (2 n_th,m) over the Cholesky
// parameters, where n_th,m = Tr[Pi_m rho] eta_m alpha_m T_m + acc_m T_m.
FitResult mle_fit(const TomographyCounts& records, const CalibrationData& calib,
                  const FitOptions& options = {});

struct BootstrapResult {
  double concurrence_mean = 0.0;
  double concurrence_sigma = 0.0;
  std::vector<TwoPhotonState> dm_ensemble;
  int n_failed = 0;
  bool degenerate = false;  // n_resamples < 2
};

// Poisson-resamples the observed counts, refits each resample (warm-started
// from the base fit) and returns the mean and standard deviation of the
// concurrence over the ensemble.
BootstrapResult bootstrap(const TomographyCounts& records,
                          const CalibrationData& calib, int n_resamples = 100,
                          std::uint64_t seed = 0xb007ULL,
                          const FitOptions& fit_options = {});

// Objective and analytic gradient at p (exposed for tests).
double mle_objective(const TomographyCounts& records,
                     const CalibrationData& calib, const CholeskyParams& p,
                     std::array<double, 10>* gradient = nullptr);

}  // namespace pstomo

#endif
