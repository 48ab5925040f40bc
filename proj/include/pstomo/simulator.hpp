#ifndef PSTOMO_SIMULATOR_HPP
#define PSTOMO_SIMULATOR_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pstomo/forward.hpp"
#include "pstomo/measurement.hpp"

namespace pstomo {

struct CountRecord {
  int m = 0;                      // setting index 1..10
  long long n_exp = 0;            // observed coincidences
  std::array<long long, 4> singles{};
  double duration = 0.0;          // live acquisition time, seconds
  std::optional<std::pair<double, double>> tau_bin;  // (lo, hi) seconds
  std::uint64_t seed = 0;         // stream seed used for this record
};

using TomographyCounts = std::array<CountRecord, 10>;

// Deterministic derived RNG stream id: every (seed, bin, setting) triple owns
// an independent counter-hashed stream.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t bin,
                            std::uint64_t setting);

// Draws Poisson coincidence and singles counts for the 10 tomography outcomes
// from the window-averaged forward-model state.  The total duration is split
// over the 7 physical waveplate configurations; outcomes sharing a
// configuration share its live time.
TomographyCounts simulate_tomography(const SourceParams& params,
                                     const CalibrationData& calib,
                                     double duration,
                                     std::pair<double, double> window,
                                     std::uint64_t seed);

// One simulate_tomography per bin, bin i covering
// |tau| in [center_i - half_width, center_i + half_width].
std::vector<TomographyCounts> simulate_tau_series(
    const SourceParams& params, const CalibrationData& calib, double duration,
    const std::vector<double>& tau_centers, double half_width,
    std::uint64_t seed);

// Expected coincidence counts per outcome for a given window (rate x live
// time), the Poisson means used by simulate_tomography.
std::array<double, 10> expected_count_means(const SourceParams& params,
                                            const CalibrationData& calib,
                                            double duration,
                                            std::pair<double, double> window);

// Live time of outcome m (1..10) when `duration` is split over the 7
// waveplate configurations.
double live_time(double duration, int m);

}  // namespace pstomo

#endif
