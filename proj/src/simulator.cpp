#include "pstomo/simulator.hpp"

#include <cmath>
#include <random>

namespace pstomo {

namespace {

// splitmix64; mixes (seed, bin, setting) into one stream id.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

long long draw_poisson(double mean, std::mt19937_64& rng) {
  if (mean <= 0) return 0;
  std::poisson_distribution<long long> d(mean);
  return d(rng);
}

// Settings sharing a physical waveplate configuration share live time.
int config_index(int m) {
  switch (m) {
    case 1: case 2: case 3: return 0;   // (0, 0)
    case 4: return 1;                   // (pi/16, 0)
    case 5: case 6: return 2;           // (pi/8, 0)
    case 7: return 3;                   // (pi/8, pi/4)
    case 8: return 4;                   // (pi/8, pi/8)
    case 9: return 5;                   // (pi/4, pi/8)
    case 10: return 6;                  // (0, pi/8)
    default: throw MeasurementError("config_index: bad setting");
  }
}

}  // namespace

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t bin,
                            std::uint64_t setting) {
  return mix(mix(mix(seed) ^ bin) ^ setting);
}

double live_time(double duration, int m) {
  config_index(m);  // validates m
  return duration / 7.0;
}

std::array<double, 10> expected_count_means(const SourceParams& params,
                                            const CalibrationData& calib,
                                            double duration,
                                            std::pair<double, double> window) {
  calib.validate();
  const TwoPhotonState rho =
      window_average_dm(params, window.first, window.second);
  std::array<double, 10> means{};
  for (const auto& setting : default_settings()) {
    means[setting.m - 1] = expected_counts(rho, setting, calib) *
                           live_time(duration, setting.m);
  }
  return means;
}

TomographyCounts simulate_tomography(const SourceParams& params,
                                     const CalibrationData& calib,
                                     double duration,
                                     std::pair<double, double> window,
                                     std::uint64_t seed) {
  if (!(duration > 0)) throw ModelError("simulate: duration must be > 0");
  const auto means = expected_count_means(params, calib, duration, window);
  TomographyCounts records{};
  for (int m = 1; m <= 10; ++m) {
    const std::uint64_t stream = derive_stream(seed, 0, m);
    std::mt19937_64 rng(stream);
    CountRecord rec;
    rec.m = m;
    rec.duration = live_time(duration, m);
    rec.n_exp = draw_poisson(means[m - 1], rng);
    for (int i = 0; i < 4; ++i) {
      rec.singles[i] = draw_poisson(calib.beta[m - 1][i] * rec.duration, rng);
    }
    rec.tau_bin = window;
    rec.seed = stream;
    records[m - 1] = rec;
  }
  return records;
}

std::vector<TomographyCounts> simulate_tau_series(
    const SourceParams& params, const CalibrationData& calib, double duration,
    const std::vector<double>& tau_centers, double half_width,
    std::uint64_t seed) {
  if (tau_centers.empty()) throw ModelError("simulate_tau_series: no bins");
  if (!(half_width > 0)) throw ModelError("simulate_tau_series: empty bins");
  for (std::size_t i = 0; i < tau_centers.size(); ++i) {
    for (std::size_t j = i + 1; j < tau_centers.size(); ++j) {
      if (std::abs(tau_centers[i] - tau_centers[j]) < 2 * half_width) {
        throw ModelError("simulate_tau_series: overlapping bins");
      }
    }
  }
  std::vector<TomographyCounts> out;
  out.reserve(tau_centers.size());
  for (std::size_t b = 0; b < tau_centers.size(); ++b) {
    const double lo = std::max(0.0, tau_centers[b] - half_width);
    const double hi = tau_centers[b] + half_width;
    // Distinct per-bin streams derived from the master seed.
    out.push_back(simulate_tomography(params, calib, duration, {lo, hi},
                                      derive_stream(seed, b + 1, 0)));
  }
  return out;
}

}  // namespace pstomo
