#ifndef PSTOMO_IO_HPP
#define PSTOMO_IO_HPP

#include <string>
#include <variant>

#include <json.hpp>

#include "pstomo/reconstruction.hpp"

namespace pstomo {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Density matrix <-> {"basis": ..., "re": [[..]], "im": [[..]]}.
nlohmann::json state_to_json(const TwoPhotonState& state);
TwoPhotonState state_from_json(const nlohmann::json& j);

nlohmann::json source_to_json(const SourceParams& params);
SourceParams source_from_json(const nlohmann::json& j);

nlohmann::json calibration_to_json(const CalibrationData& calib);
CalibrationData calibration_from_json(const nlohmann::json& j);

nlohmann::json count_record_to_json(const CountRecord& rec);
CountRecord count_record_from_json(const nlohmann::json& j);

struct TauSeriesScan {
  std::vector<double> centers;  // seconds
  double half_width;            // seconds
};
struct FluxGridScan {
  std::vector<double> phi_C;
  std::vector<double> phi_S;
};
struct SingleScan {
  double tau;  // seconds
};

struct RunConfig {
  SourceParams source;
  CalibrationData calib;
  std::variant<TauSeriesScan, FluxGridScan, SingleScan> scan = SingleScan{0.0};
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
};

// Parses and schema-validates a run config; unknown keys are rejected.
// Durations and delays are seconds unless the key carries an explicit `_ns`
// suffix.  calib may be the string "ideal" (uniform gamma, zero background).
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// FNV-1a hash of the canonical (sorted-key) config serialization; stamped
// into every output header for reproducibility.
std::string config_hash(const nlohmann::json& j);

nlohmann::json fit_result_to_json(const FitResult& fit);
nlohmann::json bootstrap_to_json(const BootstrapResult& b,
                                 bool include_ensemble = false);

}  // namespace pstomo

#endif
