#include "pstomo/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pstomo {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::set<std::string>& required,
                  const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
  for (const auto& key : required) {
    if (!j.contains(key)) {
      throw ConfigError(where + ": missing key '" + key + "'");
    }
  }
}

// Accepts `base` or `base_s` in seconds, or `base_ns` in nanoseconds.
double get_seconds(const json& j, const std::string& base,
                   std::optional<double> fallback = std::nullopt) {
  const std::array<std::pair<std::string, double>, 3> keys = {{
      {base, 1.0}, {base + "_s", 1.0}, {base + "_ns", 1e-9}}};
  int found = 0;
  double value = 0.0;
  for (const auto& [key, scale] : keys) {
    if (j.contains(key)) {
      ++found;
      value = j.at(key).get<double>() * scale;
    }
  }
  if (found > 1) throw ConfigError("give '" + base + "' only once");
  if (found == 1) return value;
  if (fallback) return *fallback;
  throw ConfigError("missing key '" + base + "_s' (or '" + base + "_ns')");
}

}  // namespace

json state_to_json(const TwoPhotonState& state) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < 4; ++i) {
    json rrow = json::array(), irow = json::array();
    for (int j = 0; j < 4; ++j) {
      rrow.push_back(state.matrix(i, j).real());
      irow.push_back(state.matrix(i, j).imag());
    }
    re.push_back(rrow);
    im.push_back(irow);
  }
  return json{{"basis", to_string(state.basis)}, {"re", re}, {"im", im}};
}

TwoPhotonState state_from_json(const json& j) {
  require_keys(j, {"basis", "re", "im"}, {"basis", "re", "im"}, "state");
  const std::string b = j.at("basis").get<std::string>();
  Basis basis;
  if (b == "computational") {
    basis = Basis::Computational;
  } else if (b == "triplet_singlet") {
    basis = Basis::TripletSinglet;
  } else {
    throw ConfigError("state: unknown basis '" + b + "'");
  }
  Matrix4c m;
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != 4 || im.size() != 4) throw ConfigError("state: need 4x4");
  for (int i = 0; i < 4; ++i) {
    if (re[i].size() != 4 || im[i].size() != 4) {
      throw ConfigError("state: need 4x4");
    }
    for (int k = 0; k < 4; ++k) {
      m(i, k) = Complex(re[i][k].get<double>(), im[i][k].get<double>());
    }
  }
  return TwoPhotonState::make(m, basis);  // re-validates invariants
}

json source_to_json(const SourceParams& p) {
  return json{{"phi_C", p.phi_C},     {"phi_S", p.phi_S},
              {"gamma", p.gamma},     {"phase", p.phase},
              {"dephasing", p.dephasing}, {"leakage", p.leakage}};
}

SourceParams source_from_json(const json& j) {
  require_keys(j, {"phi_C", "phi_S", "gamma", "phase", "dephasing", "leakage"},
               {"phi_C", "phi_S", "gamma"}, "source");
  SourceParams p;
  p.phi_C = j.at("phi_C").get<double>();
  p.phi_S = j.at("phi_S").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.phase = j.value("phase", 0.0);
  p.dephasing = j.value("dephasing", 0.0);
  p.leakage = j.value("leakage", 0.0);
  p.validate();
  return p;
}

json calibration_to_json(const CalibrationData& c) {
  return json{{"gamma", c.gamma},
              {"beta", c.beta},
              {"background", c.background},
              {"alpha", c.alpha},
              {"delta_tau_s", c.delta_tau_s}};
}

namespace {

constexpr double kDefaultBrightness = 2e4;   // counts/s
constexpr double kDefaultDeltaTau = 26e-9;   // seconds

}  // namespace

CalibrationData calibration_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "ideal") {
      throw ConfigError("calib: unknown preset '" + j.get<std::string>() + "'");
    }
    return CalibrationData::ideal(kDefaultBrightness, kDefaultDeltaTau);
  }
  if (j.is_object() && j.contains("preset")) {
    require_keys(j, {"preset", "brightness", "delta_tau_s", "delta_tau_ns"},
                 {"preset"}, "calib");
    if (j.at("preset").get<std::string>() != "ideal") {
      throw ConfigError("calib: unknown preset");
    }
    return CalibrationData::ideal(j.value("brightness", kDefaultBrightness),
                                  get_seconds(j, "delta_tau", kDefaultDeltaTau));
  }
  require_keys(j, {"gamma", "beta", "background", "alpha", "delta_tau_s",
                   "delta_tau_ns"},
               {"gamma", "beta", "background", "alpha"}, "calib");
  CalibrationData c;
  c.gamma = j.at("gamma").get<std::array<double, 4>>();
  c.beta = j.at("beta").get<std::array<std::array<double, 4>, 10>>();
  c.background =
      j.at("background").get<std::array<std::array<double, 4>, 10>>();
  c.alpha = j.at("alpha").get<std::array<double, 10>>();
  c.delta_tau_s = get_seconds(j, "delta_tau");
  c.validate();
  return c;
}

json count_record_to_json(const CountRecord& rec) {
  json j{{"m", rec.m},
         {"n_exp", rec.n_exp},
         {"singles", rec.singles},
         {"duration_s", rec.duration},
         {"seed", rec.seed}};
  if (rec.tau_bin) {
    j["tau_lo_s"] = rec.tau_bin->first;
    j["tau_hi_s"] = rec.tau_bin->second;
  }
  return j;
}

CountRecord count_record_from_json(const json& j) {
  require_keys(j, {"m", "n_exp", "singles", "duration_s", "seed", "tau_lo_s",
                   "tau_hi_s"},
               {"m", "n_exp", "singles", "duration_s"}, "count record");
  CountRecord rec;
  rec.m = j.at("m").get<int>();
  rec.n_exp = j.at("n_exp").get<long long>();
  rec.singles = j.at("singles").get<std::array<long long, 4>>();
  rec.duration = j.at("duration_s").get<double>();
  rec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("tau_lo_s") != j.contains("tau_hi_s")) {
    throw ConfigError("count record: tau_lo_s and tau_hi_s must come together");
  }
  if (j.contains("tau_lo_s")) {
    rec.tau_bin = {j.at("tau_lo_s").get<double>(),
                   j.at("tau_hi_s").get<double>()};
  }
  if (rec.m < 1 || rec.m > 10) throw ConfigError("count record: bad m");
  if (rec.n_exp < 0) throw ConfigError("count record: negative counts");
  if (!(rec.duration > 0)) throw ConfigError("count record: bad duration");
  return rec;
}

RunConfig run_config_from_json(const json& j) {
  require_keys(j, {"source", "calib", "scan", "duration_s", "seed",
                   "output_dir"},
               {"source", "calib", "scan"}, "config");
  RunConfig cfg;
  cfg.source = source_from_json(j.at("source"));
  cfg.calib = calibration_from_json(j.at("calib"));
  cfg.duration_s = j.value("duration_s", 1.0);
  if (!(cfg.duration_s > 0)) throw ConfigError("config: duration_s must be > 0");
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.output_dir = j.value("output_dir", std::string("."));

  const json& s = j.at("scan");
  if (!s.is_object() || !s.contains("type")) {
    throw ConfigError("scan: missing 'type'");
  }
  const std::string type = s.at("type").get<std::string>();
  if (type == "tau_series") {
    require_keys(s, {"type", "centers", "centers_ns", "half_width",
                     "half_width_ns"},
                 {"type"}, "scan");
    TauSeriesScan scan;
    if (s.contains("centers") == s.contains("centers_ns")) {
      throw ConfigError("scan: give exactly one of centers / centers_ns");
    }
    if (s.contains("centers")) {
      scan.centers = s.at("centers").get<std::vector<double>>();
    } else {
      for (double c : s.at("centers_ns").get<std::vector<double>>()) {
        scan.centers.push_back(c * 1e-9);
      }
    }
    scan.half_width = get_seconds(s, "half_width");
    cfg.scan = scan;
  } else if (type == "flux_grid") {
    require_keys(s, {"type", "phi_C", "phi_S"}, {"type", "phi_C", "phi_S"},
                 "scan");
    cfg.scan = FluxGridScan{s.at("phi_C").get<std::vector<double>>(),
                            s.at("phi_S").get<std::vector<double>>()};
  } else if (type == "single") {
    require_keys(s, {"type", "tau", "tau_ns"}, {"type"}, "scan");
    cfg.scan = SingleScan{get_seconds(s, "tau", 0.0)};
  } else {
    throw ConfigError("scan: unknown type '" + type + "'");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

std::string config_hash(const json& j) {
  json physics = j;
  // identify the run, not where it was written
  if (physics.is_object()) physics.erase("output_dir");
  const std::string canon = physics.dump();  // nlohmann objects iterate sorted
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

json fit_result_to_json(const FitResult& fit) {
  return json{{"rho", state_to_json(fit.rho_hat)},
              {"p", fit.p_hat.p},
              {"objective", fit.objective},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"residuals", fit.residuals}};
}

json bootstrap_to_json(const BootstrapResult& b, bool include_ensemble) {
  json j{{"concurrence_mean", b.concurrence_mean},
         {"concurrence_sigma", b.concurrence_sigma},
         {"n_failed", b.n_failed},
         {"degenerate", b.degenerate}};
  if (include_ensemble) {
    json ens = json::array();
    for (const auto& rho : b.dm_ensemble) ens.push_back(state_to_json(rho));
    j["dm_ensemble"] = ens;
  }
  return j;
}

}  // namespace pstomo
