#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "pstomo/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pstomo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

constexpr double kPaperPhiC = 9.6e5;
constexpr double kPaperPhiS = 1.9e5;
constexpr double kPaperCrossover = 15e-9;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path.string());
  return out;
}

// Paper-scale run presets; gamma is fitted to the 15 ns pair-rate crossover.
json preset_config(const std::string& name, std::uint64_t seed,
                   const std::string& out_dir) {
  const double gamma = fit_gamma(kPaperCrossover, kPaperPhiC, kPaperPhiS);
  json source{{"phi_C", kPaperPhiC}, {"phi_S", kPaperPhiS}, {"gamma", gamma}};
  json scan;
  double duration = 4000.0;
  if (name == "fig1b") {
    scan = {{"type", "tau_series"},
            {"centers_ns", {6.0, 30.0, 48.0, 66.0}},
            {"half_width_ns", 6.0}};
  } else if (name == "fig1c") {
    scan = {{"type", "tau_series"},
            {"centers_ns", {6.0, 18.0, 30.0, 42.0, 54.0, 66.0, 78.0}},
            {"half_width_ns", 6.0}};
  } else if (name == "fig1d") {
    // One 26 ns window centred on tau = 0: |tau| in [0, 13) ns.
    scan = {{"type", "tau_series"},
            {"centers_ns", {6.5}},
            {"half_width_ns", 6.5}};
  } else if (name == "null") {
    source["phi_S"] = 0.0;
    scan = {{"type", "tau_series"},
            {"centers_ns", {6.5}},
            {"half_width_ns", 6.5}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return json{{"source", source},  {"calib", "ideal"},
              {"scan", scan},      {"duration_s", duration},
              {"seed", seed},      {"output_dir", out_dir}};
}

json resolve_config_json(const std::string& config_path,
                         const std::string& preset, std::uint64_t seed,
                         const std::string& out_dir) {
  if (!preset.empty() && !config_path.empty()) {
    throw ConfigError("give either --config or --preset, not both");
  }
  if (!preset.empty()) return preset_config(preset, seed, out_dir);
  if (config_path.empty()) throw ConfigError("missing --config or --preset");
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config file: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  if (!out_dir.empty()) j["output_dir"] = out_dir;
  if (seed != 0) j["seed"] = seed;
  return j;
}

void write_csv_header(std::ofstream& out, const json& config_json,
                      std::uint64_t seed) {
  out << "# config_hash=" << config_hash(config_json) << " seed=" << seed
      << "\n";
}

void append_dm_row(std::ofstream& out, double tau, const SourceParams& params) {
  const TwoPhotonState rho = two_photon_dm(params, tau);
  const CsCheck cs = cs_inequality_check(correlation_tensor(params, tau));
  out << tau;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out << ',' << rho.matrix(i, j).real() << ',' << rho.matrix(i, j).imag();
  out << ',' << concurrence(rho) << ',' << negativity(rho) << ','
      << (cs.violated_a ? 1 : 0) << ',' << (cs.violated_b ? 1 : 0) << "\n";
}

int cmd_forward(const json& config_json) {
  const RunConfig cfg = run_config_from_json(config_json);
  const fs::path dir = cfg.output_dir;

  if (const auto* grid = std::get_if<FluxGridScan>(&cfg.scan)) {
    auto out = open_out(dir / "concurrence_surface.csv");
    write_csv_header(out, config_json, cfg.seed);
    out << "phi_C,phi_S,concurrence\n";
    for (double pc : grid->phi_C) {
      for (double ps : grid->phi_S) {
        SourceParams p = cfg.source;
        p.phi_C = pc;
        p.phi_S = ps;
        out << pc << ',' << ps << ',' << concurrence(two_photon_dm(p, 0.0))
            << "\n";
      }
    }
    std::cout << "wrote " << (dir / "concurrence_surface.csv").string() << "\n";
    return 0;
  }

  std::vector<double> taus;
  if (const auto* series = std::get_if<TauSeriesScan>(&cfg.scan)) {
    taus = series->centers;
  } else {
    taus = {std::get<SingleScan>(cfg.scan).tau};
  }
  auto out = open_out(dir / "dm_vs_tau.csv");
  write_csv_header(out, config_json, cfg.seed);
  out << "tau_s";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out << ",re_" << i << j << ",im_" << i << j;
  out << ",concurrence,negativity,cs_violated_a,cs_violated_b\n";
  for (double tau : taus) append_dm_row(out, tau, cfg.source);
  std::cout << "wrote " << (dir / "dm_vs_tau.csv").string() << "\n";
  return 0;
}

int cmd_simulate(const json& config_json) {
  const RunConfig cfg = run_config_from_json(config_json);
  const auto* series = std::get_if<TauSeriesScan>(&cfg.scan);
  if (!series) throw ConfigError("simulate requires a tau_series scan");

  const auto bins =
      simulate_tau_series(cfg.source, cfg.calib, cfg.duration_s,
                          series->centers, series->half_width, cfg.seed);
  const fs::path path = fs::path(cfg.output_dir) / "counts.jsonl";
  auto out = open_out(path);
  out << json{{"header", {{"config_hash", config_hash(config_json)},
                          {"seed", cfg.seed},
                          {"calib", calibration_to_json(cfg.calib)}}}}
      << "\n";
  for (std::size_t b = 0; b < bins.size(); ++b) {
    for (const auto& rec : bins[b]) {
      json j = count_record_to_json(rec);
      j["bin"] = b;
      out << j << "\n";
    }
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct CountsFile {
  std::map<int, TomographyCounts> bins;
  std::optional<CalibrationData> calib;
};

CountsFile load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open counts file: " + path);
  CountsFile file;
  std::map<int, int> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("counts file: bad JSON line");
    if (j.contains("header")) {
      if (j.at("header").contains("calib")) {
        file.calib = calibration_from_json(j.at("header").at("calib"));
      }
      continue;
    }
    const int bin = j.value("bin", 0);
    j.erase("bin");
    const CountRecord rec = count_record_from_json(j);
    file.bins[bin][rec.m - 1] = rec;
    ++seen[bin];
  }
  if (file.bins.empty()) throw ConfigError("counts file: no records");
  for (const auto& [bin, count] : seen) {
    if (count != 10) {
      throw ConfigError("counts file: bin " + std::to_string(bin) +
                        " needs all 10 outcomes, has " + std::to_string(count));
    }
  }
  return file;
}

CalibrationData resolve_calib(const std::string& calib_arg,
                              const CountsFile& file) {
  if (calib_arg.empty() || calib_arg == "embedded") {
    if (!file.calib) {
      throw ConfigError("counts file has no embedded calibration; use --calib");
    }
    return *file.calib;
  }
  if (calib_arg == "ideal") {
    return calibration_from_json(json("ideal"));
  }
  std::ifstream in(calib_arg);
  if (!in) throw IoError("cannot open calibration file: " + calib_arg);
  json j;
  in >> j;
  return calibration_from_json(j);
}

int cmd_reconstruct(const std::string& counts_path,
                    const std::string& calib_arg, const std::string& out_dir,
                    int resamples, std::uint64_t seed) {
  const CountsFile file = load_counts(counts_path);
  const CalibrationData calib = resolve_calib(calib_arg, file);
  const fs::path dir = out_dir;

  auto summary = open_out(dir / "summary.csv");
  summary << "# source=" << counts_path << " seed=" << seed << "\n";
  summary << "bin,tau_center_ns,concurrence,sigma,noon_fidelity,converged\n";

  for (const auto& [bin, records] : file.bins) {
    FitOptions options;
    options.seed = derive_stream(seed, bin, 0xf17);
    const FitResult fit = mle_fit(records, calib, options);
    const BootstrapResult boot =
        bootstrap(records, calib, resamples, derive_stream(seed, bin, 0xb007),
                  options);
    double center_ns = 0.0;
    if (records[0].tau_bin) {
      center_ns =
          0.5 * (records[0].tau_bin->first + records[0].tau_bin->second) * 1e9;
    }
    const double noon = noon_fidelity_max(fit.rho_hat).fidelity;
    json result = fit_result_to_json(fit);
    result["bootstrap"] = bootstrap_to_json(boot);
    result["tau_center_ns"] = center_ns;
    auto out = open_out(dir / ("rho_bin" + std::to_string(bin) + ".json"));
    out << result.dump(2) << "\n";
    summary << bin << ',' << center_ns << ',' << concurrence(fit.rho_hat)
            << ',' << boot.concurrence_sigma << ',' << noon << ','
            << (fit.converged ? 1 : 0) << "\n";
  }
  std::cout << "wrote " << (dir / "summary.csv").string() << "\n";
  return 0;
}

int cmd_fit_gamma(double crossover_ns, double phi_C, double phi_S) {
  const double gamma = fit_gamma(crossover_ns * 1e-9, phi_C, phi_S);
  SourceParams p{phi_C, phi_S, gamma, 0.0, 0.0, 0.0};
  const PairRates at = pair_rate_components(p, crossover_ns * 1e-9);
  std::cout << json{{"gamma", gamma},
                    {"crossover_ns", crossover_ns},
                    {"sv_rate", at.sv_rate},
                    {"cs_rate", at.cs_rate}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_bootstrap(const std::string& counts_path, const std::string& calib_arg,
                  const std::string& out_dir, int resamples,
                  std::uint64_t seed) {
  const CountsFile file = load_counts(counts_path);
  const CalibrationData calib = resolve_calib(calib_arg, file);
  const fs::path dir = out_dir;
  json all = json::object();
  for (const auto& [bin, records] : file.bins) {
    FitOptions options;
    options.seed = derive_stream(seed, bin, 0xf17);
    const BootstrapResult boot =
        bootstrap(records, calib, resamples, derive_stream(seed, bin, 0xb007),
                  options);
    all[std::to_string(bin)] = bootstrap_to_json(boot, true);
  }
  auto out = open_out(dir / "bootstrap.json");
  out << all.dump(2) << "\n";
  std::cout << "wrote " << (dir / "bootstrap.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polarization-squeezed light pair tomography toolkit"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, counts_path, calib_arg;
  std::uint64_t seed = 0;
  int resamples = 100;
  double crossover_ns = 15.0;
  double phi_C = kPaperPhiC, phi_S = kPaperPhiS;

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config JSON path");
    cmd->add_option("--preset", preset, "fig1b | fig1c | fig1d | null");
    cmd->add_option("--seed", seed, "RNG seed (overrides config)");
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
  };

  CLI::App* forward = app.add_subcommand("forward", "forward-model scan");
  add_config_opts(forward);

  CLI::App* simulate = app.add_subcommand("simulate", "synthetic experiment");
  add_config_opts(simulate);

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "tomographic reconstruction");
  reconstruct->add_option("--counts", counts_path, "counts.jsonl path")
      ->required();
  reconstruct->add_option("--calib", calib_arg,
                          "calibration JSON path, 'ideal', or 'embedded'");
  reconstruct->add_option("--out", out_dir, "output directory");
  reconstruct->add_option("--resamples", resamples, "bootstrap resamples");
  reconstruct->add_option("--seed", seed, "RNG seed");

  CLI::App* fitg = app.add_subcommand("fit-gamma", "fit squeezing bandwidth");
  fitg->add_option("--crossover-ns", crossover_ns, "SV/CS crossover delay");
  fitg->add_option("--phi-c", phi_C, "coherent flux, photons/s");
  fitg->add_option("--phi-s", phi_S, "squeezed flux, photons/s");

  CLI::App* boot = app.add_subcommand("bootstrap", "bootstrap uncertainty");
  boot->add_option("--counts", counts_path, "counts.jsonl path")->required();
  boot->add_option("--calib", calib_arg, "calibration source");
  boot->add_option("--out", out_dir, "output directory");
  boot->add_option("--resamples", resamples, "bootstrap resamples");
  boot->add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  if (out_dir.empty()) out_dir = ".";
  if (seed == 0) seed = 1;

  try {
    if (forward->parsed()) {
      return cmd_forward(resolve_config_json(config_path, preset, seed, out_dir));
    }
    if (simulate->parsed()) {
      return cmd_simulate(resolve_config_json(config_path, preset, seed, out_dir));
    }
    if (reconstruct->parsed()) {
      return cmd_reconstruct(counts_path, calib_arg, out_dir, resamples, seed);
    }
    if (fitg->parsed()) {
      return cmd_fit_gamma(crossover_ns, phi_C, phi_S);
    }
    if (boot->parsed()) {
      return cmd_bootstrap(counts_path, calib_arg, out_dir, resamples, seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
