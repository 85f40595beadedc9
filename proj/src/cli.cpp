#include "lrcov/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lrcov/errors.hpp"
#include "lrcov/fpca.hpp"
#include "lrcov/normal.hpp"

namespace lrcov {

namespace {

constexpr const char* kVersion = "1.0.0";

const std::vector<std::string>& allowed_keys(const std::string& command) {
  static const std::vector<std::string> estimate{"kernel", "flat_top_rho", "h",        "unbiased",
                                                 "psd",    "m_trunc",      "pilot_h",  "out"};
  static const std::vector<std::string> fpca{"kernel", "flat_top_rho", "h",       "unbiased", "psd",
                                             "m_trunc", "pilot_h",     "out",     "p",        "level"};
  static const std::vector<std::string> bandwidth{"kernel", "flat_top_rho", "m_trunc", "pilot_h",
                                                  "out"};
  static const std::vector<std::string> simulate{"dgp", "n", "grid", "seed", "out", "kernel",
                                                 "flat_top_rho"};
  static const std::vector<std::string> mc{"dgp",         "kernel",       "flat_top_rho", "n",
                                           "grid",        "h",            "replications", "projections",
                                           "eigen_levels", "seed",        "unbiased",     "centered",
                                           "psd",         "threads",      "bias_rate",    "out"};
  if (command == "estimate") return estimate;
  if (command == "fpca") return fpca;
  if (command == "bandwidth") return bandwidth;
  if (command == "simulate") return simulate;
  if (command == "mc-verify") return mc;
  throw ConfigError("unknown command '" + command + "'");
}

template <typename T>
void read_key(const Json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void read_key(const Json& j, const char* key, std::optional<T>& target) {
  if (!j.contains(key)) return;
  T value{};
  read_key(j, key, value);
  target = value;
}

std::string h_from_json(const Json& v) {
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  throw ConfigError("config key 'h' must be a number or a rule string");
}

KernelSpec kernel_of(const RunConfig& cfg) { return kernel_from_config(cfg.kernel, cfg.flat_top_rho); }

std::filesystem::path prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.out.string() + "': " + ec.message());
  return cfg.out;
}

Dataset load_data(const RunConfig& cfg) {
  if (!cfg.data) throw ConfigError(cfg.command + " needs --data PATH");
  return read_dataset(*cfg.data);
}

Json selection_to_json(const BandwidthSelection& s) {
  return Json{{"h", s.h},
              {"c0", s.c0},
              {"F_norm", s.f_norm},
              {"C_integral", s.c_integral},
              {"fallback_used", s.fallback_used},
              {"clamped", s.clamped},
              {"bias_regime_warning", s.bias_regime_warning},
              {"pilot_h", s.pilot_h},
              {"m_trunc", s.m_trunc}};
}

struct ChosenBandwidth {
  Bandwidth h;
  Json trace;
};

ChosenBandwidth choose_bandwidth(const RunConfig& cfg, const CurveSample& sample,
                                 const KernelSpec& kernel) {
  const HRule rule = HRule::parse(cfg.h);
  Json trace{{"rule", rule.describe()}};
  if (rule.kind() == HRule::Kind::Plugin) {
    if (!kernel.has_finite_q()) {
      throw ConfigError("plug-in bandwidth is undefined for the " + kernel.name() +
                        " kernel; pass a fixed value or power:a,b");
    }
    std::optional<Bandwidth> pilot;
    if (cfg.pilot_h) pilot = Bandwidth(*cfg.pilot_h);
    const BandwidthSelection sel = plugin_bandwidth(sample, kernel, pilot, cfg.m_trunc);
    trace["plugin"] = selection_to_json(sel);
    return {Bandwidth(sel.h), trace};
  }
  const Bandwidth h = rule.resolve(sample, kernel);
  if (h.degenerate()) trace["warning"] = "h < 1: only lag 0 carries weight";
  if (kernel.has_finite_q() && std::pow(h.value(), kernel.q_char()) > sample.size()) {
    trace["bias_regime_warning"] = true;
  }
  return {h, trace};
}

LrcovEstimate estimate_from(const RunConfig& cfg, const CurveSample& sample,
                            const KernelSpec& kernel, Json& meta) {
  const ChosenBandwidth chosen = choose_bandwidth(cfg, sample, kernel);
  LrcovEstimate est = estimate_lrcov(sample, kernel, chosen.h,
                                     EstimatorOptions{.unbiased = cfg.unbiased, .centered = true});
  if (cfg.psd) est = project_psd(est);
  meta["n_obs"] = sample.size();
  meta["grid_size"] = sample.grid_size();
  meta["kernel"] = kernel.name();
  meta["h"] = chosen.h.value();
  meta["h_selection"] = chosen.trace;
  meta["max_lag"] = est.max_lag;
  meta["psd_applied"] = est.psd_projected;
  return est;
}

Json base_metadata(const RunConfig& cfg) {
  return Json{{"command", cfg.command}, {"version", kVersion}, {"config", cfg.to_json()}};
}

std::string qq_csv(const ProjectionStats& p) {
  std::vector<double> sorted = p.values;
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(p.moments.variance);
  const double n = static_cast<double>(sorted.size());
  std::string out = "index,empirical_standardized,normal_quantile\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double z = sd > 0.0 ? (sorted[i] - p.moments.mean) / sd : 0.0;
    out += std::to_string(i + 1) + ',' + format_double(z) + ',' +
           format_double(normal_quantile((static_cast<double>(i) + 0.5) / n)) + '\n';
  }
  return out;
}

}  // namespace

Json RunConfig::to_json() const {
  Json j{{"kernel", kernel}, {"out", out.string()}};
  if (kernel == "flat-top" || kernel == "flat_top" || kernel == "flattop") j["flat_top_rho"] = flat_top_rho;
  if (data) j["data"] = data->string();
  if (command == "estimate" || command == "fpca" || command == "mc-verify") {
    j["h"] = h;
    j["unbiased"] = unbiased;
    j["psd"] = psd;
  }
  if (command == "estimate" || command == "fpca" || command == "bandwidth") {
    j["m_trunc"] = m_trunc ? Json(*m_trunc) : Json(nullptr);
    j["pilot_h"] = pilot_h ? Json(*pilot_h) : Json(nullptr);
  }
  if (command == "fpca") {
    j["p"] = p;
    j["level"] = level;
  }
  if (command == "simulate" || command == "mc-verify") {
    j["dgp"] = dgp_to_json(dgp);
    j["n"] = n_obs;
    j["grid"] = grid_size;
    j["seed"] = seed;
  }
  if (command == "mc-verify") {
    j["replications"] = replications;
    j["projections"] = projections;
    j["eigen_levels"] = eigen_levels;
    j["centered"] = centered;
    j["threads"] = threads;
    if (bias_rate) {
      j["bias_rate"] = Json{{"h_grid", bias_rate->h_grid}, {"replications", bias_rate->replications}};
    }
  }
  return j;
}

RunConfig resolve_config(const std::string& command, const Json& file_config,
                         const CliOverrides& overrides) {
  RunConfig cfg;
  cfg.command = command;
  const Json j = file_config.is_null() ? Json::object() : file_config;
  require_keys(j, allowed_keys(command), "config");

  read_key(j, "kernel", cfg.kernel);
  read_key(j, "flat_top_rho", cfg.flat_top_rho);
  if (j.contains("h")) cfg.h = h_from_json(j.at("h"));
  read_key(j, "unbiased", cfg.unbiased);
  read_key(j, "centered", cfg.centered);
  read_key(j, "psd", cfg.psd);
  read_key(j, "p", cfg.p);
  read_key(j, "level", cfg.level);
  read_key(j, "m_trunc", cfg.m_trunc);
  read_key(j, "pilot_h", cfg.pilot_h);
  read_key(j, "seed", cfg.seed);
  read_key(j, "n", cfg.n_obs);
  read_key(j, "grid", cfg.grid_size);
  read_key(j, "replications", cfg.replications);
  read_key(j, "projections", cfg.projections);
  read_key(j, "eigen_levels", cfg.eigen_levels);
  read_key(j, "threads", cfg.threads);
  if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
  if (j.contains("dgp")) cfg.dgp = dgp_from_json(j.at("dgp"));
  if (j.contains("bias_rate")) {
    const Json& b = j.at("bias_rate");
    require_keys(b, {"h_grid", "replications"}, "bias_rate");
    BiasRateConfig br;
    read_key(b, "h_grid", br.h_grid);
    read_key(b, "replications", br.replications);
    cfg.bias_rate = br;
  }

  if (overrides.data) cfg.data = overrides.data;
  if (overrides.out) cfg.out = *overrides.out;
  if (overrides.kernel) cfg.kernel = *overrides.kernel;
  if (overrides.h) cfg.h = *overrides.h;
  if (overrides.unbiased) cfg.unbiased = true;
  if (overrides.psd) cfg.psd = true;
  if (overrides.p) cfg.p = *overrides.p;
  if (overrides.level) cfg.level = *overrides.level;
  if (overrides.seed) cfg.seed = *overrides.seed;

  // Validate what can be validated without data.
  kernel_of(cfg);
  if (command == "estimate" || command == "fpca" || command == "mc-verify") HRule::parse(cfg.h);
  if (cfg.p < 1) throw ConfigError("p must be >= 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (cfg.m_trunc && *cfg.m_trunc < 1) throw ConfigError("m_trunc must be >= 1");
  if (cfg.pilot_h && !(*cfg.pilot_h > 0.0)) throw ConfigError("pilot_h must be positive");
  if (command == "simulate" || command == "mc-verify") {
    if (cfg.n_obs < 1) throw ConfigError("n must be >= 1");
    if (cfg.grid_size < 1) throw ConfigError("grid must be >= 1");
    if (cfg.dgp.noise.basis_size() > cfg.grid_size) {
      throw ConfigError("dgp uses " + std::to_string(cfg.dgp.noise.basis_size()) +
                        " basis functions but the grid has only " + std::to_string(cfg.grid_size) +
                        " points");
    }
  }
  if (command == "mc-verify") {
    if (cfg.n_obs < 2) throw ConfigError("mc-verify needs n >= 2");
    if (cfg.replications < 2) throw ConfigError("mc-verify needs replications >= 2");
    const Grid grid(cfg.grid_size);
    for (const auto& name : cfg.projections) projection_surface(name, grid);
    for (int l : cfg.eigen_levels) {
      if (l < 1 || l > cfg.grid_size) throw ConfigError("eigen level " + std::to_string(l) + " out of range");
    }
    if (cfg.bias_rate) {
      if (cfg.bias_rate->h_grid.size() < 3) throw ConfigError("bias_rate.h_grid needs at least 3 values");
      if (cfg.bias_rate->replications < 2) throw ConfigError("bias_rate.replications must be >= 2");
    }
  }
  return cfg;
}

void cmd_estimate(const RunConfig& cfg) {
  const KernelSpec kernel = kernel_of(cfg);
  const Dataset data = load_data(cfg);
  Json meta = base_metadata(cfg);
  const LrcovEstimate est = estimate_from(cfg, data.sample, kernel, meta);
  const auto dir = prepare_out(cfg);
  write_text(dir / "lrcov.csv", matrix_to_csv(est.surface));
  write_json(dir / "metadata.json", meta);
}

void cmd_fpca(const RunConfig& cfg) {
  const KernelSpec kernel = kernel_of(cfg);
  const Dataset data = load_data(cfg);
  if (cfg.p > data.sample.grid_size()) {
    throw ConfigError("p = " + std::to_string(cfg.p) + " exceeds the grid size " +
                      std::to_string(data.sample.grid_size()));
  }
  Json meta = base_metadata(cfg);
  const LrcovEstimate est = estimate_from(cfg, data.sample, kernel, meta);
  const EigenSystem sys = eigendecompose(est.surface);
  const SeparationReport sep = check_separation(sys.eigenvalues, cfg.p);
  meta["separation"] = Json{{"gaps", sep.gaps},
                            {"tolerance", sep.tolerance},
                            {"separated", sep.separated},
                            {"offending_level", sep.offending_level}};
  require_separation(sys.eigenvalues, cfg.p);

  Eigen::MatrixXd table(cfg.p, 4);
  for (int l = 1; l <= cfg.p; ++l) {
    const ConfidenceInterval ci =
        eigenvalue_ci(sys, kernel, est.n_obs, est.bandwidth.value(), l, cfg.level);
    table.row(l - 1) << l, sys.value(l), ci.low, ci.high;
    if (l == 1) meta["z"] = ci.z;
  }
  std::vector<std::string> fn_header;
  for (int l = 1; l <= cfg.p; ++l) fn_header.push_back("v" + std::to_string(l));
  meta["eigenvalues_all"] = std::vector<double>(sys.eigenvalues.data(),
                                                sys.eigenvalues.data() + sys.eigenvalues.size());
  const auto dir = prepare_out(cfg);
  write_text(dir / "eigenvalues.csv", matrix_to_csv(table, {"level", "lambda", "ci_low", "ci_high"}));
  write_text(dir / "eigenfunctions.csv",
             matrix_to_csv(sys.eigenfunctions.leftCols(cfg.p), fn_header));
  write_json(dir / "metadata.json", meta);
}

void cmd_bandwidth(const RunConfig& cfg) {
  const KernelSpec kernel = kernel_of(cfg);
  if (!kernel.has_finite_q()) {
    throw ConfigError("plug-in bandwidth is undefined for the " + kernel.name() + " kernel");
  }
  const Dataset data = load_data(cfg);
  std::optional<Bandwidth> pilot;
  if (cfg.pilot_h) pilot = Bandwidth(*cfg.pilot_h);
  const BandwidthSelection sel = plugin_bandwidth(data.sample, kernel, pilot, cfg.m_trunc);
  const Json result{{"h_plugin", sel.h},
                    {"c0_hat", sel.c0},
                    {"F_norm_hat", sel.f_norm},
                    {"C_integral_hat", sel.c_integral},
                    {"fallback_used", sel.fallback_used},
                    {"clamped", sel.clamped},
                    {"bias_regime_warning", sel.bias_regime_warning},
                    {"pilot_h", sel.pilot_h},
                    {"m_trunc", sel.m_trunc}};
  Json meta = base_metadata(cfg);
  meta["n_obs"] = data.sample.size();
  meta["grid_size"] = data.sample.grid_size();
  meta["result"] = result;
  const auto dir = prepare_out(cfg);
  write_json(dir / "bandwidth.json", result);
  write_json(dir / "metadata.json", meta);
}

void cmd_simulate(const RunConfig& cfg) {
  const KernelSpec kernel = kernel_of(cfg);
  const Grid grid(cfg.grid_size);
  DgpSpec spec = cfg.dgp;
  spec.seed = cfg.seed;
  const CurveSample sample = generate(spec, cfg.n_obs, grid);
  const TruthSet t = truth(spec, grid, kernel);

  Json truth_json;
  truth_json["long_run_factor"] = long_run_factor(spec);
  truth_json["C_integral"] = surface_integral(t.c);
  truth_json["Sigma_integral"] = surface_integral(t.noise_covariance);
  truth_json["C_norm"] = l2_norm_surface(t.c);
  std::vector<double> gamma_norms;
  for (const auto& g : t.gammas) gamma_norms.push_back(l2_norm_surface(g));
  truth_json["gamma_norms"] = gamma_norms;
  truth_json["eigenvalues"] =
      std::vector<double>(t.eigen.eigenvalues.data(), t.eigen.eigenvalues.data() + t.eigen.size());
  if (t.bias) {
    truth_json["kernel"] = kernel.name();
    truth_json["F_norm"] = l2_norm_surface(t.bias->surface);
  }
  std::vector<std::vector<double>> c_rows(static_cast<std::size_t>(t.c.rows()));
  for (Eigen::Index r = 0; r < t.c.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.c.cols(); ++c) c_rows[static_cast<std::size_t>(r)].push_back(t.c(r, c));
  }
  truth_json["C"] = c_rows;

  const auto dir = prepare_out(cfg);
  write_text(dir / "sample.csv", matrix_to_csv(sample.data()));
  write_json(dir / "truth.json", truth_json);
  write_json(dir / "metadata.json", base_metadata(cfg));
}

void cmd_mc_verify(const RunConfig& cfg) {
  const KernelSpec kernel = kernel_of(cfg);
  const Grid grid(cfg.grid_size);
  ExperimentSpec spec;
  spec.dgp = cfg.dgp;
  spec.kernel = kernel;
  spec.n_obs = cfg.n_obs;
  spec.grid_size = cfg.grid_size;
  spec.h_rule = HRule::parse(cfg.h);
  spec.replications = cfg.replications;
  for (const auto& name : cfg.projections) {
    spec.projections.push_back(projection_surface(name, grid));
    spec.projection_names.push_back(name);
  }
  spec.eigen_levels = cfg.eigen_levels;
  spec.master_seed = cfg.seed;
  spec.estimator = EstimatorOptions{.unbiased = cfg.unbiased, .centered = cfg.centered};
  spec.psd = cfg.psd;
  spec.threads = cfg.threads;

  const McReport report = run_experiment(spec);
  Json meta = base_metadata(cfg);
  Json report_json = report_to_json(report);

  const auto dir = prepare_out(cfg);
  {
    std::vector<std::string> header{"replication"};
    for (const auto& p : report.projections) header.push_back(p.name);
    for (const auto& e : report.eigen_levels) {
      header.push_back("lambda_error_" + std::to_string(e.level));
      header.push_back("eigenfunction_deviation_" + std::to_string(e.level));
    }
    const auto cols = static_cast<Eigen::Index>(header.size());
    Eigen::MatrixXd table(report.replications, cols);
    for (int r = 0; r < report.replications; ++r) {
      Eigen::Index c = 0;
      table(r, c++) = r;
      for (const auto& p : report.projections) table(r, c++) = p.values[static_cast<std::size_t>(r)];
      for (const auto& e : report.eigen_levels) {
        table(r, c++) = e.errors[static_cast<std::size_t>(r)];
        table(r, c++) = e.deviations[static_cast<std::size_t>(r)];
      }
    }
    write_text(dir / "replications.csv", matrix_to_csv(table, header));
  }
  for (std::size_t i = 0; i < report.projections.size(); ++i) {
    write_text(dir / ("qq_" + std::to_string(i + 1) + ".csv"), qq_csv(report.projections[i]));
  }
  if (cfg.bias_rate) {
    DgpSpec dgp = cfg.dgp;
    const BiasRateResult br = bias_rate_check(dgp, kernel, cfg.n_obs, cfg.bias_rate->h_grid,
                                              cfg.bias_rate->replications, cfg.seed,
                                              cfg.grid_size, cfg.threads);
    report_json["bias_rate"] = bias_rate_to_json(br);
    std::string csv = "h,log_h,error,log_error,mc_sd,predicted\n";
    for (std::size_t i = 0; i < br.h_grid.size(); ++i) {
      csv += format_double(br.h_grid[i]) + ',' + format_double(std::log(br.h_grid[i])) + ',' +
             format_double(br.errors[i]) + ',' + format_double(std::log(br.errors[i])) + ',' +
             format_double(br.mc_sd[i]) + ',' + format_double(br.predicted[i]) + '\n';
    }
    write_text(dir / "bias_rate.csv", csv);
  }
  write_json(dir / "report.json", report_json);
  write_json(dir / "metadata.json", meta);
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const UnsupportedError*>(&e)) return kExitConfig;
  if (dynamic_cast<const PreconditionError*>(&e)) return kExitPrecondition;
  if (dynamic_cast<const Json::exception*>(&e)) return kExitConfig;
  return kExitNumeric;
}

int execute(const RunConfig& cfg, std::ostream& err) {
  try {
    if (cfg.command == "estimate") {
      cmd_estimate(cfg);
    } else if (cfg.command == "fpca") {
      cmd_fpca(cfg);
    } else if (cfg.command == "bandwidth") {
      cmd_bandwidth(cfg);
    } else if (cfg.command == "simulate") {
      cmd_simulate(cfg);
    } else if (cfg.command == "mc-verify") {
      cmd_mc_verify(cfg);
    } else {
      throw ConfigError("unknown command '" + cfg.command + "'");
    }
  } catch (const std::exception& e) {
    err << "lrcov " << cfg.command << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{
      "Long-run covariance estimation for functional time series.\n"
      "Data files hold one curve per row: N rows of G comma-separated values on the\n"
      "midpoint grid t_g = (g - 1/2)/G, with an optional header row."};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string data;
  std::string out_dir;
  std::string kernel;
  std::string h;
  bool unbiased = false;
  bool psd = false;
  int p = 0;
  double level = 0.0;
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", "Estimate the long-run covariance surface (lrcov.csv, metadata.json)"},
      {"fpca", "Eigenvalues with confidence intervals and eigenfunctions"},
      {"bandwidth", "Plug-in AMSE bandwidth (bandwidth.json)"},
      {"simulate", "Simulate a functional time series with its exact truth (sample.csv, truth.json)"},
      {"mc-verify", "Monte Carlo check of the estimator's limit theory (report.json, plot data)"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--data", data, "CSV data file (curves as rows)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--kernel", kernel, "bartlett | parzen | tukey-hanning | flat-top");
    sub->add_option("--h", h, "Bandwidth: number, power:a,b (h = a N^b) or plugin");
    sub->add_flag("--unbiased", unbiased, "Divide lag-i products by N - |i|");
    sub->add_flag("--psd", psd, "Clip negative eigenvalues of the estimate");
    sub->add_option("--p", p, "Number of eigen levels");
    sub->add_option("--level", level, "Confidence level in (0, 1)");
    sub->add_option("--seed", seed, "Random seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  CliOverrides ov;
  if (sub->count("--data")) ov.data = data;
  if (sub->count("--out")) ov.out = out_dir;
  if (sub->count("--kernel")) ov.kernel = kernel;
  if (sub->count("--h")) ov.h = h;
  ov.unbiased = unbiased;
  ov.psd = psd;
  if (sub->count("--p")) ov.p = p;
  if (sub->count("--level")) ov.level = level;
  if (sub->count("--seed")) ov.seed = seed;

  RunConfig cfg;
  try {
    const Json file_config = sub->count("--config") ? read_json(config_path) : Json::object();
    cfg = resolve_config(command, file_config, ov);
  } catch (const std::exception& e) {
    err << "lrcov " << command << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
  return execute(cfg, err);
}

}  // namespace lrcov
