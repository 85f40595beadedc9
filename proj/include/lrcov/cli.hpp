#pragma once

// Command-line surface: estimate | fpca | bandwidth | simulate | mc-verify.
//
// Exit codes: 0 success, 2 data parse, 3 config, 4 numeric contract,
// 5 statistical precondition.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lrcov/io.hpp"

namespace lrcov {

enum ExitCode : int {
  kExitOk = 0,
  kExitParse = 2,
  kExitConfig = 3,
  kExitNumeric = 4,
  kExitPrecondition = 5,
};

/// Values given on the command line; they take precedence over the config file.
struct CliOverrides {
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> kernel;
  std::optional<std::string> h;
  bool unbiased = false;
  bool psd = false;
  std::optional<int> p;
  std::optional<double> level;
  std::optional<std::uint64_t> seed;
};

struct BiasRateConfig {
  std::vector<double> h_grid;
  int replications = 0;
};

/// Fully resolved settings for one command.
struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> data;
  std::filesystem::path out = ".";
  std::string kernel = "bartlett";
  double flat_top_rho = 0.5;
  std::string h = "plugin";
  bool unbiased = false;
  bool centered = true;
  bool psd = false;
  int p = 3;
  double level = 0.95;
  std::optional<int> m_trunc;
  std::optional<double> pilot_h;
  std::uint64_t seed = 0;
  DgpSpec dgp;
  int n_obs = 0;
  int grid_size = 1;
  int replications = 0;
  std::vector<std::string> projections;
  std::vector<int> eigen_levels;
  int threads = 0;
  std::optional<BiasRateConfig> bias_rate;

  Json to_json() const;
};

/// Merges defaults, the JSON config (unknown keys rejected) and CLI overrides.
RunConfig resolve_config(const std::string& command, const Json& file_config,
                         const CliOverrides& overrides);

void cmd_estimate(const RunConfig& cfg);
void cmd_fpca(const RunConfig& cfg);
void cmd_bandwidth(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_mc_verify(const RunConfig& cfg);

int exit_code_for(const std::exception& e) noexcept;

/// Runs the command for `cfg`, reporting errors on `err`; returns the exit code.
int execute(const RunConfig& cfg, std::ostream& err);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrcov
