#pragma once

// File formats.
//
// Dataset CSV: one curve per row (N rows), G comma-separated decimal values
// per row, optional single header row. Surfaces are written as G x G CSV
// using the shortest decimal representation that round-trips exactly.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lrcov/estimator.hpp"
#include "lrcov/mc_harness.hpp"
#include "lrcov/simulate.hpp"

namespace lrcov {

using Json = nlohmann::json;

struct Dataset {
  CurveSample sample;
  std::vector<std::string> header;
};

/// Parses a rectangular numeric CSV. Throws ParseError with 1-based row/column.
Eigen::MatrixXd parse_numeric_csv(std::string_view text, std::vector<std::string>* header = nullptr);
/// As parse_numeric_csv, additionally requiring N >= 2 curves.
Dataset parse_dataset(std::string_view text);
Dataset read_dataset(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});
void write_text(const std::filesystem::path& path, std::string_view text);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// Throws ConfigError if `j` is not an object or has keys outside `allowed`.
void require_keys(const Json& j, const std::vector<std::string>& allowed, std::string_view where);

/// {"kind": "iid"|"fma"|"far1", "thetas": [...], "rho": r, "sigmas": [...], "burn_in": n}
DgpSpec dgp_from_json(const Json& j);
Json dgp_to_json(const DgpSpec& spec);

/// Kernel from a name plus the flat-top rho.
KernelSpec kernel_from_config(const std::string& name, double flat_top_rho);

/// "one" (f = 1), "diag:j" (phi_j(t) phi_j(s)), "pair:j,k" (phi_j(t) phi_k(s)) on the Fourier basis.
Surface projection_surface(const std::string& name, const Grid& grid);

Json report_to_json(const McReport& report, bool include_values = false);
Json bias_rate_to_json(const BiasRateResult& result);

}  // namespace lrcov
