#include "lrcov/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lrcov/errors.hpp"

namespace lrcov {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                            : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_cell(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto stop = nl == std::string_view::npos ? text.size() : nl;
    lines.push_back(text.substr(start, stop - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0, 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Eigen::MatrixXd parse_numeric_csv(std::string_view text, std::vector<std::string>* header) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("no data rows", 0, 0);

  std::size_t first_data = 0;
  {
    const auto cells = split_cells(lines.front());
    double dummy = 0.0;
    const bool numeric = std::all_of(cells.begin(), cells.end(),
                                     [&](std::string_view c) { return parse_cell(c, dummy); });
    if (!numeric) {
      first_data = 1;
      if (header) {
        header->clear();
        for (auto c : cells) header->emplace_back(c);
      }
    }
  }
  if (first_data >= lines.size()) throw ParseError("header row but no data rows", 1, 0);

  const std::size_t width = split_cells(lines[first_data]).size();
  if (first_data == 1 && split_cells(lines.front()).size() != width) {
    throw ParseError("row 1 (header) has " + std::to_string(split_cells(lines.front()).size()) +
                         " columns, expected " + std::to_string(width),
                     1, 0);
  }
  const std::size_t rows = lines.size() - first_data;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = first_data + r + 1;
    const auto cells = split_cells(lines[first_data + r]);
    if (cells.size() != width) {
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(width),
                       line_no, 0);
    }
    for (std::size_t c = 0; c < width; ++c) {
      double v = 0.0;
      if (!parse_cell(cells[c], v) || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                             ": '" + std::string(cells[c]) + "' is not a finite number",
                         line_no, c + 1);
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return m;
}

Dataset parse_dataset(std::string_view text) {
  std::vector<std::string> header;
  Eigen::MatrixXd m = parse_numeric_csv(text, &header);
  if (m.rows() < 2) {
    throw ParseError("dataset needs at least 2 curves (rows), found " + std::to_string(m.rows()),
                     0, 0);
  }
  return Dataset{CurveSample(std::move(m)), std::move(header)};
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ContractError("format_double failed");
  return std::string(buf, ptr);
}

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void require_keys(const Json& j, const std::vector<std::string>& allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

DgpSpec dgp_from_json(const Json& j) {
  require_keys(j, {"kind", "thetas", "rho", "sigmas", "burn_in"}, "dgp");
  DgpSpec spec;
  try {
    const std::string kind = j.value("kind", std::string("iid"));
    if (kind == "iid") {
      spec.kind = DgpKind::IID;
    } else if (kind == "fma") {
      spec.kind = DgpKind::FMA;
    } else if (kind == "far1") {
      spec.kind = DgpKind::FAR1;
    } else {
      throw ConfigError("dgp: unknown kind '" + kind + "' (iid, fma, far1)");
    }
    if (j.contains("thetas")) spec.thetas = j.at("thetas").get<std::vector<double>>();
    if (j.contains("rho")) spec.rho = j.at("rho").get<double>();
    if (j.contains("sigmas")) spec.noise.sigmas = j.at("sigmas").get<std::vector<double>>();
    if (j.contains("burn_in")) spec.burn_in = j.at("burn_in").get<int>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("dgp: ") + e.what());
  }
  if (spec.kind != DgpKind::FMA && !spec.thetas.empty()) {
    throw ConfigError("dgp: thetas only apply to kind 'fma'");
  }
  spec.validate();
  return spec;
}

Json dgp_to_json(const DgpSpec& spec) {
  Json j;
  switch (spec.kind) {
    case DgpKind::IID: j["kind"] = "iid"; break;
    case DgpKind::FMA: j["kind"] = "fma"; break;
    case DgpKind::FAR1: j["kind"] = "far1"; break;
  }
  if (spec.kind == DgpKind::FMA) j["thetas"] = spec.thetas;
  if (spec.kind == DgpKind::FAR1) {
    j["rho"] = spec.rho;
    j["burn_in"] = spec.burn_in;
  }
  j["sigmas"] = spec.noise.sigmas;
  return j;
}

KernelSpec kernel_from_config(const std::string& name, double flat_top_rho) {
  return KernelSpec::from_name(name, flat_top_rho);
}

Surface projection_surface(const std::string& name, const Grid& grid) {
  if (name == "one") return Surface::Ones(grid.size(), grid.size());
  auto index = [&](const std::string& text) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(text, &used);
      if (used != text.size() || v < 1) throw ConfigError("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("projection '" + name + "': bad basis index '" + text + "'");
    }
  };
  int j = 0;
  int k = 0;
  if (name.rfind("diag:", 0) == 0) {
    j = k = index(name.substr(5));
  } else if (name.rfind("pair:", 0) == 0) {
    const std::string rest = name.substr(5);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigError("projection '" + name + "': expected pair:j,k");
    j = index(rest.substr(0, comma));
    k = index(rest.substr(comma + 1));
  } else {
    throw ConfigError("unknown projection '" + name + "' (one, diag:j, pair:j,k)");
  }
  if (std::max(j, k) > grid.size()) {
    throw ConfigError("projection '" + name + "' needs more basis functions than the " +
                      std::to_string(grid.size()) + "-point grid resolves");
  }
  const auto basis = fourier_basis(grid, std::max(j, k));
  return basis[static_cast<std::size_t>(j - 1)] * basis[static_cast<std::size_t>(k - 1)].transpose();
}

Json report_to_json(const McReport& report, bool include_values) {
  Json j;
  j["replications"] = report.replications;
  j["n_obs"] = report.n_obs;
  j["grid_size"] = report.grid_size;
  j["kernel"] = report.kernel;
  j["h_rule"] = report.h_rule;
  j["h_mean"] = report.h_mean;
  j["h_min"] = report.h_min;
  j["h_max"] = report.h_max;
  j["master_seed"] = report.master_seed;
  j["threads"] = report.threads;
  j["runtime_seconds"] = report.runtime_seconds;
  j["mean_sq_error"] = report.mean_sq_error;
  j["mean_sq_error_se"] = report.mean_sq_error_se;
  j["bias_norm"] = report.bias_norm;
  j["projections"] = Json::array();
  for (const auto& p : report.projections) {
    Json pj{{"name", p.name},
            {"mean", p.moments.mean},
            {"variance", p.moments.variance},
            {"skewness", p.moments.skewness},
            {"excess_kurtosis", p.moments.excess_kurtosis},
            {"ks_distance", p.ks_distance},
            {"predicted_variance", p.predicted_variance},
            {"variance_ratio", p.predicted_variance > 0.0 ? p.moments.variance / p.predicted_variance : 0.0},
            {"second_moment_about_truth", p.second_moment_about_truth},
            {"variance_noise_bar", p.variance_noise_bar}};
    if (include_values) pj["values"] = p.values;
    j["projections"].push_back(std::move(pj));
  }
  j["eigen_levels"] = Json::array();
  for (const auto& e : report.eigen_levels) {
    Json ej{{"level", e.level},
            {"lambda_true", e.lambda_true},
            {"mean_error", e.mean_error},
            {"sd_error", e.sd_error},
            {"predicted_sd", e.predicted_sd},
            {"predicted_mean_shift", e.predicted_mean_shift},
            {"mean_sq_deviation", e.mean_sq_deviation},
            {"predicted_msd", e.predicted_msd}};
    if (include_values) {
      ej["errors"] = e.errors;
      ej["deviations"] = e.deviations;
    }
    j["eigen_levels"].push_back(std::move(ej));
  }
  j["eigen_correlation"] = report.eigen_correlation;
  return j;
}

Json bias_rate_to_json(const BiasRateResult& result) {
  return Json{{"h_grid", result.h_grid},           {"errors", result.errors},
              {"mc_sd", result.mc_sd},             {"predicted", result.predicted},
              {"slope", result.slope},             {"intercept", result.intercept},
              {"no_bias_detected", result.no_bias_detected},
              {"replications", result.replications}};
}

}  // namespace lrcov
