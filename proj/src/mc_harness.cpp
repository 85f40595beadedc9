#include "lrcov/mc_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "lrcov/errors.hpp"
#include "lrcov/fpca.hpp"
#include "lrcov/normal.hpp"
#include "lrcov/parallel.hpp"

namespace lrcov {

namespace {

constexpr std::size_t kBlock = 64;

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " from '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("cannot parse " + what + " from '" + text + "'");
  return v;
}

struct ReplicationResult {
  Surface estimate;
  double h = 0.0;
  std::vector<double> raw_projections;
  double sq_error = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> deviations;
};

}  // namespace

HRule HRule::fixed(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("fixed bandwidth must be positive");
  HRule r;
  r.kind_ = Kind::Fixed;
  r.h_ = h;
  return r;
}

HRule HRule::power(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigError("power bandwidth rule needs a > 0 and finite b");
  }
  HRule r;
  r.kind_ = Kind::Power;
  r.a_ = a;
  r.b_ = b;
  return r;
}

HRule HRule::plugin() {
  HRule r;
  r.kind_ = Kind::Plugin;
  return r;
}

Bandwidth HRule::resolve(const CurveSample& sample, const KernelSpec& kernel) const {
  switch (kind_) {
    case Kind::Fixed: return Bandwidth(h_);
    case Kind::Power: return Bandwidth(a_ * std::pow(static_cast<double>(sample.size()), b_));
    case Kind::Plugin: return Bandwidth(plugin_bandwidth(sample, kernel).h);
  }
  return Bandwidth(h_);
}

std::string HRule::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Fixed: os << h_; break;
    case Kind::Power: os << "power:" << a_ << ',' << b_; break;
    case Kind::Plugin: os << "plugin"; break;
  }
  return os.str();
}

HRule HRule::parse(const std::string& text) {
  if (text == "plugin") return plugin();
  if (text.rfind("power:", 0) == 0) {
    const std::string rest = text.substr(6);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw ConfigError("power rule must look like power:a,b");
    return power(parse_double(rest.substr(0, comma), "power rule a"),
                 parse_double(rest.substr(comma + 1), "power rule b"));
  }
  return fixed(parse_double(text, "bandwidth"));
}

Moments sample_moments(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) throw ContractError("sample_moments needs at least two values");
  Moments m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(n);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double nd = static_cast<double>(n);
  m.variance = m2 / (nd - 1.0);
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ContractError("sample_correlation needs two equal-length series of at least 2 values");
  }
  const Moments mx = sample_moments(x);
  const Moments my = sample_moments(y);
  double cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) cov += (x[i] - mx.mean) * (y[i] - my.mean);
  cov /= static_cast<double>(x.size()) - 1.0;
  const double denom = std::sqrt(mx.variance * my.variance);
  return denom > 0.0 ? cov / denom : 0.0;
}

double ks_distance(std::span<const double> samples, double mean, double sd) {
  if (samples.size() < 8) throw ContractError("ks_distance needs at least 8 samples");
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw ContractError("ks_distance: degenerate standard deviation");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double predicted_projection_variance(const Surface& c, const KernelSpec& kernel, const Surface& f) {
  if (c.rows() != f.rows() || c.cols() != f.cols() || c.rows() != c.cols()) {
    throw DimensionError("predicted_projection_variance: C and f must share the grid");
  }
  const double g = static_cast<double>(c.rows());
  const double first = surface_integral(c.cwiseProduct(f));
  // sum_{t,t'} C(t,t') (f C f^T)(t,t') / G^4
  const Eigen::MatrixXd fcf = f * c * f.transpose();
  const double second = c.cwiseProduct(fcf).sum() / (g * g * g * g);
  return kernel.ksq_integral() * (first * first + second);
}

McReport run_experiment(const ExperimentSpec& spec) {
  const auto started = std::chrono::steady_clock::now();
  if (spec.replications < 2) throw ConfigError("experiment needs at least 2 replications");
  if (spec.n_obs < 2) throw ConfigError("experiment needs N >= 2");
  const Grid grid(spec.grid_size);
  for (const Surface& f : spec.projections) require_on_grid(f, grid);
  const TruthSet truth_set = truth(spec.dgp, grid, spec.kernel);
  DgpSpec seeded = spec.dgp;
  seeded.seed = spec.master_seed;

  int max_level = 0;
  for (int l : spec.eigen_levels) {
    if (l < 1 || l > grid.size()) throw ConfigError("eigen level " + std::to_string(l) + " out of range");
    max_level = std::max(max_level, l);
  }
  if (max_level > 0) require_separation(truth_set.eigen.eigenvalues, max_level);

  const auto reps = static_cast<std::size_t>(spec.replications);
  const std::size_t n_proj = spec.projections.size();
  const std::size_t n_levels = spec.eigen_levels.size();
  const int threads = resolve_thread_count(spec.threads);

  std::vector<double> h_values(reps);
  std::vector<std::vector<double>> raw(n_proj, std::vector<double>(reps));
  std::vector<double> sq_errors(reps);
  std::vector<std::vector<double>> lambdas(n_levels, std::vector<double>(reps));
  std::vector<std::vector<double>> deviations(n_levels, std::vector<double>(reps));
  Surface sum = Surface::Zero(grid.size(), grid.size());

  std::vector<ReplicationResult> block(kBlock);
  for (std::size_t start = 0; start < reps; start += kBlock) {
    const std::size_t len = std::min(kBlock, reps - start);
    parallel_for(len, threads, [&](std::size_t k) {
      const std::size_t r = start + k;
      try {
        ReplicationResult& out = block[k];
        const CurveSample sample = generate(seeded, spec.n_obs, grid, r);
        const Bandwidth h = spec.h_rule.resolve(sample, spec.kernel);
        LrcovEstimate est = estimate_lrcov(sample, spec.kernel, h, spec.estimator);
        if (spec.psd) est = project_psd(est);
        out.h = h.value();
        out.raw_projections.resize(n_proj);
        for (std::size_t p = 0; p < n_proj; ++p) {
          out.raw_projections[p] = surface_integral(est.surface.cwiseProduct(spec.projections[p]));
        }
        const double err = l2_norm_surface(est.surface - truth_set.c);
        out.sq_error = err * err;
        out.eigenvalues.resize(n_levels);
        out.deviations.resize(n_levels);
        if (n_levels > 0) {
          const EigenSystem sys = eigendecompose(est.surface);
          for (std::size_t i = 0; i < n_levels; ++i) {
            const int l = spec.eigen_levels[i];
            const Curve v = truth_set.eigen.function(l);
            const Curve aligned = align_sign(sys.function(l), v);
            const double dn = l2_norm(aligned - v);
            out.eigenvalues[i] = sys.value(l);
            out.deviations[i] = spec.n_obs / out.h * dn * dn;
          }
        }
        out.estimate = std::move(est.surface);
      } catch (const Error& e) {
        throw Error("replication " + std::to_string(r) + ": " + e.what());
      }
    });
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t r = start + k;
      ReplicationResult& res = block[k];
      sum += res.estimate;
      h_values[r] = res.h;
      sq_errors[r] = res.sq_error;
      for (std::size_t p = 0; p < n_proj; ++p) raw[p][r] = res.raw_projections[p];
      for (std::size_t i = 0; i < n_levels; ++i) {
        lambdas[i][r] = res.eigenvalues[i];
        deviations[i][r] = res.deviations[i];
      }
    }
  }

  McReport report;
  report.replications = spec.replications;
  report.n_obs = spec.n_obs;
  report.grid_size = spec.grid_size;
  report.kernel = spec.kernel.name();
  report.h_rule = spec.h_rule.describe();
  report.master_seed = spec.master_seed;
  report.threads = threads;
  report.h_min = *std::min_element(h_values.begin(), h_values.end());
  report.h_max = *std::max_element(h_values.begin(), h_values.end());
  {
    double acc = 0.0;
    for (double h : h_values) acc += h;
    report.h_mean = acc / static_cast<double>(reps);
  }
  const Surface mean_surface = sum / static_cast<double>(reps);
  report.bias_norm = l2_norm_surface(mean_surface - truth_set.c);
  const Moments mse = sample_moments(sq_errors);
  report.mean_sq_error = mse.mean;
  report.mean_sq_error_se = std::sqrt(mse.variance / static_cast<double>(reps));

  for (std::size_t p = 0; p < n_proj; ++p) {
    const Surface& f = spec.projections[p];
    const double centre = surface_integral(mean_surface.cwiseProduct(f));
    const double truth_centre = surface_integral(truth_set.c.cwiseProduct(f));
    ProjectionStats ps;
    ps.name = p < spec.projection_names.size() ? spec.projection_names[p]
                                               : "projection_" + std::to_string(p + 1);
    ps.values.resize(reps);
    std::vector<double> truth_centred(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const double scale = std::sqrt(spec.n_obs / h_values[r]);
      ps.values[r] = scale * (raw[p][r] - centre);
      truth_centred[r] = scale * (raw[p][r] - truth_centre);
    }
    ps.moments = sample_moments(ps.values);
    double second = 0.0;
    for (double v : truth_centred) second += v * v;
    ps.second_moment_about_truth = second / static_cast<double>(reps);
    ps.predicted_variance = predicted_projection_variance(truth_set.c, spec.kernel, f);
    ps.variance_noise_bar = std::sqrt(2.0 / (static_cast<double>(reps) - 1.0));
    const double sd = std::sqrt(ps.moments.variance);
    ps.ks_distance = reps >= 8 && sd > 0.0 ? ks_distance(ps.values, ps.moments.mean, sd)
                                           : std::numeric_limits<double>::quiet_NaN();
    report.projections.push_back(std::move(ps));
  }

  const double a_limit = bias_balance(spec.n_obs, report.h_mean, spec.kernel);
  for (std::size_t i = 0; i < n_levels; ++i) {
    const int l = spec.eigen_levels[i];
    EigenLevelStats es;
    es.level = l;
    es.lambda_true = truth_set.eigen.value(l);
    es.errors.resize(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      es.errors[r] = std::sqrt(spec.n_obs / h_values[r]) * (lambdas[i][r] - es.lambda_true);
    }
    const Moments em = sample_moments(es.errors);
    es.mean_error = em.mean;
    es.sd_error = std::sqrt(em.variance);
    const EigenvalueCltParams clt =
        truth_set.bias ? eigenvalue_clt_params(truth_set.eigen, spec.kernel, truth_set.bias->surface,
                                               a_limit, l)
                       : eigenvalue_clt_params(truth_set.eigen, spec.kernel, l);
    es.predicted_sd = clt.sd;
    es.predicted_mean_shift = clt.mean_shift;
    es.deviations = deviations[i];
    es.mean_sq_deviation = sample_moments(es.deviations).mean;
    es.predicted_msd =
        eigenfunction_deviation_msd(truth_set.eigen, spec.kernel, l, truth_set.eigen.size()).value;
    report.eigen_levels.push_back(std::move(es));
  }
  report.eigen_correlation.assign(n_levels, std::vector<double>(n_levels, 1.0));
  for (std::size_t i = 0; i < n_levels; ++i) {
    for (std::size_t j = i + 1; j < n_levels; ++j) {
      const double rho = sample_correlation(report.eigen_levels[i].errors, report.eigen_levels[j].errors);
      report.eigen_correlation[i][j] = rho;
      report.eigen_correlation[j][i] = rho;
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

BiasRateResult bias_rate_check(const DgpSpec& dgp, const KernelSpec& kernel, int n_obs,
                               std::span<const double> h_grid, int replications,
                               std::uint64_t master_seed, int grid_size, int threads) {
  if (h_grid.size() < 3) throw ContractError("bias_rate_check needs at least 3 bandwidths");
  if (!kernel.has_finite_q()) {
    throw UnsupportedError("bias_rate_check needs a kernel with finite characteristic exponent");
  }
  if (dgp.kind == DgpKind::FAR1) {
    throw UnsupportedError("bias_rate_check needs an IID or FMA process with finitely many nonzero lags");
  }
  if (replications < 2) throw ConfigError("bias_rate_check needs at least 2 replications");
  for (double h : h_grid) {
    if (!(h > 0.0)) throw ContractError("bias_rate_check: bandwidths must be positive");
  }
  const Grid grid(grid_size);
  const TruthSet truth_set = truth(dgp, grid, kernel);
  DgpSpec seeded = dgp;
  seeded.seed = master_seed;
  const EstimatorOptions options{.unbiased = true, .centered = false};
  const std::size_t n_h = h_grid.size();
  const int workers = resolve_thread_count(threads);
  const auto reps = static_cast<std::size_t>(replications);

  std::vector<Surface> sums(n_h, Surface::Zero(grid.size(), grid.size()));
  std::vector<Surface> sq_sums(n_h, Surface::Zero(grid.size(), grid.size()));
  std::vector<std::vector<Surface>> block(kBlock, std::vector<Surface>(n_h));
  for (std::size_t start = 0; start < reps; start += kBlock) {
    const std::size_t len = std::min(kBlock, reps - start);
    parallel_for(len, workers, [&](std::size_t k) {
      const CurveSample sample = generate(seeded, n_obs, grid, start + k);
      for (std::size_t i = 0; i < n_h; ++i) {
        block[k][i] = estimate_lrcov(sample, kernel, Bandwidth(h_grid[i]), options).surface;
      }
    });
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t i = 0; i < n_h; ++i) {
        sums[i] += block[k][i];
        sq_sums[i] += block[k][i].cwiseProduct(block[k][i]);
      }
    }
  }

  BiasRateResult out;
  out.replications = replications;
  out.h_grid.assign(h_grid.begin(), h_grid.end());
  const double rd = static_cast<double>(reps);
  const double f_norm = truth_set.bias ? l2_norm_surface(truth_set.bias->surface) : 0.0;
  out.no_bias_detected = true;
  for (std::size_t i = 0; i < n_h; ++i) {
    const Surface mean = sums[i] / rd;
    const Surface var = ((sq_sums[i] - rd * mean.cwiseProduct(mean)) / (rd - 1.0)).cwiseMax(0.0);
    out.errors.push_back(l2_norm_surface(mean - truth_set.c));
    out.mc_sd.push_back(std::sqrt(surface_integral(var) / rd));
    out.predicted.push_back(std::pow(h_grid[i], -kernel.q_char()) * f_norm);
    if (out.errors.back() >= 3.0 * out.mc_sd.back()) out.no_bias_detected = false;
  }

  // Ordinary least squares of log error on log h.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n_h; ++i) {
    const double x = std::log(h_grid[i]);
    const double y = std::log(out.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(n_h);
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ContractError("bias_rate_check: bandwidths must not all be equal");
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  return out;
}

}  // namespace lrcov
