#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schro/dynamics.hpp"
#include "schro/rates.hpp"

namespace schro {

// m_beta(v) = beta^{-1} log sum_i exp(beta v_i), computed with max
// subtraction; satisfies max v <= m_beta(v) <= max v + beta^{-1} log N.
double smooth_max(const std::vector<double>& v, double beta);

struct ProbEstimate {
  double p_hat = 0.0;
  double se = 0.0;
  std::int64_t n = 0;
  double ess = 0.0;      // effective sample count behind p_hat
  bool weighted = false;
  bool resolvable = false;  // p_hat*n >= 20 (plain) or ESS >= 100 (shifted)
};

struct SamplerSpec {
  enum class Kind { Bridge, Schrodinger, Mixture };
  Kind kind = Kind::Bridge;
  Vec x, y;                              // bridge endpoints
  const Coupling* plan = nullptr;        // schrodinger
  const DiscreteMeasure* mu0 = nullptr;  // mixture marginals
  const DiscreteMeasure* mu1 = nullptr;

  static SamplerSpec bridge(Vec x, Vec y);
  static SamplerSpec schrodinger(const Coupling& plan);
  static SamplerSpec mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1);
};

// Monte Carlo estimate of P(event) under the chosen bridge law. Plain mode
// is the empirical frequency with binomial SE. With `shift` (a target mean
// path), every sampled bridge is translated by g = shift - geodesic between
// the shift's own endpoints and reweighted by the exact finite-dimensional
// Cameron-Martin factor exp{-(g, xi)_H / eps - |g|_H^2 / (2 eps)}, which is
// unbiased for the event probability. The shift must live on `grid`; for the
// bridge sampler its endpoints must match (x, y).
ProbEstimate event_probability(const SamplerSpec& sampler, const EventSet& event, double epsilon,
                               std::int64_t n, const std::optional<Path>& shift,
                               const std::vector<double>& grid, std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;  // -intercept of the eps*log(p) vs eps regression
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double eps_coefficient = 0.0;  // entropic-correction nuisance
  int points_used = 0;
};

// Weighted least squares of eps*log(p_hat) against eps over the resolvable
// estimates; the intercept at eps = 0 is reported as -slope with a
// delta-method confidence interval. Needs at least three resolvable points.
SlopeFit ldp_slope(const std::vector<double>& eps_schedule,
                   const std::vector<ProbEstimate>& estimates);

struct ExperimentConfig {
  std::optional<std::string> mu0_csv, mu1_csv;
  SamplerSpec::Kind sampler = SamplerSpec::Kind::Bridge;
  RateKind rate = RateKind::I;
  Vec x, y;  // bridge sampler / J_xy endpoints
  EventSet event;
  std::vector<double> schedule;  // strictly decreasing
  std::int64_t n = 100000;
  std::uint64_t seed = 0;
  double tol = 0.1;
  int grid_intervals = 200;
  double sinkhorn_tol = 1e-10;
  std::optional<std::string> out_dir;
  enum class Format { Json, Csv, Both };
  Format format = Format::Both;  // which artifacts land in out_dir

  std::string canonical_json;  // normalized dump used for the config hash

  // Parses and schema-validates a JSON config; unknown keys are rejected.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

struct RateReport {
  std::string version;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string event_description;
  std::string rate_kind;
  std::string sampler;
  std::vector<double> schedule;
  std::vector<ProbEstimate> estimates;
  double slope = 0.0;
  double slope_ci_lo = 0.0, slope_ci_hi = 0.0;
  double rate_inf = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::optional<std::string> error;  // set when a stage failed

  std::string to_json_text() const;
  std::string to_csv_text() const;  // companion: eps, p_hat, se, eps_log_p
};

// Full pipeline: solve the needed EOT/OT objects, estimate the event
// probability along the schedule (switching to the importance shift whenever
// the plain estimate drops below 1e-4), extrapolate the slope, compute the
// rate infimum and the verdict |slope - rate_inf| <= tol * max(1, rate_inf).
// Stage failures are captured in the report's `error` field.
RateReport run_ldp_experiment(const ExperimentConfig& config);

// Standalone event parser for the CLI (same schema as config "event").
EventSet event_set_from_json_text(const std::string& text);

}  // namespace schro
