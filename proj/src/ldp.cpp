#include "schro/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schro/io.hpp"
#include "schro/parallel.hpp"

namespace schro {

using json = nlohmann::json;

double smooth_max(const std::vector<double>& v, double beta) {
  if (v.empty()) throw std::invalid_argument("smooth_max: empty input");
  if (!(beta > 0.0)) throw std::invalid_argument("smooth_max: beta must be positive");
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(beta * (x - m));
  return m + std::log(s) / beta;
}

SamplerSpec SamplerSpec::bridge(Vec x, Vec y) {
  SamplerSpec s;
  s.kind = Kind::Bridge;
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

SamplerSpec SamplerSpec::schrodinger(const Coupling& plan) {
  SamplerSpec s;
  s.kind = Kind::Schrodinger;
  s.plan = &plan;
  return s;
}

SamplerSpec SamplerSpec::mixture(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1) {
  SamplerSpec s;
  s.kind = Kind::Mixture;
  s.mu0 = &mu0;
  s.mu1 = &mu1;
  return s;
}

namespace {

// Membership test compiled against a fixed sampling grid: tube centers are
// interpolated onto the grid once, two-point times resolved to knot indices.
struct EventEvaluator {
  const EventSet* event;
  double radius = 0.0;
  Mat center_on_grid;
  int idx_a = 0, idx_b = 0;

  EventEvaluator(const EventSet& ev, const std::vector<double>& grid) : event(&ev) {
    if (ev.kind == EventSet::Kind::Tube) {
      radius = ev.radius + 1e-12 * (1.0 + ev.radius);  // same ulp slack as EventSet::contains
      center_on_grid.resize(static_cast<Eigen::Index>(grid.size()), ev.center.dim());
      for (size_t i = 0; i < grid.size(); ++i)
        center_on_grid.row(static_cast<Eigen::Index>(i)) = ev.center.at(grid[i]).transpose();
    } else {
      const double ta = ev.kind == EventSet::Kind::Endpoint ? 0.0 : ev.s;
      const double tb = ev.kind == EventSet::Kind::Endpoint ? 1.0 : ev.t;
      idx_a = knot_index(grid, ta);
      idx_b = knot_index(grid, tb);
    }
  }

  static int knot_index(const std::vector<double>& grid, double t) {
    for (size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid[i] - t) <= 1e-12) return static_cast<int>(i);
    throw std::invalid_argument("event_probability: sampling grid must contain the event times");
  }

  bool contains(const Mat& values) const {
    if (event->kind == EventSet::Kind::Tube)
      return ((values - center_on_grid).cwiseAbs().maxCoeff()) <= radius;
    const Vec a = values.row(idx_a);
    const Vec b = values.row(idx_b);
    if (event->boxes) return event->boxes->first.contains(a) && event->boxes->second.contains(b);
    for (const auto& [pa, pb] : event->pairs) {
      if ((a - pa).lpNorm<Eigen::Infinity>() <= kSnapTol &&
          (b - pb).lpNorm<Eigen::Infinity>() <= kSnapTol)
        return true;
    }
    return false;
  }
};

}  // namespace

ProbEstimate event_probability(const SamplerSpec& sampler, const EventSet& event, double epsilon,
                               std::int64_t n, const std::optional<Path>& shift,
                               const std::vector<double>& grid, std::uint64_t seed) {
  if (n < 1000) throw std::invalid_argument("event_probability: n must be >= 1000");
  if (epsilon < 0.0) throw std::invalid_argument("event_probability: epsilon must be >= 0");
  const EventEvaluator evaluator(event, grid);

  // Precompute the pinned displacement g and |g|_H^2 for the shifted mode.
  const bool weighted = shift.has_value();
  Mat g_values;
  double g_norm_sq = 0.0;
  if (weighted) {
    if (shift->grid != grid)
      throw std::invalid_argument("event_probability: shift must live on the sampling grid");
    if (sampler.kind == SamplerSpec::Kind::Bridge) {
      if ((shift->front() - sampler.x).lpNorm<Eigen::Infinity>() > kSnapTol ||
          (shift->back() - sampler.y).lpNorm<Eigen::Infinity>() > kSnapTol)
        throw std::invalid_argument("event_probability: shift endpoints do not match the sampler");
    }
    const Path base = geodesic(shift->front(), shift->back(), grid);
    g_values = shift->values - base.values;
    Path g(grid, g_values);
    g_norm_sq = h_norm_sq(g);
  }

  // Flatten the plan for pair sampling when present.
  std::vector<double> plan_cdf;
  int plan_cols = 0;
  if (sampler.kind == SamplerSpec::Kind::Schrodinger) {
    if (!sampler.plan) throw std::invalid_argument("event_probability: missing plan");
    const Mat& p = sampler.plan->plan;
    plan_cols = static_cast<int>(p.cols());
    plan_cdf.resize(static_cast<size_t>(p.rows()) * static_cast<size_t>(p.cols()));
    double acc = 0.0;
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j) {
        acc += p(i, j);
        plan_cdf[static_cast<size_t>(i) * static_cast<size_t>(plan_cols) + static_cast<size_t>(j)] = acc;
      }
  }

  const Rng master(seed);
  constexpr std::int64_t kChunk = 1024;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> c_sum(static_cast<size_t>(n_chunks), 0.0);
  std::vector<double> c_sum2(static_cast<size_t>(n_chunks), 0.0);
  std::vector<std::int64_t> c_hits(static_cast<size_t>(n_chunks), 0);

  parallel_chunks(n, kChunk, [&](std::int64_t chunk, std::int64_t b, std::int64_t e) {
    Rng rng = master.derive(static_cast<std::uint64_t>(chunk));
    double s = 0.0, s2 = 0.0;
    std::int64_t hits = 0;
    for (std::int64_t k = b; k < e; ++k) {
      Vec x, y;
      switch (sampler.kind) {
        case SamplerSpec::Kind::Bridge:
          x = sampler.x;
          y = sampler.y;
          break;
        case SamplerSpec::Kind::Schrodinger: {
          const int flat = rng.sample_cdf(plan_cdf);
          x = sampler.plan->source.point(flat / plan_cols);
          y = sampler.plan->target.point(flat % plan_cols);
          break;
        }
        case SamplerSpec::Kind::Mixture: {
          x = sampler.mu0->point(rng.sample_cdf(sampler.mu0->cdf()));
          y = sampler.mu1->point(rng.sample_cdf(sampler.mu1->cdf()));
          break;
        }
      }
      Path xi = sample_brownian_bridge(x, y, epsilon, grid, rng);
      if (!weighted) {
        if (evaluator.contains(xi.values)) ++hits;
        continue;
      }
      double inner = 0.0;
      for (int i = 0; i + 1 < xi.knots(); ++i) {
        const double dt = grid[static_cast<size_t>(i) + 1] - grid[static_cast<size_t>(i)];
        inner += (xi.values.row(i + 1) - xi.values.row(i))
                     .dot(g_values.row(i + 1) - g_values.row(i)) / dt;
      }
      xi.values += g_values;
      if (!evaluator.contains(xi.values)) continue;
      const double w = std::exp(-inner / epsilon - g_norm_sq / (2.0 * epsilon));
      ++hits;
      s += w;
      s2 += w * w;
    }
    c_sum[static_cast<size_t>(chunk)] = s;
    c_sum2[static_cast<size_t>(chunk)] = s2;
    c_hits[static_cast<size_t>(chunk)] = hits;
  });

  double sum = 0.0, sum2 = 0.0;
  std::int64_t hits = 0;
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    sum += c_sum[static_cast<size_t>(c)];
    sum2 += c_sum2[static_cast<size_t>(c)];
    hits += c_hits[static_cast<size_t>(c)];
  }

  ProbEstimate est;
  est.n = n;
  est.weighted = weighted;
  if (!weighted) {
    est.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    est.se = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n));
    est.ess = static_cast<double>(hits);
    est.resolvable = hits >= 20;
  } else {
    est.p_hat = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, (sum2 - static_cast<double>(n) * est.p_hat * est.p_hat) /
                          static_cast<double>(n - 1));
    est.se = std::sqrt(var / static_cast<double>(n));
    est.ess = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
    est.resolvable = est.ess >= 100.0 && est.p_hat > 0.0;
  }
  return est;
}

SlopeFit ldp_slope(const std::vector<double>& eps_schedule,
                   const std::vector<ProbEstimate>& estimates) {
  if (eps_schedule.size() != estimates.size())
    throw std::invalid_argument("ldp_slope: schedule/estimate size mismatch");
  std::vector<double> xs, ys, vars;
  for (size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    if (!e.resolvable || !(e.p_hat > 0.0)) continue;
    const double eps = eps_schedule[k];
    xs.push_back(eps);
    ys.push_back(eps * std::log(e.p_hat));
    const double v = eps * e.se / e.p_hat;  // delta method through eps*log
    vars.push_back(std::max(v * v, 1e-24));
  }
  if (xs.size() < 3)
    throw std::invalid_argument("ldp_slope: need at least 3 resolvable estimates, have " +
                                std::to_string(xs.size()));

  double wsum = 0.0;
  std::vector<double> w(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    w[i] = 1.0 / vars[i];
    wsum += w[i];
  }
  for (auto& wi : w) wi /= wsum;
  double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += w[i] * xs[i];
    sxx += w[i] * xs[i] * xs[i];
    sy += w[i] * ys[i];
    sxy += w[i] * xs[i] * ys[i];
  }
  const double denom = sxx - sx * sx;
  if (!(denom > 0.0)) throw std::invalid_argument("ldp_slope: degenerate schedule");
  const double b = (sxy - sx * sy) / denom;
  const double a = sy - b * sx;

  // Intercept is a fixed linear combination of the y's; propagate their
  // variances exactly.
  double var_a = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double ci = w[i] * (sxx - sx * xs[i]) / denom;
    var_a += ci * ci * vars[i];
  }
  const double sd = std::sqrt(var_a);

  SlopeFit fit;
  fit.slope = -a;
  fit.ci_lo = -a - 1.96 * sd;
  fit.ci_hi = -a + 1.96 * sd;
  fit.eps_coefficient = b;
  fit.points_used = static_cast<int>(xs.size());
  return fit;
}

// ---------------------------------------------------------------------------
// Config / report plumbing
// ---------------------------------------------------------------------------

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

Vec vec_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("config: expected a number array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

Box box_from_json(const json& j) {
  reject_unknown_keys(j, {"lo", "hi"}, "box");
  Box b{vec_from_json(j.at("lo")), vec_from_json(j.at("hi"))};
  if (b.lo.size() != b.hi.size()) throw std::invalid_argument("config: box lo/hi sizes differ");
  return b;
}

std::vector<std::pair<Vec, Vec>> pairs_from_json(const json& j) {
  std::vector<std::pair<Vec, Vec>> pairs;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2)
      throw std::invalid_argument("config: each pair must be [[...],[...]]");
    pairs.emplace_back(vec_from_json(p[0]), vec_from_json(p[1]));
  }
  return pairs;
}

Path path_from_json(const json& j) {
  reject_unknown_keys(j, {"t", "values"}, "event.center");
  const json& jt = j.at("t");
  const json& jv = j.at("values");
  std::vector<double> grid;
  for (const auto& t : jt) grid.push_back(t.get<double>());
  if (jv.size() != grid.size()) throw std::invalid_argument("config: center t/values mismatch");
  const int d = static_cast<int>(jv.at(0).size());
  Mat values(static_cast<Eigen::Index>(grid.size()), d);
  for (size_t i = 0; i < grid.size(); ++i) {
    const Vec row = vec_from_json(jv[i]);
    if (row.size() != d) throw std::invalid_argument("config: ragged center values");
    values.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return Path(std::move(grid), std::move(values));
}

EventSet event_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "center", "center_csv", "radius", "s", "t", "pairs", "boxes"},
                      "event");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tube") {
    Path center = j.contains("center_csv") ? Path::from_csv(j.at("center_csv").get<std::string>())
                                           : path_from_json(j.at("center"));
    return EventSet::tube(std::move(center), j.at("radius").get<double>());
  }
  const bool endpoint = kind == "endpoint";
  if (!endpoint && kind != "two-point")
    throw std::invalid_argument("config: event.kind must be tube, endpoint, or two-point");
  const double s = endpoint ? 0.0 : j.at("s").get<double>();
  const double t = endpoint ? 1.0 : j.at("t").get<double>();
  if (j.contains("boxes")) {
    const json& jb = j.at("boxes");
    reject_unknown_keys(jb, {"first", "second"}, "event.boxes");
    Box first = box_from_json(jb.at("first"));
    Box second = box_from_json(jb.at("second"));
    return endpoint ? EventSet::endpoint_boxes(std::move(first), std::move(second))
                    : EventSet::two_point_boxes(s, t, std::move(first), std::move(second));
  }
  auto pairs = pairs_from_json(j.at("pairs"));
  return endpoint ? EventSet::endpoint_pairs(std::move(pairs))
                  : EventSet::two_point_pairs(s, t, std::move(pairs));
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json estimate_to_json(double eps, const ProbEstimate& e) {
  json j;
  j["eps"] = eps;
  j["p_hat"] = e.p_hat;
  j["se"] = e.se;
  j["n"] = e.n;
  j["ess"] = e.ess;
  j["weighted"] = e.weighted;
  j["resolvable"] = e.resolvable;
  if (e.p_hat > 0.0)
    j["eps_log_p"] = eps * std::log(e.p_hat);
  else
    j["eps_log_p"] = nullptr;
  return j;
}

}  // namespace

EventSet event_set_from_json_text(const std::string& text) {
  return event_from_json(json::parse(text));
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_json_text(read_file(path));
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown_keys(j,
                      {"instance", "sampler", "rate", "x", "y", "event", "schedule", "n", "seed",
                       "tol", "grid_intervals", "sinkhorn_tol", "out_dir", "format"},
                      "config");
  ExperimentConfig cfg;
  if (j.contains("instance")) {
    reject_unknown_keys(j.at("instance"), {"mu0", "mu1"}, "instance");
    if (j.at("instance").contains("mu0")) cfg.mu0_csv = j.at("instance").at("mu0").get<std::string>();
    if (j.at("instance").contains("mu1")) cfg.mu1_csv = j.at("instance").at("mu1").get<std::string>();
  }
  const std::string sampler = j.value("sampler", std::string("bridge"));
  if (sampler == "bridge") cfg.sampler = SamplerSpec::Kind::Bridge;
  else if (sampler == "schrodinger") cfg.sampler = SamplerSpec::Kind::Schrodinger;
  else if (sampler == "mixture") cfg.sampler = SamplerSpec::Kind::Mixture;
  else throw std::invalid_argument("config: sampler must be bridge, schrodinger, or mixture");

  const std::string rate = j.value("rate", std::string("I"));
  if (rate == "I") cfg.rate = RateKind::I;
  else if (rate == "Jxy") cfg.rate = RateKind::Jxy;
  else if (rate == "Jmix") cfg.rate = RateKind::Jmix;
  else throw std::invalid_argument("config: rate must be I, Jxy, or Jmix");

  if (j.contains("x")) cfg.x = vec_from_json(j.at("x"));
  if (j.contains("y")) cfg.y = vec_from_json(j.at("y"));
  cfg.event = event_from_json(j.at("event"));
  for (const auto& e : j.at("schedule")) cfg.schedule.push_back(e.get<double>());
  if (cfg.schedule.empty()) throw std::invalid_argument("config: empty schedule");
  for (size_t k = 0; k < cfg.schedule.size(); ++k) {
    if (!(cfg.schedule[k] > 0.0)) throw std::invalid_argument("config: schedule must be positive");
    if (k > 0 && !(cfg.schedule[k] < cfg.schedule[k - 1]))
      throw std::invalid_argument("config: schedule must be strictly decreasing");
  }
  cfg.n = j.value("n", static_cast<std::int64_t>(100000));
  if (cfg.n < 1000) throw std::invalid_argument("config: n must be >= 1000");
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(0));
  cfg.tol = j.value("tol", 0.1);
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
  cfg.grid_intervals = j.value("grid_intervals", 200);
  if (cfg.grid_intervals < 2) throw std::invalid_argument("config: grid_intervals must be >= 2");
  cfg.sinkhorn_tol = j.value("sinkhorn_tol", 1e-10);
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  const std::string format = j.value("format", std::string("both"));
  if (format == "json") cfg.format = Format::Json;
  else if (format == "csv") cfg.format = Format::Csv;
  else if (format == "both") cfg.format = Format::Both;
  else throw std::invalid_argument("config: format must be json, csv, or both");

  const bool needs_measures = cfg.sampler != SamplerSpec::Kind::Bridge || cfg.rate != RateKind::Jxy;
  if (needs_measures && (!cfg.mu0_csv || !cfg.mu1_csv))
    throw std::invalid_argument("config: instance.mu0 and instance.mu1 are required here");
  const bool needs_xy = cfg.sampler == SamplerSpec::Kind::Bridge || cfg.rate == RateKind::Jxy;
  if (needs_xy && (cfg.x.size() == 0 || cfg.y.size() == 0))
    throw std::invalid_argument("config: x and y are required for the bridge sampler / Jxy rate");

  cfg.canonical_json = j.dump();
  return cfg;
}

std::string RateReport::to_json_text() const {
  json j;
  j["version"] = version;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["event"] = event_description;
  j["rate_kind"] = rate_kind;
  j["sampler"] = sampler;
  j["schedule"] = schedule;
  json est = json::array();
  for (size_t k = 0; k < estimates.size(); ++k)
    est.push_back(estimate_to_json(schedule[k], estimates[k]));
  j["estimates"] = est;
  if (error) {
    j["error"] = *error;
  } else {
    j["slope"] = slope;
    j["slope_ci"] = {slope_ci_lo, slope_ci_hi};
  }
  j["rate_inf"] = std::isfinite(rate_inf) ? json(rate_inf) : json("inf");
  j["tol"] = tol;
  j["verdict"] = error ? "error" : (pass ? "pass" : "fail");
  return j.dump(2) + "\n";
}

std::string RateReport::to_csv_text() const {
  std::ostringstream out;
  out << "eps,p_hat,se,eps_log_p\n";
  for (size_t k = 0; k < estimates.size(); ++k) {
    const auto& e = estimates[k];
    out << format_double(schedule[k]) << "," << format_double(e.p_hat) << ","
        << format_double(e.se) << ",";
    if (e.p_hat > 0.0) out << format_double(schedule[k] * std::log(e.p_hat));
    out << "\n";
  }
  return out.str();
}

RateReport run_ldp_experiment(const ExperimentConfig& config) {
  RateReport report;
  report.version = "0.1.0";
  report.seed = config.seed;
  report.config_hash = hex64(fnv1a64(config.canonical_json));
  report.schedule = config.schedule;
  report.tol = config.tol;
  report.rate_kind = config.rate == RateKind::I ? "I" : (config.rate == RateKind::Jxy ? "Jxy" : "Jmix");
  report.sampler = config.sampler == SamplerSpec::Kind::Bridge
                       ? "bridge"
                       : (config.sampler == SamplerSpec::Kind::Schrodinger ? "schrodinger"
                                                                           : "mixture");
  {
    std::ostringstream desc;
    switch (config.event.kind) {
      case EventSet::Kind::Tube:
        desc << "tube(radius=" << config.event.radius << ", knots=" << config.event.center.knots()
             << ")";
        break;
      case EventSet::Kind::Endpoint:
        desc << "endpoint(" << (config.event.boxes ? "boxes" : std::to_string(config.event.pairs.size()) + " pairs")
             << ")";
        break;
      case EventSet::Kind::TwoPoint:
        desc << "two-point(s=" << config.event.s << ", t=" << config.event.t << ")";
        break;
    }
    report.event_description = desc.str();
  }

  try {
    std::optional<DiscreteMeasure> mu0, mu1;
    if (config.mu0_csv) mu0 = DiscreteMeasure::from_csv(*config.mu0_csv);
    if (config.mu1_csv) mu1 = DiscreteMeasure::from_csv(*config.mu1_csv);

    // Rate context: exact OT anchors the I and Jmix rates.
    RateContext ctx;
    std::optional<ExactOtResult> ot;
    if (config.rate == RateKind::I || config.rate == RateKind::Jmix) {
      ot = ot_solve_exact(*mu0, *mu1);
      if (config.rate == RateKind::I) {
        ctx.duals = &ot->duals;
        ctx.mu0 = &*mu0;
        ctx.mu1 = &*mu1;
      } else {
        for (const auto& [i, j] : ot->plan.support_pairs())
          ctx.support.emplace_back(mu0->point(i), mu1->point(j));
      }
    } else {
      ctx.pinned = std::make_pair(config.x, config.y);
    }

    const InfRateResult inf = inf_rate_over_event(config.event, config.rate, ctx);
    report.rate_inf = inf.value;

    // Sampling grid: the tube's own grid, otherwise uniform with the event
    // times inserted as knots.
    std::vector<double> grid;
    if (config.event.kind == EventSet::Kind::Tube) {
      grid = config.event.center.grid;
    } else {
      grid = uniform_grid(config.grid_intervals);
      const double ts[2] = {config.event.s, config.event.t};
      for (double knot : ts) {
        bool present = false;
        for (double g : grid) present = present || std::abs(g - knot) <= 1e-12;
        if (!present) grid.insert(std::upper_bound(grid.begin(), grid.end(), knot), knot);
      }
    }

    // The importance shift must live on the sampling grid.
    std::optional<Path> shift;
    if (inf.argmin && std::isfinite(inf.value)) {
      Mat values(static_cast<Eigen::Index>(grid.size()), inf.argmin->dim());
      for (size_t i = 0; i < grid.size(); ++i)
        values.row(static_cast<Eigen::Index>(i)) = inf.argmin->at(grid[i]).transpose();
      shift = Path(grid, std::move(values));
    }

    // Schrodinger sampler needs one EOT plan per epsilon (warm-started).
    std::vector<Coupling> plans;
    if (config.sampler == SamplerSpec::Kind::Schrodinger) {
      SinkhornOptions opts;
      opts.tol = config.sinkhorn_tol;
      for (const auto& solve : sinkhorn_schedule(*mu0, *mu1, config.schedule, opts))
        plans.push_back(eot_plan(solve.pot, *mu0, *mu1));
    }

    for (size_t k = 0; k < config.schedule.size(); ++k) {
      const double eps = config.schedule[k];
      SamplerSpec sampler;
      switch (config.sampler) {
        case SamplerSpec::Kind::Bridge:
          sampler = SamplerSpec::bridge(config.x, config.y);
          break;
        case SamplerSpec::Kind::Schrodinger:
          sampler = SamplerSpec::schrodinger(plans[k]);
          break;
        case SamplerSpec::Kind::Mixture:
          sampler = SamplerSpec::mixture(*mu0, *mu1);
          break;
      }
      ProbEstimate est = event_probability(sampler, config.event, eps, config.n, std::nullopt,
                                           grid, mix_seeds(config.seed, 2 * k));
      if (est.p_hat < 1e-4 && shift) {
        est = event_probability(sampler, config.event, eps, config.n, shift, grid,
                                mix_seeds(config.seed, 2 * k + 1));
      }
      report.estimates.push_back(est);
    }

    const SlopeFit fit = ldp_slope(config.schedule, report.estimates);
    report.slope = fit.slope;
    report.slope_ci_lo = fit.ci_lo;
    report.slope_ci_hi = fit.ci_hi;
    report.pass = std::isfinite(report.rate_inf) &&
                  std::abs(report.slope - report.rate_inf) <=
                      config.tol * std::max(1.0, report.rate_inf);
  } catch (const std::exception& ex) {
    report.error = ex.what();
    report.pass = false;
  }
  return report;
}

}  // namespace schro
