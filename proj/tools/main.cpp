// schro-ldp: entropic optimal transport, Schrodinger bridge sampling, rate
// functionals, and Monte Carlo large-deviation experiments in one binary.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "schro/dynamics.hpp"
#include "schro/io.hpp"
#include "schro/ldp.hpp"
#include "schro/measures.hpp"
#include "schro/ot_dual.hpp"
#include "schro/paths.hpp"
#include "schro/rates.hpp"

using json = nlohmann::json;
using namespace schro;

namespace {

void emit(const std::string& content, const std::string& out) {
  if (out.empty())
    std::cout << content;
  else
    write_file_atomic(out, content);
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json mat_to_json(const Mat& m) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i) arr.push_back(vec_to_json(m.row(i)));
  return arr;
}

Vec parse_vec(const std::string& spec) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  if (vals.empty()) throw std::invalid_argument("expected comma-separated numbers, got '" + spec + "'");
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

RateContext build_rate_context(RateKind kind, const std::string& mu0_csv,
                               const std::string& mu1_csv, const std::string& x_spec,
                               const std::string& y_spec,
                               std::optional<DiscreteMeasure>& mu0_store,
                               std::optional<DiscreteMeasure>& mu1_store,
                               std::optional<ExactOtResult>& ot_store) {
  RateContext ctx;
  if (kind == RateKind::Jxy) {
    if (x_spec.empty() || y_spec.empty())
      throw std::invalid_argument("rate Jxy needs --x and --y");
    ctx.pinned = std::make_pair(parse_vec(x_spec), parse_vec(y_spec));
    return ctx;
  }
  if (mu0_csv.empty() || mu1_csv.empty())
    throw std::invalid_argument("rates I and Jmix need --mu0 and --mu1");
  mu0_store = DiscreteMeasure::from_csv(mu0_csv);
  mu1_store = DiscreteMeasure::from_csv(mu1_csv);
  ot_store = ot_solve_exact(*mu0_store, *mu1_store);
  if (kind == RateKind::I) {
    ctx.duals = &ot_store->duals;
    ctx.mu0 = &*mu0_store;
    ctx.mu1 = &*mu1_store;
  } else {
    for (const auto& [i, j] : ot_store->plan.support_pairs())
      ctx.support.emplace_back(mu0_store->point(i), mu1_store->point(j));
  }
  return ctx;
}

RateKind parse_rate_kind(const std::string& kind) {
  if (kind == "I") return RateKind::I;
  if (kind == "Jxy") return RateKind::Jxy;
  if (kind == "Jmix") return RateKind::Jmix;
  throw std::invalid_argument("rate kind must be I, Jxy, or Jmix");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"schro-ldp: Schrodinger bridges, entropic OT, and LDP slope experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // the global --seed may follow the subcommand name

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "master RNG seed (default 0)");

  std::string mu0_csv, mu1_csv, out, x_spec, y_spec;
  double eps = 1.0, tol = 1e-10;
  int max_iter = 200000, grid_intervals = 200, steps = 2000;
  std::int64_t n = 100000;

  auto* cmd_sinkhorn = app.add_subcommand("sinkhorn", "solve the Schrodinger system");
  cmd_sinkhorn->add_option("--mu0", mu0_csv)->required();
  cmd_sinkhorn->add_option("--mu1", mu1_csv)->required();
  cmd_sinkhorn->add_option("--eps", eps)->required();
  cmd_sinkhorn->add_option("--tol", tol);
  cmd_sinkhorn->add_option("--max-iter", max_iter);
  cmd_sinkhorn->add_option("--out", out);

  auto* cmd_ot = app.add_subcommand("ot", "exact zero-noise OT with dual potentials");
  cmd_ot->add_option("--mu0", mu0_csv)->required();
  cmd_ot->add_option("--mu1", mu1_csv)->required();
  cmd_ot->add_option("--out", out);

  std::string rate_kind = "I", path_csv;
  auto* cmd_rate = app.add_subcommand("rate", "evaluate a rate functional on a path");
  cmd_rate->add_option("--kind", rate_kind, "I | Jxy | Jmix");
  cmd_rate->add_option("--path", path_csv)->required();
  cmd_rate->add_option("--mu0", mu0_csv);
  cmd_rate->add_option("--mu1", mu1_csv);
  cmd_rate->add_option("--x", x_spec, "endpoint, comma-separated");
  cmd_rate->add_option("--y", y_spec);
  cmd_rate->add_option("--out", out);

  std::string event_json, argmin_out;
  auto* cmd_inf = app.add_subcommand("inf-rate", "rate infimum over an event");
  cmd_inf->add_option("--event", event_json, "event JSON file")->required();
  cmd_inf->add_option("--rate", rate_kind, "I | Jxy | Jmix");
  cmd_inf->add_option("--mu0", mu0_csv);
  cmd_inf->add_option("--mu1", mu1_csv);
  cmd_inf->add_option("--x", x_spec);
  cmd_inf->add_option("--y", y_spec);
  cmd_inf->add_option("--argmin-out", argmin_out, "write the argmin path CSV here");
  cmd_inf->add_option("--out", out);

  std::string sample_kind = "bridge", v_spec = "zero";
  auto* cmd_sample = app.add_subcommand("sample", "draw a path ensemble as CSV");
  cmd_sample->add_option("--kind", sample_kind, "bridge | schrodinger | langevin");
  cmd_sample->add_option("--mu0", mu0_csv);
  cmd_sample->add_option("--mu1", mu1_csv);
  cmd_sample->add_option("--x", x_spec);
  cmd_sample->add_option("--y", y_spec);
  cmd_sample->add_option("--V", v_spec, "potential spec, e.g. cosine:1,1");
  cmd_sample->add_option("--eps", eps)->required();
  cmd_sample->add_option("--n", n);
  cmd_sample->add_option("--grid-intervals", grid_intervals);
  cmd_sample->add_option("--sinkhorn-tol", tol);
  cmd_sample->add_option("--out", out);

  auto* cmd_follmer = app.add_subcommand("follmer", "Euler-Maruyama trajectories of the bridge SDE");
  cmd_follmer->add_option("--mu0", mu0_csv)->required();
  cmd_follmer->add_option("--mu1", mu1_csv)->required();
  cmd_follmer->add_option("--eps", eps)->required();
  cmd_follmer->add_option("--steps", steps);
  cmd_follmer->add_option("--n", n);
  cmd_follmer->add_option("--sinkhorn-tol", tol);
  cmd_follmer->add_option("--out", out);

  auto* cmd_lcost = app.add_subcommand("langevin-cost", "Monte Carlo c_eps(x, y) estimate");
  cmd_lcost->add_option("--V", v_spec)->required();
  cmd_lcost->add_option("--x", x_spec)->required();
  cmd_lcost->add_option("--y", y_spec)->required();
  cmd_lcost->add_option("--eps", eps)->required();
  cmd_lcost->add_option("--n", n);
  cmd_lcost->add_option("--grid-intervals", grid_intervals);
  cmd_lcost->add_option("--out", out);

  std::string config_file, out_dir;
  auto* cmd_ldp = app.add_subcommand("ldp", "run an LDP slope experiment from a config");
  cmd_ldp->add_option("--config", config_file)->required();
  cmd_ldp->add_option("--n", n, "default sample count when the config omits n");
  cmd_ldp->add_option("--tol", tol, "default verdict tolerance when the config omits tol");
  cmd_ldp->add_option("--out-dir", out_dir, "default output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(cmd_sinkhorn)) {
      const auto mu0 = DiscreteMeasure::from_csv(mu0_csv);
      const auto mu1 = DiscreteMeasure::from_csv(mu1_csv);
      const auto result = sinkhorn(mu0, mu1, eps, tol, max_iter);
      json j;
      j["phi"] = vec_to_json(result.pot.phi);
      j["psi"] = vec_to_json(result.pot.psi);
      j["residual"] = result.residual;
      j["iters"] = result.iters;
      emit(j.dump(2) + "\n", out);
    } else if (app.got_subcommand(cmd_ot)) {
      const auto mu0 = DiscreteMeasure::from_csv(mu0_csv);
      const auto mu1 = DiscreteMeasure::from_csv(mu1_csv);
      const auto result = ot_solve_exact(mu0, mu1);
      json j;
      j["plan"] = mat_to_json(result.plan.plan);
      j["psi"] = vec_to_json(result.duals.psi);
      j["psi_c"] = vec_to_json(result.duals.psi_c);
      j["primal"] = result.primal;
      j["dual"] = result.dual;
      emit(j.dump(2) + "\n", out);
    } else if (app.got_subcommand(cmd_rate)) {
      const RateKind kind = parse_rate_kind(rate_kind);
      const Path path = Path::from_csv(path_csv);
      std::optional<DiscreteMeasure> mu0, mu1;
      std::optional<ExactOtResult> ot;
      const RateContext ctx =
          build_rate_context(kind, mu0_csv, mu1_csv, x_spec, y_spec, mu0, mu1, ot);
      double value = 0.0;
      if (kind == RateKind::Jxy)
        value = rate_J_xy(path, ctx.pinned->first, ctx.pinned->second);
      else if (kind == RateKind::Jmix)
        value = rate_J_mix(path, ctx.support);
      else
        value = rate_I(path, *ctx.duals, *ctx.mu0, *ctx.mu1);
      emit((std::isfinite(value) ? format_double(value) : std::string("inf")) + "\n", out);
    } else if (app.got_subcommand(cmd_inf)) {
      const RateKind kind = parse_rate_kind(rate_kind);
      const EventSet event = event_set_from_json_text(read_file(event_json));
      std::optional<DiscreteMeasure> mu0, mu1;
      std::optional<ExactOtResult> ot;
      const RateContext ctx =
          build_rate_context(kind, mu0_csv, mu1_csv, x_spec, y_spec, mu0, mu1, ot);
      const InfRateResult result = inf_rate_over_event(event, kind, ctx);
      json j;
      j["value"] = std::isfinite(result.value) ? json(result.value) : json("inf");
      if (result.argmin && !argmin_out.empty()) {
        write_file_atomic(argmin_out, result.argmin->to_csv_text());
        j["argmin_path_csv"] = argmin_out;
      } else {
        j["argmin_path_csv"] = nullptr;
      }
      emit(j.dump(2) + "\n", out);
    } else if (app.got_subcommand(cmd_sample)) {
      const auto grid = uniform_grid(grid_intervals);
      if (sample_kind == "bridge") {
        const Vec x = parse_vec(x_spec), y = parse_vec(y_spec);
        PathEnsemble ens;
        ens.grid = grid;
        ens.epsilon = eps;
        ens.seed = seed;
        Rng rng(seed);
        for (std::int64_t k = 0; k < n; ++k)
          ens.paths.push_back(sample_brownian_bridge(x, y, eps, grid, rng).values);
        emit(ens.to_csv_text(), out);
      } else if (sample_kind == "schrodinger") {
        const auto mu0 = DiscreteMeasure::from_csv(mu0_csv);
        const auto mu1 = DiscreteMeasure::from_csv(mu1_csv);
        const auto solve = sinkhorn(mu0, mu1, eps, tol, max_iter);
        const auto plan = eot_plan(solve.pot, mu0, mu1);
        emit(sample_schrodinger_bridge(plan, eps, grid, n, seed).to_csv_text(), out);
      } else if (sample_kind == "langevin") {
        const Vec x = parse_vec(x_spec), y = parse_vec(y_spec);
        const auto V = PotentialField::parse(v_spec);
        const auto result = sample_langevin_bridge(x, y, V, eps, grid, n, seed);
        if (result.low_ess)
          std::cerr << "warning: effective sample size " << result.ess << " below n/100\n";
        emit(result.ensemble.to_csv_text(), out);
      } else {
        throw std::invalid_argument("sample kind must be bridge, schrodinger, or langevin");
      }
    } else if (app.got_subcommand(cmd_follmer)) {
      const auto mu0 = DiscreteMeasure::from_csv(mu0_csv);
      const auto mu1 = DiscreteMeasure::from_csv(mu1_csv);
      const auto model = make_follmer_model(mu0, mu1, eps, tol, max_iter);
      emit(euler_maruyama(model, n, steps, seed).to_csv_text(), out);
    } else if (app.got_subcommand(cmd_lcost)) {
      const Vec x = parse_vec(x_spec), y = parse_vec(y_spec);
      const auto V = PotentialField::parse(v_spec);
      const auto result = langevin_cost(x, y, V, eps, n, seed, grid_intervals);
      json j;
      j["value"] = result.value;
      j["se"] = result.se;
      j["high_variance"] = result.high_variance;
      emit(j.dump(2) + "\n", out);
    } else if (app.got_subcommand(cmd_ldp)) {
      // Config overrides flags: flags only fill keys the file omits.
      json raw = json::parse(read_file(config_file));
      if (!raw.contains("seed")) raw["seed"] = seed;
      if (!raw.contains("n") && cmd_ldp->count("--n")) raw["n"] = n;
      if (!raw.contains("tol") && cmd_ldp->count("--tol")) raw["tol"] = tol;
      if (!raw.contains("out_dir") && !out_dir.empty()) raw["out_dir"] = out_dir;
      const ExperimentConfig config = ExperimentConfig::from_json_text(raw.dump());
      const RateReport report = run_ldp_experiment(config);
      if (config.out_dir) {
        using Format = ExperimentConfig::Format;
        if (config.format != Format::Csv)
          write_file_atomic(*config.out_dir + "/report.json", report.to_json_text());
        if (config.format != Format::Json)
          write_file_atomic(*config.out_dir + "/report.csv", report.to_csv_text());
      } else {
        std::cout << report.to_json_text();
      }
      if (report.error) {
        std::cerr << "error: " << *report.error << "\n";
        return 2;
      }
      return report.pass ? 0 : 2;
    }
  } catch (const std::invalid_argument& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
