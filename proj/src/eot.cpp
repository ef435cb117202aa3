#include "schro/eot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "schro/ot_dual.hpp"

namespace schro {

namespace {

// log sum_k exp(terms[k]) with max subtraction.
double log_sum_exp(const Vec& terms) {
  const double m = terms.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf
  double s = 0.0;
  for (int k = 0; k < terms.size(); ++k) s += std::exp(terms[k] - m);
  return m + std::log(s);
}

Vec log_weights(const DiscreteMeasure& mu) {
  Vec lw(mu.size());
  for (int i = 0; i < mu.size(); ++i)
    lw[i] = mu.weight(i) > 0.0 ? std::log(mu.weight(i))
                               : -std::numeric_limits<double>::infinity();
  return lw;
}

}  // namespace

Coupling::Coupling(Mat plan_, DiscreteMeasure source_, DiscreteMeasure target_,
                   std::optional<double> epsilon_)
    : plan(std::move(plan_)),
      source(std::move(source_)),
      target(std::move(target_)),
      epsilon(epsilon_) {
  if (plan.rows() != source.size() || plan.cols() != target.size())
    throw std::invalid_argument("Coupling: plan shape does not match marginals");
  if ((plan.array() < 0.0).any() || !plan.allFinite())
    throw std::invalid_argument("Coupling: plan entries must be finite and nonnegative");
  const double row_err = (plan.rowwise().sum() - source.weights()).lpNorm<Eigen::Infinity>();
  const double col_err =
      (plan.colwise().sum().transpose() - target.weights()).lpNorm<Eigen::Infinity>();
  if (row_err > 1e-8 || col_err > 1e-8)
    throw std::invalid_argument("Coupling: marginal mismatch (row " + std::to_string(row_err) +
                                ", col " + std::to_string(col_err) + ")");
}

std::vector<std::pair<int, int>> Coupling::support_pairs(double threshold) const {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < plan.rows(); ++i)
    for (int j = 0; j < plan.cols(); ++j)
      if (plan(i, j) > threshold) pairs.emplace_back(i, j);
  return pairs;
}

double SchrodingerResiduals::max() const {
  return std::max(r0.lpNorm<Eigen::Infinity>(), r1.lpNorm<Eigen::Infinity>());
}

SchrodingerResiduals schrodinger_residuals(const PotentialPair& pot, const DiscreteMeasure& mu0,
                                           const DiscreteMeasure& mu1) {
  const Mat c = cost_matrix(mu0, mu1);
  const Vec lw0 = log_weights(mu0);
  const Vec lw1 = log_weights(mu1);
  const double eps = pot.epsilon;
  SchrodingerResiduals res;
  res.r0.resize(mu0.size());
  res.r1.resize(mu1.size());
  Vec terms1(mu1.size()), terms0(mu0.size());
  for (int i = 0; i < mu0.size(); ++i) {
    for (int j = 0; j < mu1.size(); ++j)
      terms1[j] = lw1[j] + (pot.phi[i] + pot.psi[j] - c(i, j)) / eps;
    res.r0[i] = std::abs(log_sum_exp(terms1));
  }
  for (int j = 0; j < mu1.size(); ++j) {
    for (int i = 0; i < mu0.size(); ++i)
      terms0[i] = lw0[i] + (pot.phi[i] + pot.psi[j] - c(i, j)) / eps;
    res.r1[j] = std::abs(log_sum_exp(terms0));
  }
  return res;
}

SinkhornResult sinkhorn(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double epsilon,
                        const SinkhornOptions& opts) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("sinkhorn: tol must be positive");
  if (mu0.dim() != mu1.dim()) throw std::invalid_argument("sinkhorn: dimension mismatch");

  const int m = mu0.size(), n = mu1.size();
  const Mat c = cost_matrix(mu0, mu1);
  const Vec lw0 = log_weights(mu0);
  const Vec lw1 = log_weights(mu1);

  Vec phi = Vec::Zero(m), psi = Vec::Zero(n);
  if (opts.warm_start) {
    if (opts.warm_start->phi.size() != m || opts.warm_start->psi.size() != n)
      throw std::invalid_argument("sinkhorn: warm start shape mismatch");
    phi = opts.warm_start->phi;
    psi = opts.warm_start->psi;
  }

  // Alternating log-domain updates. Each phi update zeroes the first identity
  // exactly; the per-sweep change of the potentials (divided by eps) equals
  // the log-residual of the pre-update pair, which gives a free convergence
  // estimate. Candidate solutions get an exact residual check before exit.
  Vec terms(std::max(m, n));
  double r_est = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    double r0 = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) terms[j] = lw1[j] + (psi[j] - c(i, j)) / epsilon;
      const double next = -epsilon * log_sum_exp(terms.head(n));
      r0 = std::max(r0, std::abs(next - phi[i]) / epsilon);
      phi[i] = next;
    }
    double r1 = 0.0;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < m; ++i) terms[i] = lw0[i] + (phi[i] - c(i, j)) / epsilon;
      const double next = -epsilon * log_sum_exp(terms.head(m));
      r1 = std::max(r1, std::abs(next - psi[j]) / epsilon);
      psi[j] = next;
    }
    r_est = std::max(r0, r1);
    if (r_est <= 0.5 * opts.tol || (r_est <= opts.tol && iter == opts.max_iter)) {
      PotentialPair pot{phi, psi, epsilon};
      const double exact = schrodinger_residuals(pot, mu0, mu1).max();
      if (exact <= opts.tol) return {std::move(pot), exact, iter};
      r_est = exact;
    }
  }
  throw SinkhornError("sinkhorn: no convergence after " + std::to_string(opts.max_iter) +
                          " sweeps (residual " + std::to_string(r_est) + ")",
                      r_est, opts.max_iter);
}

SinkhornResult sinkhorn(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double epsilon,
                        double tol, int max_iter) {
  SinkhornOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  return sinkhorn(mu0, mu1, epsilon, opts);
}

std::vector<SinkhornResult> sinkhorn_schedule(const DiscreteMeasure& mu0,
                                              const DiscreteMeasure& mu1,
                                              const std::vector<double>& eps_schedule,
                                              const SinkhornOptions& opts) {
  if (eps_schedule.empty()) throw std::invalid_argument("sinkhorn_schedule: empty schedule");
  for (size_t k = 0; k < eps_schedule.size(); ++k) {
    if (!(eps_schedule[k] > 0.0))
      throw std::invalid_argument("sinkhorn_schedule: epsilons must be positive");
    if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1]))
      throw std::invalid_argument("sinkhorn_schedule: schedule must be strictly decreasing");
  }

  std::vector<SinkhornResult> out;
  out.reserve(eps_schedule.size());
  PotentialPair warm;
  bool have_warm = opts.warm_start != nullptr;
  if (have_warm) warm = *opts.warm_start;

  double current;
  if (have_warm) {
    current = warm.epsilon;
  } else {
    // Anchor the ladder at a large eps where the solve is cheap.
    current = std::max(eps_schedule.front(), 1.0);
    warm = sinkhorn(mu0, mu1, current, opts).pot;
    have_warm = true;
  }
  for (double target : eps_schedule) {
    // Bridge large ratios with intermediate solves; iteration counts blow up
    // at small eps without a nearby warm start.
    constexpr double kMaxRatio = 1.5;
    while (have_warm && current / target > kMaxRatio) {
      current /= kMaxRatio;
      SinkhornOptions sub = opts;
      sub.warm_start = &warm;
      warm = sinkhorn(mu0, mu1, current, sub).pot;
    }
    SinkhornOptions sub = opts;
    sub.warm_start = have_warm ? &warm : nullptr;
    out.push_back(sinkhorn(mu0, mu1, target, sub));
    warm = out.back().pot;
    have_warm = true;
    current = target;
  }
  return out;
}

Coupling eot_plan(const PotentialPair& pot, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                  double residual_tol) {
  const auto res = schrodinger_residuals(pot, mu0, mu1);
  if (res.max() > residual_tol)
    throw SinkhornError("eot_plan: potentials not solved to tolerance (residual " +
                            std::to_string(res.max()) + ")",
                        res.max(), 0);
  const Mat c = cost_matrix(mu0, mu1);
  Mat plan(mu0.size(), mu1.size());
  for (int i = 0; i < mu0.size(); ++i)
    for (int j = 0; j < mu1.size(); ++j)
      plan(i, j) = mu0.weight(i) * mu1.weight(j) *
                   std::exp((pot.phi[i] + pot.psi[j] - c(i, j)) / pot.epsilon);
  return Coupling(std::move(plan), mu0, mu1, pot.epsilon);
}

PotentialPair normalize_potentials(const PotentialPair& pot, const DiscreteMeasure& mu0,
                                   const DiscreteMeasure& mu1) {
  const double int_phi = mu0.weights().dot(pot.phi);
  const double int_psi = mu1.weights().dot(pot.psi);
  const double a = 0.5 * (int_psi - int_phi);
  return {pot.phi.array() + a, pot.psi.array() - a, pot.epsilon};
}

std::vector<ConvergenceRow> potential_convergence_curve(const DiscreteMeasure& mu0,
                                                        const DiscreteMeasure& mu1,
                                                        const std::vector<double>& eps_schedule,
                                                        const DualPotentials& duals,
                                                        const SinkhornOptions& opts) {
  const DualPotentials nd = normalize_duals(duals, mu0, mu1);
  const auto solves = sinkhorn_schedule(mu0, mu1, eps_schedule, opts);
  std::vector<ConvergenceRow> rows;
  rows.reserve(solves.size());
  for (size_t k = 0; k < solves.size(); ++k) {
    const PotentialPair p = normalize_potentials(solves[k].pot, mu0, mu1);
    rows.push_back({eps_schedule[k], (p.phi - nd.psi_c).lpNorm<Eigen::Infinity>(),
                    (p.psi - nd.psi).lpNorm<Eigen::Infinity>()});
  }
  return rows;
}

}  // namespace schro
