#include "schro/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "schro/parallel.hpp"

namespace schro {

FollmerModel::FollmerModel(DiscreteMeasure mu0_, DiscreteMeasure mu1_, double epsilon_, Vec psi_)
    : mu0(std::move(mu0_)), mu1(std::move(mu1_)), epsilon(epsilon_), psi(std::move(psi_)) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("FollmerModel: epsilon must be positive");
  if (psi.size() != mu1.size())
    throw std::invalid_argument("FollmerModel: psi must have one value per mu1 atom");
  if (!psi.allFinite()) throw std::invalid_argument("FollmerModel: psi must be finite");
  if (mu0.dim() != mu1.dim()) throw std::invalid_argument("FollmerModel: dimension mismatch");
}

FollmerModel make_follmer_model(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                double epsilon, double tol, int max_iter) {
  const auto result = sinkhorn(mu0, mu1, epsilon, tol, max_iter);
  return FollmerModel(mu0, mu1, epsilon, result.pot.psi);
}

PotentialField PotentialField::zero() { return PotentialField{}; }

PotentialField PotentialField::cosine(double amplitude, double omega, double phase) {
  PotentialField f;
  f.family = Family::Cosine;
  f.amplitude = amplitude;
  f.omega = omega;
  f.phase = phase;
  return f;
}

PotentialField PotentialField::gaussian_bump(double amplitude, Vec center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_bump: width must be positive");
  PotentialField f;
  f.family = Family::GaussianBump;
  f.amplitude = amplitude;
  f.center = std::move(center);
  f.width = width;
  return f;
}

PotentialField PotentialField::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) args.push_back(std::stod(tok));
  }
  if (name == "zero") return zero();
  if (name == "cosine") {
    if (args.size() < 2 || args.size() > 3)
      throw std::invalid_argument("potential spec: cosine:A,omega[,phase]");
    return cosine(args[0], args[1], args.size() == 3 ? args[2] : 0.0);
  }
  if (name == "gaussian-bump") {
    if (args.size() < 3)
      throw std::invalid_argument("potential spec: gaussian-bump:A,width,c1[,...]");
    Vec c(static_cast<Eigen::Index>(args.size()) - 2);
    for (size_t k = 2; k < args.size(); ++k) c[static_cast<Eigen::Index>(k) - 2] = args[k];
    return gaussian_bump(args[0], std::move(c), args[1]);
  }
  throw std::invalid_argument("potential spec: unknown family '" + name + "'");
}

double PotentialField::value(const Vec& x) const {
  switch (family) {
    case Family::Zero:
      return 0.0;
    case Family::Cosine: {
      double v = 0.0;
      for (int k = 0; k < x.size(); ++k) v += std::cos(omega * x[k] + phase);
      return amplitude * v;
    }
    case Family::GaussianBump: {
      const double r2 = (x - center).squaredNorm();
      return amplitude * std::exp(-r2 / (2.0 * width * width));
    }
  }
  return 0.0;
}

Vec PotentialField::grad(const Vec& x) const {
  switch (family) {
    case Family::Zero:
      return Vec::Zero(x.size());
    case Family::Cosine: {
      Vec g(x.size());
      for (int k = 0; k < x.size(); ++k) g[k] = -amplitude * omega * std::sin(omega * x[k] + phase);
      return g;
    }
    case Family::GaussianBump: {
      const double v = value(x);
      return -v / (width * width) * (x - center);
    }
  }
  return Vec::Zero(x.size());
}

double PotentialField::laplacian(const Vec& x) const {
  switch (family) {
    case Family::Zero:
      return 0.0;
    case Family::Cosine:
      return -omega * omega * value(x);
    case Family::GaussianBump: {
      const double w2 = width * width;
      const double r2 = (x - center).squaredNorm();
      return value(x) * (r2 / (w2 * w2) - static_cast<double>(x.size()) / w2);
    }
  }
  return 0.0;
}

Vec follmer_atom_posterior(const FollmerModel& model, double t, const Vec& y) {
  const int n = model.mu1.size();
  const double eps = model.epsilon;
  const double rem = 1.0 - t;
  Vec logit(n);
  for (int j = 0; j < n; ++j) {
    const double w = model.mu1.weight(j);
    logit[j] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) +
               model.psi[j] / eps - (y - model.mu1.point(j)).squaredNorm() / (2.0 * eps * rem);
  }
  const double m = logit.maxCoeff();
  Vec p(n);
  double z = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = std::exp(logit[j] - m);
    z += p[j];
  }
  return p / z;
}

Vec follmer_drift(const FollmerModel& model, double t, const Vec& y, double t_clamp) {
  if (t < 0.0 || t > 1.0 - t_clamp)
    throw std::invalid_argument("follmer_drift: t beyond the clamp 1 - " +
                                std::to_string(t_clamp));
  if (y.size() != model.mu1.dim())
    throw std::invalid_argument("follmer_drift: dimension mismatch");
  const Vec p = follmer_atom_posterior(model, t, y);
  Vec drift = Vec::Zero(y.size());
  for (int j = 0; j < model.mu1.size(); ++j)
    drift += p[j] * (model.mu1.point(j) - y) / (1.0 - t);
  return drift;
}

PathEnsemble euler_maruyama(const FollmerModel& model, std::int64_t n, int steps,
                            std::uint64_t seed) {
  if (steps < 2) throw std::invalid_argument("euler_maruyama: steps must be >= 2");
  if (n < 1) throw std::invalid_argument("euler_maruyama: n must be >= 1");

  const std::vector<double> grid = uniform_grid(steps);
  const double dt = 1.0 / steps;
  const double eps = model.epsilon;
  const double sd = std::sqrt(eps * dt);
  const int d = model.mu0.dim();
  // Drift is singular at t = 1; freeze at the clamp knot and resolve the
  // remaining interval by pinning onto a posterior-sampled atom.
  const int k_star = std::max(0, steps - 10);
  const double t_clamp = 10.0 / steps;

  PathEnsemble ens;
  ens.grid = grid;
  ens.epsilon = eps;
  ens.seed = seed;
  ens.paths.resize(static_cast<size_t>(n));

  const Rng master(seed);
  constexpr std::int64_t kChunk = 256;
  parallel_chunks(n, kChunk, [&](std::int64_t chunk, std::int64_t b, std::int64_t e) {
    Rng rng = master.derive(static_cast<std::uint64_t>(chunk));
    for (std::int64_t traj = b; traj < e; ++traj) {
      Mat values(steps + 1, d);
      const int atom0 = rng.sample_cdf(model.mu0.cdf());
      values.row(0) = model.mu0.point(atom0).transpose();
      Vec xcur = model.mu0.point(atom0);
      for (int k = 0; k < k_star; ++k) {
        const Vec b_eps = follmer_drift(model, grid[static_cast<size_t>(k)], xcur, t_clamp);
        for (int c = 0; c < d; ++c) xcur[c] += b_eps[c] * dt + sd * rng.gauss();
        values.row(k + 1) = xcur.transpose();
      }
      // Terminal pinning: draw the atom from the exact posterior at the
      // clamp knot, then interpolate linearly onto it.
      const Vec post = follmer_atom_posterior(model, grid[static_cast<size_t>(k_star)], xcur);
      std::vector<double> cdf(static_cast<size_t>(post.size()));
      double acc = 0.0;
      for (int j = 0; j < post.size(); ++j) {
        acc += post[j];
        cdf[static_cast<size_t>(j)] = acc;
      }
      const int atom1 = rng.sample_cdf(cdf);
      const Vec target = model.mu1.point(atom1);
      const double t_star = grid[static_cast<size_t>(k_star)];
      for (int k = k_star + 1; k <= steps; ++k) {
        const double lambda = (grid[static_cast<size_t>(k)] - t_star) / (1.0 - t_star);
        values.row(k) = ((1.0 - lambda) * xcur + lambda * target).transpose();
      }
      values.row(steps) = target.transpose();
      ens.paths[static_cast<size_t>(traj)] = std::move(values);
    }
  });
  return ens;
}

double langevin_weight(const Path& path, const PotentialField& V, double epsilon) {
  double integral = 0.0;
  double prev = 0.0;
  for (int i = 0; i < path.knots(); ++i) {
    const Vec x = path.values.row(i);
    const double f = V.grad(x).squaredNorm() - V.laplacian(x);
    if (i > 0) {
      const double dt = path.grid[static_cast<size_t>(i)] - path.grid[static_cast<size_t>(i) - 1];
      integral += 0.5 * dt * (prev + f);
    }
    prev = f;
  }
  return std::exp(-0.5 * epsilon * integral);
}

LangevinCostResult langevin_cost(const Vec& x, const Vec& y, const PotentialField& V,
                                 double epsilon, std::int64_t n, std::uint64_t seed,
                                 int grid_intervals) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("langevin_cost: epsilon must be positive");
  if (n < 1) throw std::invalid_argument("langevin_cost: n must be >= 1");
  const std::vector<double> grid = uniform_grid(grid_intervals);
  const int d = static_cast<int>(x.size());

  // Streams bridges and accumulates A = exp{(eps/2) int (Lap V - |grad V|^2)}
  // per chunk; chunk-ordered reduction keeps results thread-count invariant.
  const Rng master(seed);
  constexpr std::int64_t kChunk = 1024;
  const std::int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> sum_a(static_cast<size_t>(n_chunks), 0.0);
  std::vector<double> sum_a2(static_cast<size_t>(n_chunks), 0.0);
  parallel_chunks(n, kChunk, [&](std::int64_t chunk, std::int64_t b, std::int64_t e) {
    Rng rng = master.derive(static_cast<std::uint64_t>(chunk));
    double s = 0.0, s2 = 0.0;
    for (std::int64_t k = b; k < e; ++k) {
      const Path bridge = sample_brownian_bridge(x, y, epsilon, grid, rng);
      double integral = 0.0;
      double prev = 0.0;
      for (int i = 0; i < bridge.knots(); ++i) {
        const Vec pt = bridge.values.row(i);
        const double f = V.laplacian(pt) - V.grad(pt).squaredNorm();
        if (i > 0) {
          const double dt =
              bridge.grid[static_cast<size_t>(i)] - bridge.grid[static_cast<size_t>(i) - 1];
          integral += 0.5 * dt * (prev + f);
        }
        prev = f;
      }
      const double a = std::exp(0.5 * epsilon * integral);
      s += a;
      s2 += a * a;
    }
    sum_a[static_cast<size_t>(chunk)] = s;
    sum_a2[static_cast<size_t>(chunk)] = s2;
  });
  double total = 0.0, total2 = 0.0;
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    total += sum_a[static_cast<size_t>(c)];
    total2 += sum_a2[static_cast<size_t>(c)];
  }
  const double mean = total / static_cast<double>(n);
  const double var = std::max(0.0, total2 / static_cast<double>(n) - mean * mean);
  const double se_mean = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

  const double log_q = -0.5 * d * std::log(2.0 * M_PI * epsilon) - quad_cost(x, y) / epsilon;
  const double log_p = log_q + V.value(x) - V.value(y) + std::log(mean);
  LangevinCostResult res;
  res.value = -epsilon * log_p;
  res.se = epsilon * se_mean / mean;  // delta method through -eps*log
  res.high_variance = res.se > std::abs(res.value) / 10.0;
  return res;
}

LangevinBridgeResult sample_langevin_bridge(const Vec& x, const Vec& y, const PotentialField& V,
                                            double epsilon, const std::vector<double>& grid,
                                            std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_langevin_bridge: n must be >= 1");
  PathEnsemble ens;
  ens.grid = grid;
  ens.epsilon = epsilon;
  ens.seed = seed;
  ens.paths.resize(static_cast<size_t>(n));
  Vec weights(n);

  const Rng master(seed);
  constexpr std::int64_t kChunk = 1024;
  parallel_chunks(n, kChunk, [&](std::int64_t chunk, std::int64_t b, std::int64_t e) {
    Rng rng = master.derive(static_cast<std::uint64_t>(chunk));
    for (std::int64_t k = b; k < e; ++k) {
      Path bridge = sample_brownian_bridge(x, y, epsilon, grid, rng);
      weights[static_cast<Eigen::Index>(k)] = langevin_weight(bridge, V, epsilon);
      ens.paths[static_cast<size_t>(k)] = std::move(bridge.values);
    }
  });

  LangevinBridgeResult out;
  const double sum = weights.sum();
  const double sum2 = weights.squaredNorm();
  out.ess = sum * sum / sum2;
  out.low_ess = out.ess < static_cast<double>(n) / 100.0;
  ens.weights = std::move(weights);
  ens.weight_normalizer = sum;
  out.ensemble = std::move(ens);
  return out;
}

}  // namespace schro
