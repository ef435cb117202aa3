#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace schro::oracle {

Mat brute_force_sinkhorn_plan(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                              double epsilon, int sweeps) {
  const Mat c = cost_matrix(mu0, mu1);
  const Mat K = (-c / epsilon).array().exp();
  const Vec a = mu0.weights();
  const Vec b = mu1.weights();
  Vec u = Vec::Ones(a.size()), v = Vec::Ones(b.size());
  for (int s = 0; s < sweeps; ++s) {
    u = a.array() / (K * v).array();
    v = b.array() / (K.transpose() * u).array();
  }
  return u.asDiagonal() * K * v.asDiagonal();
}

double dp_tube_min_energy(const std::vector<double>& grid, const std::vector<double>& lo,
                          const std::vector<double>& hi, double h0, double hM,
                          int lattice_points, int rounds) {
  const size_t M = grid.size() - 1;
  if (lo.size() != M + 1 || hi.size() != M + 1)
    throw std::invalid_argument("dp_tube_min_energy: bound size mismatch");

  std::vector<double> best(M + 1);
  double span = 0.0;
  for (size_t i = 0; i <= M; ++i) {
    const double lin = h0 + (hM - h0) * grid[i];
    best[i] = std::clamp(lin, lo[i], hi[i]);
    span = std::max(span, hi[i] - lo[i]);
  }
  best[0] = h0;
  best[M] = hM;

  const int K = lattice_points;
  std::vector<std::vector<double>> level(M + 1);
  std::vector<std::vector<double>> cost(M + 1);
  std::vector<std::vector<int>> from(M + 1);

  for (int round = 0; round < rounds; ++round) {
    for (size_t i = 0; i <= M; ++i) {
      if (i == 0 || i == M) {
        level[i] = {i == 0 ? h0 : hM};
        continue;
      }
      const double a = std::max(lo[i], best[i] - span);
      const double b = std::min(hi[i], best[i] + span);
      level[i].resize(static_cast<size_t>(K));
      for (int k = 0; k < K; ++k)
        level[i][static_cast<size_t>(k)] = a + (b - a) * k / (K - 1);
    }
    for (size_t i = 0; i <= M; ++i) {
      cost[i].assign(level[i].size(), std::numeric_limits<double>::infinity());
      from[i].assign(level[i].size(), -1);
    }
    cost[0][0] = 0.0;
    for (size_t i = 1; i <= M; ++i) {
      const double dt = grid[i] - grid[i - 1];
      for (size_t k = 0; k < level[i].size(); ++k) {
        for (size_t k2 = 0; k2 < level[i - 1].size(); ++k2) {
          const double step = level[i][k] - level[i - 1][k2];
          const double c = cost[i - 1][k2] + step * step / dt;
          if (c < cost[i][k]) {
            cost[i][k] = c;
            from[i][k] = static_cast<int>(k2);
          }
        }
      }
    }
    size_t k = 0;  // single terminal level
    for (size_t i = M; i > 0; --i) {
      best[i] = level[i][k];
      k = static_cast<size_t>(from[i][k]);
    }
    best[0] = h0;
    span *= 0.5;
    if (span < 1e-14) break;
  }

  double energy = 0.0;
  for (size_t i = 0; i < M; ++i) {
    const double step = best[i + 1] - best[i];
    energy += step * step / (grid[i + 1] - grid[i]);
  }
  return energy;
}

double finite_diff(const std::function<double(const Vec&)>& f, const Vec& x, int k, double delta) {
  Vec hi = x, lo = x;
  hi[k] += delta;
  lo[k] -= delta;
  return (f(hi) - f(lo)) / (2.0 * delta);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double stat = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    stat = std::max(stat, std::abs((static_cast<double>(i) + 1.0) / n - F));
    stat = std::max(stat, std::abs(static_cast<double>(i) / n - F));
  }
  return stat;
}

double two_point_rate_brute_force(double s, double t, const Vec& x, const Vec& y,
                                  const DualPotentials& duals, const DiscreteMeasure& mu0,
                                  const DiscreteMeasure& mu1) {
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  for (int i = 0; i < mu0.size(); ++i) {
    double leg0;
    if (s == 0.0) {
      if ((mu0.point(i) - x).lpNorm<Eigen::Infinity>() > 1e-9) continue;
      leg0 = 0.0;
    } else {
      leg0 = quad_cost(mu0.point(i), x) / s;
    }
    for (int j = 0; j < mu1.size(); ++j) {
      double leg2;
      if (t == 1.0) {
        if ((mu1.point(j) - y).lpNorm<Eigen::Infinity>() > 1e-9) continue;
        leg2 = 0.0;
      } else {
        leg2 = quad_cost(y, mu1.point(j)) / (1.0 - t);
      }
      const double total =
          leg0 + quad_cost(x, y) / (t - s) + leg2 - duals.psi_c[i] - duals.psi[j];
      best = std::min(best, total);
    }
  }
  return best;
}

DiscreteMeasure random_measure(Rng& rng, int atoms, int dim, double box) {
  std::vector<Vec> points;
  for (int i = 0; i < atoms; ++i) {
    Vec p(dim);
    for (int k = 0; k < dim; ++k) p[k] = box * (2.0 * rng.uniform01() - 1.0);
    points.push_back(std::move(p));
  }
  Vec w(atoms);
  double total = 0.0;
  for (int i = 0; i < atoms; ++i) {
    w[i] = 0.1 + rng.uniform01();
    total += w[i];
  }
  w /= total;
  // Kill normalization drift so the 1e-12 invariant holds exactly.
  w[atoms - 1] = 1.0 - w.head(atoms - 1).sum();
  return DiscreteMeasure(std::move(points), std::move(w));
}

double wall_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace schro::oracle
