#include "schro/ot_dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace schro {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Successive shortest paths with node potentials on the dense bipartite
// transport graph (sources = mu0 atoms, sinks = mu1 atoms, every arc i->j of
// cost c_ij). Dijkstra runs on reduced costs, which stay nonnegative up to
// roundoff and are clamped at zero. Returns the optimal flow and the final
// potentials p (sources) and q (sinks); u = -p, v = q are optimal LP duals.
struct FlowResult {
  Mat flow;
  Vec p, q;
};

FlowResult solve_transport_flow(const Mat& c, const Vec& a, const Vec& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  Mat flow = Mat::Zero(m, n);
  Vec p = Vec::Zero(m), q = Vec::Zero(n);
  Vec supply = a, demand = b;

  // Total remaining mass is 1; stop once it is numerically exhausted.
  double remaining = 1.0;
  const double mass_tol = 1e-13;
  const int max_rounds = 16 * (m + n) * (m + n) + 64;

  const int V = m + n;  // node ids: sources [0, m), sinks [m, m+n)
  std::vector<double> dist(V);
  std::vector<int> parent(V);
  std::vector<char> done(V);

  for (int round = 0; round < max_rounds; ++round) {
    remaining = supply.sum();
    if (remaining <= mass_tol) break;

    // Multi-source Dijkstra from all sources with remaining supply.
    for (int u = 0; u < V; ++u) {
      dist[u] = kInf;
      parent[u] = -1;
      done[u] = 0;
    }
    for (int i = 0; i < m; ++i)
      if (supply[i] > 0.0) dist[i] = 0.0;

    int sink_hit = -1;
    for (int it = 0; it < V; ++it) {
      int u = -1;
      double best = kInf;
      for (int w = 0; w < V; ++w)
        if (!done[w] && dist[w] < best) {
          best = dist[w];
          u = w;
        }
      if (u < 0) break;
      done[u] = 1;
      if (u >= m && demand[u - m] > 0.0) {
        sink_hit = u - m;
        break;
      }
      if (u < m) {
        const int i = u;
        for (int j = 0; j < n; ++j) {
          const double rc = std::max(0.0, c(i, j) + p[i] - q[j]);
          if (dist[i] + rc < dist[m + j]) {
            dist[m + j] = dist[i] + rc;
            parent[m + j] = i;
          }
        }
      } else {
        const int j = u - m;
        for (int i = 0; i < m; ++i) {
          if (flow(i, j) <= 0.0) continue;
          const double rc = std::max(0.0, q[j] - p[i] - c(i, j));
          if (dist[m + j] + rc < dist[i]) {
            dist[i] = dist[m + j] + rc;
            parent[i] = m + j;
          }
        }
      }
    }
    if (sink_hit < 0)
      throw OtSolveError("ot_solve_exact: no augmenting path (remaining mass " +
                             std::to_string(remaining) + ")",
                         remaining);

    // Bottleneck along the path: terminal demand, root supply, backward flows.
    const double d_sink = dist[m + sink_hit];
    double delta = demand[sink_hit];
    int node = m + sink_hit;
    while (parent[node] >= 0) {
      const int prev = parent[node];
      if (node < m) delta = std::min(delta, flow(node, prev - m));  // backward arc
      node = prev;
    }
    delta = std::min(delta, supply[node]);

    node = m + sink_hit;
    while (parent[node] >= 0) {
      const int prev = parent[node];
      if (node >= m)
        flow(prev, node - m) += delta;
      else
        flow(node, parent[node] - m) -= delta;
      node = prev;
    }
    supply[node] -= delta;
    demand[sink_hit] -= delta;

    // Johnson potential update keeps reduced costs nonnegative.
    for (int i = 0; i < m; ++i) p[i] += std::min(dist[i], d_sink);
    for (int j = 0; j < n; ++j) q[j] += std::min(dist[m + j], d_sink);
  }
  if (supply.sum() > 1e-12)
    throw OtSolveError("ot_solve_exact: flow did not exhaust the marginals", supply.sum());
  flow = flow.cwiseMax(0.0);  // roundoff can leave -1e-20 dust on drained arcs
  return {std::move(flow), std::move(p), std::move(q)};
}

Vec c_transform_on_atoms(const Vec& f, const Mat& c, bool over_columns) {
  // over_columns: result on rows, min over columns of c(i,j) - f(j).
  if (over_columns) {
    Vec out(c.rows());
    for (int i = 0; i < c.rows(); ++i) {
      double best = kInf;
      for (int j = 0; j < c.cols(); ++j) best = std::min(best, c(i, j) - f[j]);
      out[i] = best;
    }
    return out;
  }
  Vec out(c.cols());
  for (int j = 0; j < c.cols(); ++j) {
    double best = kInf;
    for (int i = 0; i < c.rows(); ++i) best = std::min(best, c(i, j) - f[i]);
    out[j] = best;
  }
  return out;
}

}  // namespace

DualPotentials normalize_duals(const DualPotentials& duals, const DiscreteMeasure& mu0,
                               const DiscreteMeasure& mu1) {
  const double int_phi = mu0.weights().dot(duals.psi_c);
  const double int_psi = mu1.weights().dot(duals.psi);
  const double a = 0.5 * (int_psi - int_phi);
  return {duals.psi.array() - a, duals.psi_c.array() + a, true};
}

ExactOtResult ot_solve_exact(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1) {
  if (mu0.dim() != mu1.dim()) throw std::invalid_argument("ot_solve_exact: dimension mismatch");
  const Mat c = cost_matrix(mu0, mu1);
  auto fr = solve_transport_flow(c, mu0.weights(), mu1.weights());

  // LP duals (u_i = -p_i, v_j = q_j satisfy u + v <= c), then c-transform
  // polishing: psi_c = (v)^c on mu0 atoms, psi = (psi_c)^c on mu1 atoms. The
  // polished pair is c-concave, feasible, and its dual objective can only
  // improve, so optimality is preserved.
  const Vec v = fr.q;
  Vec psi_c = c_transform_on_atoms(v, c, /*over_columns=*/true);
  Vec psi = c_transform_on_atoms(psi_c, c, /*over_columns=*/false);
  DualPotentials duals = normalize_duals({std::move(psi), std::move(psi_c), false}, mu0, mu1);

  const double primal = (fr.flow.array() * c.array()).sum();
  const double dual_value = mu0.weights().dot(duals.psi_c) + mu1.weights().dot(duals.psi);
  const double gap = std::abs(primal - dual_value);
  if (gap > 1e-9 * std::max(1.0, std::abs(primal)))
    throw OtSolveError("ot_solve_exact: strong duality gap " + std::to_string(gap), gap);

  Coupling plan(std::move(fr.flow), mu0, mu1, std::nullopt);
  return {std::move(plan), std::move(duals), primal, dual_value};
}

Vec c_transform(const Vec& psi, const std::vector<Vec>& atoms,
                const std::vector<Vec>& queries, std::vector<int>* argmin) {
  if (atoms.empty()) throw std::invalid_argument("c_transform: empty atom set");
  if (psi.size() != static_cast<Eigen::Index>(atoms.size()))
    throw std::invalid_argument("c_transform: psi/atom size mismatch");
  bool any_finite = false;
  for (int j = 0; j < psi.size(); ++j) any_finite = any_finite || std::isfinite(psi[j]);
  if (!any_finite) throw std::invalid_argument("c_transform: psi has no finite value");

  Vec out(static_cast<Eigen::Index>(queries.size()));
  if (argmin) argmin->assign(queries.size(), -1);
  for (size_t qi = 0; qi < queries.size(); ++qi) {
    double best = kInf;
    int best_j = -1;
    for (size_t j = 0; j < atoms.size(); ++j) {
      if (psi[static_cast<Eigen::Index>(j)] == kInf) continue;  // excluded atom
      const double val = quad_cost(queries[qi], atoms[j]) - psi[static_cast<Eigen::Index>(j)];
      if (val < best) {
        best = val;
        best_j = static_cast<int>(j);
      }
    }
    out[static_cast<Eigen::Index>(qi)] = best;
    if (argmin) (*argmin)[qi] = best_j;
  }
  return out;
}

double c_superdiff_residual(const DualPotentials& duals, const DiscreteMeasure& mu0,
                            const DiscreteMeasure& mu1, int i, int j) {
  if (i < 0 || i >= mu0.size() || j < 0 || j >= mu1.size())
    throw std::out_of_range("c_superdiff_residual: atom index out of range");
  return quad_cost(mu0.point(i), mu1.point(j)) - duals.psi_c[i] - duals.psi[j];
}

}  // namespace schro
