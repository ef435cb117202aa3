#include "schro/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace schro {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool snaps_to(const Vec& a, const Vec& b, double tol = kSnapTol) {
  return a.size() == b.size() && (a - b).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace

EventSet EventSet::tube(Path center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("EventSet: tube radius must be positive");
  EventSet e;
  e.kind = Kind::Tube;
  e.center = std::move(center);
  e.radius = radius;
  return e;
}

EventSet EventSet::endpoint_pairs(std::vector<std::pair<Vec, Vec>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("EventSet: empty endpoint pair list");
  EventSet e;
  e.kind = Kind::Endpoint;
  e.pairs = std::move(pairs);
  return e;
}

EventSet EventSet::endpoint_boxes(Box first, Box second) {
  EventSet e;
  e.kind = Kind::Endpoint;
  e.boxes = std::make_pair(std::move(first), std::move(second));
  return e;
}

EventSet EventSet::two_point_pairs(double s, double t, std::vector<std::pair<Vec, Vec>> pairs) {
  if (!(0.0 <= s && s < t && t <= 1.0))
    throw std::invalid_argument("EventSet: need 0 <= s < t <= 1");
  if (pairs.empty()) throw std::invalid_argument("EventSet: empty two-point pair list");
  EventSet e;
  e.kind = Kind::TwoPoint;
  e.s = s;
  e.t = t;
  e.pairs = std::move(pairs);
  return e;
}

EventSet EventSet::two_point_boxes(double s, double t, Box first, Box second) {
  if (!(0.0 <= s && s < t && t <= 1.0))
    throw std::invalid_argument("EventSet: need 0 <= s < t <= 1");
  EventSet e;
  e.kind = Kind::TwoPoint;
  e.s = s;
  e.t = t;
  e.boxes = std::make_pair(std::move(first), std::move(second));
  return e;
}

bool EventSet::contains(const Path& path) const {
  switch (kind) {
    case Kind::Tube: {
      // ulp slack: clamped minimizers sit exactly on the closed boundary and
      // center +- radius need not be representable
      const double r = radius + 1e-12 * (1.0 + radius);
      for (int i = 0; i < path.knots(); ++i) {
        const Vec c = center.at(path.grid[static_cast<size_t>(i)]);
        if ((path.values.row(i).transpose() - c).lpNorm<Eigen::Infinity>() > r) return false;
      }
      return true;
    }
    case Kind::Endpoint:
    case Kind::TwoPoint: {
      const Vec a = kind == Kind::Endpoint ? path.front() : path.at(s);
      const Vec b = kind == Kind::Endpoint ? path.back() : path.at(t);
      if (boxes) return boxes->first.contains(a) && boxes->second.contains(b);
      for (const auto& [pa, pb] : pairs)
        if (snaps_to(a, pa) && snaps_to(b, pb)) return true;
      return false;
    }
  }
  return false;
}

double rate_J_xy(const Path& path, const Vec& x, const Vec& y) {
  if (!snaps_to(path.front(), x) || !snaps_to(path.back(), y)) return kInf;
  return 0.5 * h_norm_sq(path) - quad_cost(x, y);
}

double rate_J_mix(const Path& path, const std::vector<std::pair<Vec, Vec>>& support) {
  if (support.empty()) throw std::invalid_argument("rate_J_mix: empty support");
  const Vec a = path.front(), b = path.back();
  for (const auto& [x, y] : support)
    if (snaps_to(a, x) && snaps_to(b, y)) return 0.5 * h_norm_sq(path) - quad_cost(a, b);
  return kInf;
}

double rate_I(const Path& path, const DualPotentials& duals, const DiscreteMeasure& mu0,
              const DiscreteMeasure& mu1) {
  const int i = mu0.find_atom(path.front(), kSnapTol);
  const int j = mu1.find_atom(path.back(), kSnapTol);
  if (i < 0 || j < 0) return kInf;
  return 0.5 * h_norm_sq(path) - duals.psi_c[i] - duals.psi[j];
}

double phi_gap(int i, int j, const DualPotentials& duals, const DiscreteMeasure& mu0,
               const DiscreteMeasure& mu1) {
  return c_superdiff_residual(duals, mu0, mu1, i, j);
}

Vec hopf_lax(const Vec& f, const std::vector<Vec>& atoms, double t,
             const std::vector<Vec>& queries) {
  if (atoms.empty()) throw std::invalid_argument("hopf_lax: empty atom set");
  if (f.size() != static_cast<Eigen::Index>(atoms.size()))
    throw std::invalid_argument("hopf_lax: f/atom size mismatch");
  if (t < 0.0) throw std::invalid_argument("hopf_lax: t must be >= 0");
  bool any_finite = false;
  for (int i = 0; i < f.size(); ++i) any_finite = any_finite || f[i] < kInf;
  if (!any_finite) throw std::invalid_argument("hopf_lax: f has no finite value");

  Vec out(static_cast<Eigen::Index>(queries.size()));
  for (size_t q = 0; q < queries.size(); ++q) {
    if (t == 0.0) {
      int hit = -1;
      for (size_t i = 0; i < atoms.size(); ++i)
        if (snaps_to(queries[q], atoms[i])) {
          hit = static_cast<int>(i);
          break;
        }
      if (hit < 0) throw std::invalid_argument("hopf_lax: t = 0 query does not match an atom");
      out[static_cast<Eigen::Index>(q)] = f[hit];
      continue;
    }
    double best = kInf;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (f[static_cast<Eigen::Index>(i)] == kInf) continue;
      best = std::min(best, quad_cost(atoms[i], queries[q]) / t + f[static_cast<Eigen::Index>(i)]);
    }
    out[static_cast<Eigen::Index>(q)] = best;
  }
  return out;
}

double two_point_rate(double s, double t, const Vec& x, const Vec& y,
                      const DualPotentials& duals, const DiscreteMeasure& mu0,
                      const DiscreteMeasure& mu1) {
  if (!(0.0 <= s && s < t && t <= 1.0))
    throw std::invalid_argument("two_point_rate: need 0 <= s < t <= 1");

  // phi_s(x) = -Q_s(-psi_c)(x) = max_i { psi_c_i - c(x_i, x)/s }; at s = 0
  // the raw potential applies and x must be an atom.
  double phi_s;
  if (s == 0.0) {
    const int i = mu0.find_atom(x, kSnapTol);
    phi_s = i < 0 ? -kInf : duals.psi_c[i];
  } else {
    phi_s = -kInf;
    for (int i = 0; i < mu0.size(); ++i)
      phi_s = std::max(phi_s, duals.psi_c[i] - quad_cost(mu0.point(i), x) / s);
  }

  double psi_t;
  if (t == 1.0) {
    const int j = mu1.find_atom(y, kSnapTol);
    psi_t = j < 0 ? -kInf : duals.psi[j];
  } else {
    psi_t = -kInf;
    for (int j = 0; j < mu1.size(); ++j)
      psi_t = std::max(psi_t, duals.psi[j] - quad_cost(y, mu1.point(j)) / (1.0 - t));
  }

  if (phi_s == -kInf || psi_t == -kInf) return kInf;
  return quad_cost(x, y) / (t - s) - phi_s - psi_t;
}

Path constrained_optimal_path(const Vec& xp, const Vec& x, const Vec& y, const Vec& yp, double s,
                              double t, const std::vector<double>& grid) {
  if (!(0.0 <= s && s < t && t <= 1.0))
    throw std::invalid_argument("constrained_optimal_path: need 0 <= s < t <= 1");
  if (s == 0.0 && !snaps_to(xp, x, 1e-12))
    throw std::invalid_argument("constrained_optimal_path: s = 0 requires xp = x");
  if (t == 1.0 && !snaps_to(yp, y, 1e-12))
    throw std::invalid_argument("constrained_optimal_path: t = 1 requires yp = y");

  int ks = -1, kt = -1;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - s) <= 1e-12) ks = static_cast<int>(i);
    if (std::abs(grid[i] - t) <= 1e-12) kt = static_cast<int>(i);
  }
  if (ks < 0 || kt < 0)
    throw std::invalid_argument("constrained_optimal_path: grid must contain s and t as knots");

  const int d = static_cast<int>(x.size());
  Mat values(static_cast<Eigen::Index>(grid.size()), d);
  for (size_t i = 0; i < grid.size(); ++i) {
    const double u = grid[i];
    Vec v;
    if (u <= s)
      v = s == 0.0 ? x : Vec(xp + (u / s) * (x - xp));
    else if (u <= t)
      v = x + ((u - s) / (t - s)) * (y - x);
    else
      v = y + ((u - t) / (1.0 - t)) * (yp - y);
    values.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  values.row(0) = (s == 0.0 ? x : xp).transpose();
  values.row(ks) = x.transpose();
  values.row(kt) = y.transpose();
  values.row(values.rows() - 1) = (t == 1.0 ? y : yp).transpose();
  return Path(grid, std::move(values));
}

namespace {

// --- Tube QP -------------------------------------------------------------
//
// Per coordinate the problem is min sum_i (h_{i+1} - h_i)^2 / dt_i over box
// constraints with pinned endpoints. Projected coordinate descent reaches
// stationarity, then an active-set pass reconstructs the exact minimizer:
// between consecutive clamped/pinned nodes the optimum is linear in t.

struct ScalarQp {
  const std::vector<double>* grid;
  std::vector<double> lo, hi;  // interior bounds, indices 1..M-1
  double h0, hM;
};

double scalar_energy(const ScalarQp& qp, const std::vector<double>& h) {
  double e = 0.0;
  for (size_t i = 0; i + 1 < h.size(); ++i) {
    const double dt = (*qp.grid)[i + 1] - (*qp.grid)[i];
    e += (h[i + 1] - h[i]) * (h[i + 1] - h[i]) / dt;
  }
  return e;
}

// Gradient of the energy at interior node i.
double node_gradient(const ScalarQp& qp, const std::vector<double>& h, size_t i) {
  const double dtl = (*qp.grid)[i] - (*qp.grid)[i - 1];
  const double dtr = (*qp.grid)[i + 1] - (*qp.grid)[i];
  return 2.0 * ((h[i] - h[i - 1]) / dtl - (h[i + 1] - h[i]) / dtr);
}

// Returns energy, writes the minimizer into h. Assumes feasible endpoints.
double solve_scalar_qp(const ScalarQp& qp, std::vector<double>& h) {
  const auto& grid = *qp.grid;
  const size_t M = grid.size() - 1;
  h.assign(M + 1, 0.0);
  h[0] = qp.h0;
  h[M] = qp.hM;
  for (size_t i = 1; i < M; ++i) {
    const double lin = qp.h0 + (qp.hM - qp.h0) * (grid[i] - grid[0]) / (grid[M] - grid[0]);
    h[i] = std::clamp(lin, qp.lo[i], qp.hi[i]);
  }
  if (M == 1) return scalar_energy(qp, h);

  // Projected coordinate descent to stationarity 1e-10.
  const int max_sweeps = 2000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (size_t i = 1; i < M; ++i) {
      const double wl = 1.0 / (grid[i] - grid[i - 1]);
      const double wr = 1.0 / (grid[i + 1] - grid[i]);
      h[i] = std::clamp((wl * h[i - 1] + wr * h[i + 1]) / (wl + wr), qp.lo[i], qp.hi[i]);
    }
    double station = 0.0;
    for (size_t i = 1; i < M; ++i) {
      const double g = node_gradient(qp, h, i);
      double viol = std::abs(g);
      if (h[i] <= qp.lo[i]) viol = std::max(0.0, -g);
      if (h[i] >= qp.hi[i]) viol = std::max(0.0, g);
      station = std::max(station, viol);
    }
    if (station <= 1e-10) break;
  }

  // Active-set polish. States: 0 free, 1 at lo, 2 at hi. Seed from the CD
  // iterate, then exchange constraints until the KKT conditions hold.
  std::vector<int> state(M + 1, 0);
  const double bind_tol = 1e-9;
  for (size_t i = 1; i < M; ++i) {
    if (h[i] - qp.lo[i] <= bind_tol) state[i] = 1;
    else if (qp.hi[i] - h[i] <= bind_tol) state[i] = 2;
  }
  std::vector<double> cand(M + 1);
  const int max_passes = static_cast<int>(8 * M + 64);
  for (int pass = 0; pass < max_passes; ++pass) {
    // Reconstruct: linear in t between consecutive anchors.
    cand[0] = qp.h0;
    cand[M] = qp.hM;
    size_t prev = 0;
    for (size_t i = 1; i <= M; ++i) {
      const bool anchored = i == M || state[i] != 0;
      if (!anchored) continue;
      if (i < M) cand[i] = state[i] == 1 ? qp.lo[i] : qp.hi[i];
      for (size_t k = prev + 1; k < i; ++k) {
        const double lambda = (grid[k] - grid[prev]) / (grid[i] - grid[prev]);
        cand[k] = cand[prev] + lambda * (cand[i] - cand[prev]);
      }
      prev = i;
    }

    // Primal: clamp the single worst violated free node.
    size_t worst = 0;
    double worst_gap = 1e-14;
    int worst_side = 0;
    for (size_t i = 1; i < M; ++i) {
      if (state[i] != 0) continue;
      if (qp.lo[i] - cand[i] > worst_gap) {
        worst_gap = qp.lo[i] - cand[i];
        worst = i;
        worst_side = 1;
      }
      if (cand[i] - qp.hi[i] > worst_gap) {
        worst_gap = cand[i] - qp.hi[i];
        worst = i;
        worst_side = 2;
      }
    }
    if (worst_side != 0) {
      state[worst] = worst_side;
      continue;
    }

    // Dual: release the single worst wrong-signed multiplier.
    worst_gap = 1e-12;
    worst_side = 0;
    for (size_t i = 1; i < M; ++i) {
      if (state[i] == 0) continue;
      const double g = node_gradient(qp, cand, i);
      const double viol = state[i] == 1 ? -g : g;  // need g >= 0 at lo, g <= 0 at hi
      if (viol > worst_gap) {
        worst_gap = viol;
        worst = i;
        worst_side = state[i];
      }
    }
    if (worst_side != 0) {
      state[worst] = 0;
      continue;
    }

    h = cand;
    break;
  }
  return scalar_energy(qp, h);
}

}  // namespace

TubeQpResult min_energy_in_tube(const Path& center, double radius, const Vec& x, const Vec& y) {
  const int d = center.dim();
  if (x.size() != d || y.size() != d)
    throw std::invalid_argument("min_energy_in_tube: dimension mismatch");
  const auto& grid = center.grid;
  const size_t M = grid.size() - 1;

  const double slack = 1e-12;
  for (int k = 0; k < d; ++k) {
    if (std::abs(x[k] - center.values(0, k)) > radius + slack ||
        std::abs(y[k] - center.values(static_cast<Eigen::Index>(M), k)) > radius + slack)
      return {kInf, std::nullopt};
  }

  Mat argmin(static_cast<Eigen::Index>(M + 1), d);
  double energy = 0.0;
  std::vector<double> h;
  for (int k = 0; k < d; ++k) {
    ScalarQp qp;
    qp.grid = &grid;
    qp.lo.assign(M + 1, 0.0);
    qp.hi.assign(M + 1, 0.0);
    for (size_t i = 0; i <= M; ++i) {
      qp.lo[i] = center.values(static_cast<Eigen::Index>(i), k) - radius;
      qp.hi[i] = center.values(static_cast<Eigen::Index>(i), k) + radius;
    }
    qp.h0 = x[k];
    qp.hM = y[k];
    energy += solve_scalar_qp(qp, h);
    for (size_t i = 0; i <= M; ++i) argmin(static_cast<Eigen::Index>(i), k) = h[i];
  }
  return {energy, Path(grid, std::move(argmin))};
}

namespace {

// Candidate endpoint pairs and the additive potential term per rate kind.
struct EndpointCandidate {
  Vec x, y;
  double offset;  // subtracted from the energy/2 (c(x,y), or psi_c + psi)
};

std::vector<EndpointCandidate> endpoint_candidates(RateKind kind, const RateContext& ctx) {
  std::vector<EndpointCandidate> cands;
  switch (kind) {
    case RateKind::Jxy: {
      if (!ctx.pinned) throw std::invalid_argument("inf_rate: J_xy needs pinned endpoints");
      cands.push_back({ctx.pinned->first, ctx.pinned->second,
                       quad_cost(ctx.pinned->first, ctx.pinned->second)});
      break;
    }
    case RateKind::Jmix: {
      if (ctx.support.empty()) throw std::invalid_argument("inf_rate: J_mix needs support pairs");
      for (const auto& [x, y] : ctx.support) cands.push_back({x, y, quad_cost(x, y)});
      break;
    }
    case RateKind::I: {
      if (!ctx.duals || !ctx.mu0 || !ctx.mu1)
        throw std::invalid_argument("inf_rate: rate I needs duals and supports");
      for (int i = 0; i < ctx.mu0->size(); ++i)
        for (int j = 0; j < ctx.mu1->size(); ++j)
          cands.push_back({ctx.mu0->point(i), ctx.mu1->point(j),
                           ctx.duals->psi_c[i] + ctx.duals->psi[j]});
      break;
    }
  }
  return cands;
}

// min over a box pair of c(a, u)/s0 + c(u, v)/s1 + c(v, b)/s2 where a (resp.
// b) is dropped when s0 (resp. s2) is zero and u (resp. v) is then pinned to
// it. Coordinates decouple; each is a tiny 2-variable clamped QP solved by
// coordinate descent.
double boxed_three_leg_cost(const Vec& a, const Vec& b, double s0, double s1, double s2,
                            const Box& bu, const Box& bv, Vec* u_out = nullptr,
                            Vec* v_out = nullptr) {
  const int d = static_cast<int>(a.size());
  const double alpha = s0 > 0.0 ? 0.5 / s0 : 0.0;
  const double beta = 0.5 / s1;
  const double gamma = s2 > 0.0 ? 0.5 / s2 : 0.0;
  double total = 0.0;
  Vec u(d), v(d);
  for (int k = 0; k < d; ++k) {
    double uk = s0 == 0.0 ? a[k] : std::clamp(a[k], bu.lo[k], bu.hi[k]);
    double vk = s2 == 0.0 ? b[k] : std::clamp(b[k], bv.lo[k], bv.hi[k]);
    if (s0 == 0.0 && (uk < bu.lo[k] - 1e-12 || uk > bu.hi[k] + 1e-12)) return kInf;
    if (s2 == 0.0 && (vk < bv.lo[k] - 1e-12 || vk > bv.hi[k] + 1e-12)) return kInf;
    for (int sweep = 0; sweep < 100000; ++sweep) {
      const double u_prev = uk, v_prev = vk;
      if (s0 > 0.0) uk = std::clamp((alpha * a[k] + beta * vk) / (alpha + beta), bu.lo[k], bu.hi[k]);
      if (s2 > 0.0) vk = std::clamp((beta * uk + gamma * b[k]) / (beta + gamma), bv.lo[k], bv.hi[k]);
      if (std::abs(uk - u_prev) + std::abs(vk - v_prev) <= 1e-15) break;
    }
    total += alpha * (uk - a[k]) * (uk - a[k]) + beta * (uk - vk) * (uk - vk) +
             gamma * (vk - b[k]) * (vk - b[k]);
    u[k] = uk;
    v[k] = vk;
  }
  if (u_out) *u_out = u;
  if (v_out) *v_out = v;
  return total;
}

InfRateResult inf_rate_tube(const EventSet& event, RateKind kind, const RateContext& ctx) {
  InfRateResult best{kInf, std::nullopt};
  for (const auto& cand : endpoint_candidates(kind, ctx)) {
    const TubeQpResult qp = min_energy_in_tube(event.center, event.radius, cand.x, cand.y);
    if (qp.energy == kInf) continue;
    const double value = 0.5 * qp.energy - cand.offset;
    if (value < best.value) best = {value, qp.argmin};
  }
  return best;
}

InfRateResult inf_rate_endpoint(const EventSet& event, RateKind kind, const RateContext& ctx) {
  auto admits = [&](const Vec& x, const Vec& y) {
    if (event.boxes) return event.boxes->first.contains(x) && event.boxes->second.contains(y);
    for (const auto& [px, py] : event.pairs)
      if (snaps_to(x, px) && snaps_to(y, py)) return true;
    return false;
  };
  InfRateResult best{kInf, std::nullopt};
  for (const auto& cand : endpoint_candidates(kind, ctx)) {
    if (!admits(cand.x, cand.y)) continue;
    // The unconstrained minimizer over paths pinned at (x, y) is the
    // geodesic, whose half-action cancels c(x, y) exactly.
    const double value = quad_cost(cand.x, cand.y) - cand.offset;
    if (value < best.value) {
      best.value = value;
      best.argmin = geodesic(cand.x, cand.y, uniform_grid(200));
    }
  }
  return best;
}

InfRateResult inf_rate_two_point(const EventSet& event, RateKind kind, const RateContext& ctx) {
  const double s = event.s, t = event.t;
  InfRateResult best{kInf, std::nullopt};
  for (const auto& cand : endpoint_candidates(kind, ctx)) {
    double val = kInf;
    Vec u, v;
    if (event.boxes) {
      val = boxed_three_leg_cost(cand.x, cand.y, s, t - s, 1.0 - t, event.boxes->first,
                                 event.boxes->second, &u, &v);
    } else {
      for (const auto& [pu, pv] : event.pairs) {
        if (s == 0.0 && !snaps_to(pu, cand.x)) continue;
        if (t == 1.0 && !snaps_to(pv, cand.y)) continue;
        const double leg0 = s > 0.0 ? quad_cost(cand.x, pu) / s : 0.0;
        const double leg2 = t < 1.0 ? quad_cost(pv, cand.y) / (1.0 - t) : 0.0;
        const double total = leg0 + quad_cost(pu, pv) / (t - s) + leg2;
        if (total < val) {
          val = total;
          u = pu;
          v = pv;
        }
      }
    }
    if (val == kInf) continue;
    const double value = val - cand.offset;
    if (value < best.value) {
      best.value = value;
      // Grid with s and t inserted so the optimal three-piece path is exact.
      std::vector<double> grid = uniform_grid(200);
      for (double knot : {s, t}) {
        bool present = false;
        for (double g : grid) present = present || std::abs(g - knot) <= 1e-12;
        if (!present) grid.insert(std::upper_bound(grid.begin(), grid.end(), knot), knot);
      }
      const Vec xp = s == 0.0 ? u : cand.x;
      const Vec yp = t == 1.0 ? v : cand.y;
      best.argmin = constrained_optimal_path(xp, u, v, yp, s, t, grid);
    }
  }
  return best;
}

}  // namespace

InfRateResult inf_rate_over_event(const EventSet& event, RateKind kind, const RateContext& ctx) {
  switch (event.kind) {
    case EventSet::Kind::Tube:
      return inf_rate_tube(event, kind, ctx);
    case EventSet::Kind::Endpoint:
      return inf_rate_endpoint(event, kind, ctx);
    case EventSet::Kind::TwoPoint:
      return inf_rate_two_point(event, kind, ctx);
  }
  throw std::logic_error("inf_rate_over_event: unknown event kind");
}

}  // namespace schro
