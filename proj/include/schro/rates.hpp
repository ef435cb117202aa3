#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "schro/ot_dual.hpp"
#include "schro/paths.hpp"

namespace schro {

// Endpoints are matched to atoms / listed pairs within this tolerance; the
// potentials are -inf off the supports, so anything further away carries
// infinite rate.
constexpr double kSnapTol = 1e-9;

// Componentwise box, possibly with infinite sides.
struct Box {
  Vec lo, hi;
  bool contains(const Vec& v) const {
    for (int k = 0; k < v.size(); ++k)
      if (v[k] < lo[k] || v[k] > hi[k]) return false;
    return true;
  }
};

// An event on path space: a sup-norm tube |h(t_i) - center(t_i)| <= radius
// (componentwise on the center's grid), an endpoint set e_01^{-1}(C), or a
// two-point set e_st^{-1}(B). C and B are finite pair lists or a pair of
// boxes.
struct EventSet {
  enum class Kind { Tube, Endpoint, TwoPoint };
  Kind kind = Kind::Tube;

  Path center;         // tube
  double radius = 0.0;

  double s = 0.0, t = 1.0;  // two-point times; endpoint events use (0, 1)
  std::vector<std::pair<Vec, Vec>> pairs;
  std::optional<std::pair<Box, Box>> boxes;

  static EventSet tube(Path center, double radius);
  static EventSet endpoint_pairs(std::vector<std::pair<Vec, Vec>> pairs);
  static EventSet endpoint_boxes(Box first, Box second);
  static EventSet two_point_pairs(double s, double t, std::vector<std::pair<Vec, Vec>> pairs);
  static EventSet two_point_boxes(double s, double t, Box first, Box second);

  bool contains(const Path& path) const;
};

enum class RateKind { Jxy, Jmix, I };

// Inputs the rate functionals need: pinned endpoints for J_xy, support pairs
// for J_mix, duals plus atom supports for I.
struct RateContext {
  std::optional<std::pair<Vec, Vec>> pinned;
  std::vector<std::pair<Vec, Vec>> support;
  const DualPotentials* duals = nullptr;
  const DiscreteMeasure* mu0 = nullptr;
  const DiscreteMeasure* mu1 = nullptr;
};

// Hsu rate for a pinned bridge: |h|_H^2 / 2 - c(x, y) if the endpoints match
// (x, y), +inf otherwise.
double rate_J_xy(const Path& path, const Vec& x, const Vec& y);

// Mixture rate: |h|_H^2 / 2 - c(h(0), h(1)) when the endpoint pair lies in
// the listed support, +inf otherwise. Equals min over pairs of rate_J_xy.
double rate_J_mix(const Path& path, const std::vector<std::pair<Vec, Vec>>& support);

// Schroedinger-bridge rate: |h|_H^2 / 2 - psi_c(h(0)) - psi(h(1)) with the
// endpoints snapped to support atoms, +inf outside.
double rate_I(const Path& path, const DualPotentials& duals, const DiscreteMeasure& mu0,
              const DiscreteMeasure& mu1);

// Static rate c(x_i, y_j) - psi_c(x_i) - psi(y_j) by atom index. Equals
// c_superdiff_residual; zero on the optimal plan's support.
double phi_gap(int i, int j, const DualPotentials& duals, const DiscreteMeasure& mu0,
               const DiscreteMeasure& mu1);

// Hopf-Lax semigroup over a finite atom set:
// Q_t(f)(y) = min_i { c(x_i, y)/t + f(x_i) } for t > 0 (entries f_i = +inf
// are excluded); Q_0(f) = f with queries snapped to atoms.
Vec hopf_lax(const Vec& f, const std::vector<Vec>& atoms, double t,
             const std::vector<Vec>& queries);

// Two-point marginal rate I_st(x, y) = c(x,y)/(t-s) - phi_s(x) - psi_t(y)
// with (phi_s, psi_t) = (-Q_s(-psi_c), -Q_{1-t}(-psi)) over the support
// atoms; s = 0 and t = 1 use the raw potentials with atom snapping.
double two_point_rate(double s, double t, const Vec& x, const Vec& y,
                      const DualPotentials& duals, const DiscreteMeasure& mu0,
                      const DiscreteMeasure& mu1);

// Minimum-energy piecewise-linear path through (0, xp), (s, x), (t, y),
// (1, yp); its h_norm_sq / 2 equals c^{0,s}(xp,x) + c^{s,t}(x,y) +
// c^{t,1}(y,yp). The grid must contain s and t as knots.
Path constrained_optimal_path(const Vec& xp, const Vec& x, const Vec& y, const Vec& yp, double s,
                              double t, const std::vector<double>& grid);

struct InfRateResult {
  double value = 0.0;
  std::optional<Path> argmin;  // tube events report the minimizing path
};

// inf over the event of the chosen rate. Tube infima solve the clamped
// quadratic program min sum |dh|^2/dt subject to the componentwise tube
// bounds and pinned endpoints, minimized over admissible endpoint pairs;
// endpoint and two-point events reduce to finite minimizations of phi_gap /
// two_point_rate. Infeasible events return +inf.
InfRateResult inf_rate_over_event(const EventSet& event, RateKind kind, const RateContext& ctx);

// Box-constrained discrete Dirichlet energy minimizer with pinned endpoints
// (the tube QP). Exposed for the tube-probability importance shift and for
// oracle tests. Returns +inf value when the constraints are infeasible.
struct TubeQpResult {
  double energy = 0.0;  // sum |dh|^2/dt at the minimizer
  std::optional<Path> argmin;
};
TubeQpResult min_energy_in_tube(const Path& center, double radius, const Vec& x, const Vec& y);

}  // namespace schro
