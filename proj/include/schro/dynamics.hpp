#pragma once

#include <cstdint>
#include <string>

#include "schro/eot.hpp"
#include "schro/measures.hpp"
#include "schro/paths.hpp"

namespace schro {

// Data for the Schroedinger-bridge SDE dX = b_eps dt + sqrt(eps) dW with
// X(0) ~ mu0: the tilted terminal potential psi (EOT psi on the mu1 atoms)
// determines the drift through the atom-sum form of h_eps.
struct FollmerModel {
  DiscreteMeasure mu0;
  DiscreteMeasure mu1;
  double epsilon = 0.0;
  Vec psi;

  FollmerModel(DiscreteMeasure mu0, DiscreteMeasure mu1, double epsilon, Vec psi);
};

// Convenience: solve the Schroedinger system first.
FollmerModel make_follmer_model(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                                double epsilon, double tol = 1e-10, int max_iter = 200000);

// Bounded smooth potential families for the Langevin reference measure.
struct PotentialField {
  enum class Family { Zero, Cosine, GaussianBump };
  Family family = Family::Zero;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  Vec center;
  double width = 1.0;

  static PotentialField zero();
  static PotentialField cosine(double amplitude, double omega, double phase = 0.0);
  static PotentialField gaussian_bump(double amplitude, Vec center, double width);
  // "zero", "cosine:A,omega[,phase]", "gaussian-bump:A,width,c1[,c2,...]".
  static PotentialField parse(const std::string& spec);

  double value(const Vec& x) const;
  Vec grad(const Vec& x) const;
  double laplacian(const Vec& x) const;
};

// Drift b_eps(t, y) = sum_j p_j(t, y) (y_j - y) / (1 - t) with softmax
// weights p_j proportional to w_j exp{psi_j/eps - |y - y_j|^2 / (2 eps (1-t))};
// this is eps * grad log h_eps for a discrete mu1, computed with max
// subtraction. Throws once t passes 1 - t_clamp where the drift blows up.
Vec follmer_drift(const FollmerModel& model, double t, const Vec& y, double t_clamp = 1e-9);

// Softmax atom weights p_j(t, y); the terminal pinning rule samples from
// these at the clamp time.
Vec follmer_atom_posterior(const FollmerModel& model, double t, const Vec& y);

// Explicit Euler-Maruyama on a uniform grid with `steps` intervals. The
// drift is frozen per step; past the clamp time 1 - 10/steps one terminal
// atom is drawn from the posterior and the path is pinned linearly onto it,
// so trajectories end exactly on mu1 atoms. Deterministic given the seed.
PathEnsemble euler_maruyama(const FollmerModel& model, std::int64_t n, int steps,
                            std::uint64_t seed);

// Unnormalized Langevin-bridge density against the Brownian bridge:
// exp{-(eps/2) int_0^1 (|grad V|^2 - Lap V)(path(t)) dt} with trapezoidal
// quadrature on the path's grid. Callers self-normalize.
double langevin_weight(const Path& path, const PotentialField& V, double epsilon);

struct LangevinCostResult {
  double value = 0.0;
  double se = 0.0;
  bool high_variance = false;  // SE > value / 10
};

// Monte Carlo estimate of c_eps(x, y) = -eps log p_eps(x, y) via the pinned
// path identity p_eps = q_eps e^{V(x) - V(y)} E_bridge[exp{(eps/2) int
// (Lap V - |grad V|^2)}] with q_eps the Gaussian kernel.
LangevinCostResult langevin_cost(const Vec& x, const Vec& y, const PotentialField& V,
                                 double epsilon, std::int64_t n, std::uint64_t seed,
                                 int grid_intervals = 200);

struct LangevinBridgeResult {
  PathEnsemble ensemble;  // weights present, raw, with recorded normalizer
  double ess = 0.0;
  bool low_ess = false;  // ESS < n / 100
};

// Brownian bridges x -> y carrying self-normalized langevin_weight weights.
LangevinBridgeResult sample_langevin_bridge(const Vec& x, const Vec& y, const PotentialField& V,
                                            double epsilon, const std::vector<double>& grid,
                                            std::int64_t n, std::uint64_t seed);

}  // namespace schro
