#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "schro/measures.hpp"

namespace schro {

// Entropic OT potentials (phi on mu0 atoms, psi on mu1 atoms) at noise level
// epsilon. A solved pair makes both integral identities
//   int exp{(phi(x) + psi(y) - c(x,y)) / eps} dmu1(y) = 1   at every mu0 atom,
//   int exp{(phi(x) + psi(y) - c(x,y)) / eps} dmu0(x) = 1   at every mu1 atom
// hold with log-residual below the solver tolerance.
struct PotentialPair {
  Vec phi;
  Vec psi;
  double epsilon = 0.0;
};

// Joint plan on the product of two atom sets. Row sums reproduce the source
// weights and column sums the target weights within 1e-8; epsilon is absent
// for exact (zero-noise) plans.
struct Coupling {
  Mat plan;
  DiscreteMeasure source;
  DiscreteMeasure target;
  std::optional<double> epsilon;

  Coupling(Mat plan, DiscreteMeasure source, DiscreteMeasure target,
           std::optional<double> epsilon);

  // Atom-index pairs carrying positive mass.
  std::vector<std::pair<int, int>> support_pairs(double threshold = 1e-15) const;
};

struct SinkhornError : std::runtime_error {
  SinkhornError(const std::string& msg, double residual_, int iters_)
      : std::runtime_error(msg), residual(residual_), iters(iters_) {}
  double residual;
  int iters;
};

struct SinkhornOptions {
  double tol = 1e-10;
  int max_iter = 200000;
  const PotentialPair* warm_start = nullptr;  // shapes must match; epsilon may differ
};

struct SinkhornResult {
  PotentialPair pot;
  double residual = 0.0;  // max log-residual over both identities and all atoms
  int iters = 0;
};

// Log-residuals of the two Schroedinger-system identities, one value per atom.
struct SchrodingerResiduals {
  Vec r0;  // per mu0 atom
  Vec r1;  // per mu1 atom
  double max() const;
};
SchrodingerResiduals schrodinger_residuals(const PotentialPair& pot, const DiscreteMeasure& mu0,
                                           const DiscreteMeasure& mu1);

// Log-domain Sinkhorn fixed point of the Schroedinger system. Throws
// SinkhornError on non-convergence, std::invalid_argument for eps <= 0 or
// tol <= 0.
SinkhornResult sinkhorn(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double epsilon,
                        const SinkhornOptions& opts = {});
SinkhornResult sinkhorn(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double epsilon,
                        double tol, int max_iter);

// Warm-started solves along a strictly decreasing epsilon schedule. Extra
// intermediate solves keep each warm start close when consecutive ratios are
// large; only the requested epsilons are returned.
std::vector<SinkhornResult> sinkhorn_schedule(const DiscreteMeasure& mu0,
                                              const DiscreteMeasure& mu1,
                                              const std::vector<double>& eps_schedule,
                                              const SinkhornOptions& opts = {});

// plan(i,j) = w_i v_j exp{(phi_i + psi_j - c_ij) / eps}. Verifies the pair is
// solved to `residual_tol` first.
Coupling eot_plan(const PotentialPair& pot, const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                  double residual_tol = 1e-8);

// Shifts to the normalization int phi dmu0 = int psi dmu1; the plan is
// invariant under this shift.
PotentialPair normalize_potentials(const PotentialPair& pot, const DiscreteMeasure& mu0,
                                   const DiscreteMeasure& mu1);

struct DualPotentials;  // ot_dual.hpp

struct ConvergenceRow {
  double epsilon;
  double phi_gap;  // sup |phi_eps - psi^c| after normalization
  double psi_gap;  // sup |psi_eps - psi|
};

// Normalized sup-norm gaps between EOT potentials and the zero-noise OT
// potentials, one row per schedule entry.
std::vector<ConvergenceRow> potential_convergence_curve(const DiscreteMeasure& mu0,
                                                        const DiscreteMeasure& mu1,
                                                        const std::vector<double>& eps_schedule,
                                                        const DualPotentials& duals,
                                                        const SinkhornOptions& opts = {});

}  // namespace schro
