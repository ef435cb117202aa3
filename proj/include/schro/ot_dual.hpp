#pragma once

#include <stdexcept>
#include <vector>

#include "schro/eot.hpp"
#include "schro/measures.hpp"

namespace schro {

// Zero-noise OT duals: psi on mu1 atoms (OT potential from mu1 to mu0) and
// its c-transform psi_c on mu0 atoms. Feasible, psi_c(x) + psi(y) <= c(x,y),
// with equality on the optimal plan's support; when `normalized`,
// int psi_c dmu0 = int psi dmu1.
struct DualPotentials {
  Vec psi;
  Vec psi_c;
  bool normalized = false;
};

struct OtSolveError : std::runtime_error {
  OtSolveError(const std::string& msg, double residual_)
      : std::runtime_error(msg), residual(residual_) {}
  double residual;
};

struct ExactOtResult {
  Coupling plan;
  DualPotentials duals;
  double primal = 0.0;
  double dual = 0.0;
};

// Exact quadratic-cost OT on discrete marginals via successive shortest
// paths on the bipartite transport graph. LP duals are polished by a double
// c-transform (discrete instances generically have non-unique duals) and
// normalized. Strong duality is certified to 1e-9 or an OtSolveError is
// thrown.
ExactOtResult ot_solve_exact(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1);

// c-transform of psi given on `atoms`: result(x) = min_y { c(x,y) - psi(y) },
// ties broken toward the lowest atom index (reported via `argmin` when
// non-null). Entries of psi equal to +inf are treated as excluded atoms.
Vec c_transform(const Vec& psi, const std::vector<Vec>& atoms, const std::vector<Vec>& queries,
                std::vector<int>* argmin = nullptr);

// c(x_i, y_j) - psi_c(x_i) - psi(y_j); >= -1e-10 by feasibility, and 0 (to
// 1e-9) on positive-mass pairs of the optimal plan.
double c_superdiff_residual(const DualPotentials& duals, const DiscreteMeasure& mu0,
                            const DiscreteMeasure& mu1, int i, int j);

// Shifts (psi_c, psi) so the two integrals match; no-op when already flagged.
DualPotentials normalize_duals(const DualPotentials& duals, const DiscreteMeasure& mu0,
                               const DiscreteMeasure& mu1);

}  // namespace schro
