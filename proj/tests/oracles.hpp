// Test-only reference implementations, kept independent of the library code
// paths they are used to check.
#pragma once

#include <functional>
#include <vector>

#include "schro/measures.hpp"
#include "schro/ot_dual.hpp"
#include "schro/rng.hpp"

namespace schro::oracle {

// Plain-domain alternating projection (multiplicative Sinkhorn scaling) run
// for a fixed number of sweeps; returns the transport plan it converges to.
Mat brute_force_sinkhorn_plan(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1,
                              double epsilon, int sweeps);

// Lattice dynamic program with iterative window refinement for the 1-d tube
// problem: min sum (h_{i+1}-h_i)^2/dt_i over lo_i <= h_i <= hi_i with pinned
// endpoints. Accuracy is driven down to ~1e-9 by the shrinking windows.
double dp_tube_min_energy(const std::vector<double>& grid, const std::vector<double>& lo,
                          const std::vector<double>& hi, double h0, double hM,
                          int lattice_points = 65, int rounds = 64);

// Central finite difference of f along coordinate k.
double finite_diff(const std::function<double(const Vec&)>& f, const Vec& x, int k,
                   double delta = 1e-5);

// Kolmogorov-Smirnov statistic of samples against a CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

double normal_cdf(double z);

// Brute-force two-point rate: min over atom pairs of the three-leg cost
// minus the dual potentials, evaluated directly.
double two_point_rate_brute_force(double s, double t, const Vec& x, const Vec& y,
                                  const DualPotentials& duals, const DiscreteMeasure& mu0,
                                  const DiscreteMeasure& mu1);

// Random instance with exactly unit total weight and distinct atoms.
DiscreteMeasure random_measure(Rng& rng, int atoms, int dim, double box = 1.0);

double wall_seconds();

}  // namespace schro::oracle
