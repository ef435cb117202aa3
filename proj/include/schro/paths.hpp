#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schro/eot.hpp"
#include "schro/measures.hpp"
#include "schro/rng.hpp"

namespace schro {

// Piecewise-linear path on a time grid t_0 = 0 < ... < t_M = 1. Row i of
// `values` is the position at t_i; in between the path is linear.
struct Path {
  std::vector<double> grid;
  Mat values;  // (M+1) x d

  Path() = default;
  Path(std::vector<double> grid, Mat values);

  int knots() const { return static_cast<int>(grid.size()); }
  int dim() const { return static_cast<int>(values.cols()); }
  Vec front() const { return values.row(0); }
  Vec back() const { return values.row(values.rows() - 1); }

  // Linear interpolation at any t in [0, 1].
  Vec at(double t) const;

  static Path from_csv_text(const std::string& text);
  static Path from_csv(const std::string& path);
  std::string to_csv_text() const;
};

std::vector<double> uniform_grid(int intervals);

// sigma^{xy}(t) = (1-t) x + t y evaluated on the grid.
Path geodesic(const Vec& x, const Vec& y, const std::vector<double>& grid);

// Exact path action sum_i |dh_i|^2 / dt_i = int |h'|^2 dt for piecewise
// linear h; zero iff the path is constant.
double h_norm_sq(const Path& path);

// H inner product sum_i (dg_i . dh_i) / dt_i; grids must match.
double h_inner(const Path& g, const Path& h);

// Exact finite-dimensional Brownian bridge law on the grid via the
// sequential conditional Gaussian recursion; endpoints are bit-exact x and
// y, and eps = 0 returns the geodesic.
Path sample_brownian_bridge(const Vec& x, const Vec& y, double epsilon,
                            const std::vector<double>& grid, Rng& rng);

// Bridge ensemble on a shared grid; `weights` are present for Langevin
// reweighting and are kept raw alongside their normalizer.
struct PathEnsemble {
  std::vector<double> grid;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<Mat> paths;  // each (M+1) x d
  std::optional<Vec> weights;
  double weight_normalizer = 0.0;  // sum of raw weights when present

  Path path(int k) const { return Path(grid, paths[static_cast<size_t>(k)]); }
  int size() const { return static_cast<int>(paths.size()); }

  std::string to_csv_text() const;
  void to_csv(const std::string& file) const;
  static PathEnsemble from_csv_text(const std::string& text);
};

// Draws an atom pair from the plan, then a Brownian bridge between the two
// atoms. Deterministic in (seed, grid, n) and independent of worker count.
PathEnsemble sample_schrodinger_bridge(const Coupling& plan, double epsilon,
                                       const std::vector<double>& grid, std::int64_t n,
                                       std::uint64_t seed);

// min over positive-mass pairs (x, y) of sup_t |path(t) - sigma^{xy}(t)| on
// the path's grid.
double support_distance(const Path& path, const Coupling& plan);

}  // namespace schro
