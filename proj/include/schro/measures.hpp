#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace schro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Quadratic transport cost |x - y|^2 / 2.
double quad_cost(const Vec& x, const Vec& y);

// Weighted atoms in R^d. Weights are nonnegative and sum to one (1e-12);
// atoms are pairwise distinct. Immutable after construction and safe to
// share across threads.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Vec> points, Vec weights);

  static DiscreteMeasure dirac(const Vec& x);

  // CSV with required header "w,x1,...,xd", one atom per row.
  static DiscreteMeasure from_csv(const std::string& path);
  static DiscreteMeasure from_csv_text(const std::string& text);
  std::string to_csv_text() const;
  void to_csv(const std::string& path) const;

  int size() const { return static_cast<int>(points_.size()); }
  int dim() const { return static_cast<int>(points_.front().size()); }
  const Vec& point(int i) const { return points_[static_cast<size_t>(i)]; }
  double weight(int i) const { return weights_[i]; }
  const std::vector<Vec>& points() const { return points_; }
  const Vec& weights() const { return weights_; }

  // Index of the atom within `tol` of x in sup norm, or -1. Atoms are
  // distinct, so the match is unique for tol below the atom separation.
  int find_atom(const Vec& x, double tol = 1e-9) const;

  // Cumulative weights for sampling.
  const std::vector<double>& cdf() const { return cdf_; }

 private:
  std::vector<Vec> points_;
  Vec weights_;
  std::vector<double> cdf_;
};

// Entry (i, j) = quad_cost(x_i, y_j).
Mat cost_matrix(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1);

}  // namespace schro
