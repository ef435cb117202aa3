#include "schro/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "schro/io.hpp"

namespace schro {

double quad_cost(const Vec& x, const Vec& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("quad_cost: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  return 0.5 * (x - y).squaredNorm();
}

DiscreteMeasure::DiscreteMeasure(std::vector<Vec> points, Vec weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw std::invalid_argument("DiscreteMeasure: no atoms");
  if (static_cast<int>(points_.size()) != weights_.size())
    throw std::invalid_argument("DiscreteMeasure: points/weights size mismatch");

  const auto d = points_.front().size();
  if (d < 1) throw std::invalid_argument("DiscreteMeasure: zero-dimensional atom");
  for (const auto& p : points_) {
    if (p.size() != d) throw std::invalid_argument("DiscreteMeasure: mixed atom dimensions");
    if (!p.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite atom");
  }

  double total = 0.0;
  for (int i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0))
      throw std::invalid_argument("DiscreteMeasure: negative or NaN weight at atom " +
                                  std::to_string(i));
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("DiscreteMeasure: weights sum to " + format_double(total) +
                                ", expected 1 within 1e-12");

  // Duplicate atoms would make couplings ill-posed; reject them outright.
  std::vector<int> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec& pa = points_[static_cast<size_t>(a)];
    const Vec& pb = points_[static_cast<size_t>(b)];
    for (int k = 0; k < pa.size(); ++k) {
      if (pa[k] != pb[k]) return pa[k] < pb[k];
    }
    return false;
  });
  for (size_t i = 1; i < order.size(); ++i) {
    if (points_[static_cast<size_t>(order[i - 1])] == points_[static_cast<size_t>(order[i])])
      throw std::invalid_argument("DiscreteMeasure: duplicate atom");
  }

  cdf_.resize(points_.size());
  double acc = 0.0;
  for (size_t i = 0; i < points_.size(); ++i) {
    acc += weights_[static_cast<int>(i)];
    cdf_[i] = acc;
  }
}

DiscreteMeasure DiscreteMeasure::dirac(const Vec& x) {
  Vec w(1);
  w[0] = 1.0;
  return DiscreteMeasure({x}, w);
}

int DiscreteMeasure::find_atom(const Vec& x, double tol) const {
  if (x.size() != dim()) return -1;
  for (int i = 0; i < size(); ++i) {
    if ((points_[static_cast<size_t>(i)] - x).lpNorm<Eigen::Infinity>() <= tol) return i;
  }
  return -1;
}

DiscreteMeasure DiscreteMeasure::from_csv(const std::string& path) {
  return from_csv_text(read_file(path));
}

DiscreteMeasure DiscreteMeasure::from_csv_text(const std::string& text) {
  const CsvTable table = parse_csv(text);
  if (table.rows.size() < 2) throw std::invalid_argument("measure CSV: need header plus atoms");
  const auto& header = table.rows.front();
  if (header.empty() || header[0] != "w")
    throw std::invalid_argument("measure CSV: header must start with 'w'");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw std::invalid_argument("measure CSV: no coordinate columns");
  for (int k = 0; k < d; ++k) {
    if (header[static_cast<size_t>(k) + 1] != "x" + std::to_string(k + 1))
      throw std::invalid_argument("measure CSV: header must be w,x1,...,xd");
  }

  std::vector<Vec> points;
  Vec weights(static_cast<int>(table.rows.size()) - 1);
  for (size_t r = 1; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != d + 1)
      throw std::invalid_argument("measure CSV: row " + std::to_string(r) + " has wrong arity");
    weights[static_cast<int>(r) - 1] = std::stod(row[0]);
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = std::stod(row[static_cast<size_t>(k) + 1]);
    points.push_back(std::move(p));
  }
  return DiscreteMeasure(std::move(points), std::move(weights));
}

std::string DiscreteMeasure::to_csv_text() const {
  std::ostringstream out;
  out << "w";
  for (int k = 0; k < dim(); ++k) out << ",x" << (k + 1);
  out << "\n";
  for (int i = 0; i < size(); ++i) {
    out << format_double(weights_[i]);
    for (int k = 0; k < dim(); ++k) out << "," << format_double(points_[static_cast<size_t>(i)][k]);
    out << "\n";
  }
  return out.str();
}

void DiscreteMeasure::to_csv(const std::string& path) const {
  write_file_atomic(path, to_csv_text());
}

Mat cost_matrix(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1) {
  if (mu0.dim() != mu1.dim())
    throw std::invalid_argument("cost_matrix: dimension mismatch");
  Mat c(mu0.size(), mu1.size());
  for (int i = 0; i < mu0.size(); ++i)
    for (int j = 0; j < mu1.size(); ++j) c(i, j) = quad_cost(mu0.point(i), mu1.point(j));
  return c;
}

}  // namespace schro
