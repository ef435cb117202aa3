#include "schro/paths.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "schro/io.hpp"
#include "schro/parallel.hpp"

namespace schro {

Path::Path(std::vector<double> grid_, Mat values_)
    : grid(std::move(grid_)), values(std::move(values_)) {
  if (grid.size() < 2) throw std::invalid_argument("Path: need at least two knots");
  if (grid.front() != 0.0 || grid.back() != 1.0)
    throw std::invalid_argument("Path: grid must start at 0 and end at 1");
  for (size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("Path: grid must be strictly increasing");
  if (values.rows() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument("Path: values/grid size mismatch");
  if (values.cols() < 1) throw std::invalid_argument("Path: zero-dimensional values");
  if (!values.allFinite()) throw std::invalid_argument("Path: non-finite values");
}

Vec Path::at(double t) const {
  if (t <= 0.0) return values.row(0);
  if (t >= 1.0) return values.row(values.rows() - 1);
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const int hi = static_cast<int>(it - grid.begin());
  const int lo = hi - 1;
  const double lambda = (t - grid[static_cast<size_t>(lo)]) /
                        (grid[static_cast<size_t>(hi)] - grid[static_cast<size_t>(lo)]);
  return (1.0 - lambda) * values.row(lo) + lambda * values.row(hi);
}

std::vector<double> uniform_grid(int intervals) {
  if (intervals < 1) throw std::invalid_argument("uniform_grid: need at least one interval");
  std::vector<double> g(static_cast<size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) g[static_cast<size_t>(i)] = static_cast<double>(i) / intervals;
  g.front() = 0.0;
  g.back() = 1.0;
  return g;
}

Path geodesic(const Vec& x, const Vec& y, const std::vector<double>& grid) {
  if (x.size() != y.size()) throw std::invalid_argument("geodesic: dimension mismatch");
  Mat values(static_cast<Eigen::Index>(grid.size()), x.size());
  for (size_t i = 0; i < grid.size(); ++i)
    values.row(static_cast<Eigen::Index>(i)) = (1.0 - grid[i]) * x.transpose() + grid[i] * y.transpose();
  values.row(0) = x.transpose();
  values.row(values.rows() - 1) = y.transpose();
  return Path(grid, std::move(values));
}

double h_norm_sq(const Path& path) {
  double total = 0.0;
  for (int i = 0; i + 1 < path.knots(); ++i) {
    const double dt = path.grid[static_cast<size_t>(i) + 1] - path.grid[static_cast<size_t>(i)];
    total += (path.values.row(i + 1) - path.values.row(i)).squaredNorm() / dt;
  }
  return total;
}

double h_inner(const Path& g, const Path& h) {
  if (g.grid != h.grid) throw std::invalid_argument("h_inner: grids must match");
  if (g.dim() != h.dim()) throw std::invalid_argument("h_inner: dimension mismatch");
  double total = 0.0;
  for (int i = 0; i + 1 < g.knots(); ++i) {
    const double dt = g.grid[static_cast<size_t>(i) + 1] - g.grid[static_cast<size_t>(i)];
    total += (g.values.row(i + 1) - g.values.row(i)).dot(h.values.row(i + 1) - h.values.row(i)) / dt;
  }
  return total;
}

Path sample_brownian_bridge(const Vec& x, const Vec& y, double epsilon,
                            const std::vector<double>& grid, Rng& rng) {
  if (x.size() != y.size()) throw std::invalid_argument("bridge: dimension mismatch");
  if (epsilon < 0.0) throw std::invalid_argument("bridge: epsilon must be >= 0");
  if (epsilon == 0.0) return geodesic(x, y, grid);

  const int M = static_cast<int>(grid.size()) - 1;
  const int d = static_cast<int>(x.size());
  Mat values(M + 1, d);
  values.row(0) = x.transpose();
  values.row(M) = y.transpose();
  // Sequential conditioning: given the current point and the pinned endpoint,
  // the next grid value is Gaussian with mean interpolating toward y and
  // variance eps * dt * (1 - t_next) / (1 - t_cur).
  for (int i = 1; i < M; ++i) {
    const double t_cur = grid[static_cast<size_t>(i) - 1];
    const double t_next = grid[static_cast<size_t>(i)];
    const double dt = t_next - t_cur;
    const double rem = 1.0 - t_cur;
    const double sd = std::sqrt(epsilon * dt * (1.0 - t_next) / rem);
    for (int k = 0; k < d; ++k) {
      const double mean = values(i - 1, k) + dt / rem * (y[k] - values(i - 1, k));
      values(i, k) = mean + sd * rng.gauss();
    }
  }
  return Path(grid, std::move(values));
}

std::string PathEnsemble::to_csv_text() const {
  std::ostringstream out;
  out << "# eps=" << format_double(epsilon) << ", seed=" << seed << "\n";
  const int d = paths.empty() ? 0 : static_cast<int>(paths.front().cols());
  out << "path_id,t";
  for (int k = 0; k < d; ++k) out << ",x" << (k + 1);
  out << ",weight\n";
  for (size_t p = 0; p < paths.size(); ++p) {
    const double w = weights ? (*weights)[static_cast<Eigen::Index>(p)] : 1.0;
    for (size_t i = 0; i < grid.size(); ++i) {
      out << p << "," << format_double(grid[i]);
      for (int k = 0; k < d; ++k)
        out << "," << format_double(paths[p](static_cast<Eigen::Index>(i), k));
      out << "," << format_double(w) << "\n";
    }
  }
  return out.str();
}

void PathEnsemble::to_csv(const std::string& file) const { write_file_atomic(file, to_csv_text()); }

PathEnsemble PathEnsemble::from_csv_text(const std::string& text) {
  const CsvTable table = parse_csv(text);
  PathEnsemble ens;
  for (const auto& comment : table.comments) {
    const auto epos = comment.find("eps=");
    const auto spos = comment.find("seed=");
    if (epos != std::string::npos) ens.epsilon = std::stod(comment.substr(epos + 4));
    if (spos != std::string::npos) ens.seed = std::stoull(comment.substr(spos + 5));
  }
  if (table.rows.size() < 2) throw std::invalid_argument("ensemble CSV: no data rows");
  const int d = static_cast<int>(table.rows.front().size()) - 3;
  if (d < 1) throw std::invalid_argument("ensemble CSV: bad header arity");

  std::vector<double> grid;
  std::vector<std::vector<Vec>> raw;
  std::vector<double> weights;
  long cur_id = -1;
  for (size_t r = 1; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != d + 3)
      throw std::invalid_argument("ensemble CSV: bad row arity at line " + std::to_string(r));
    const long id = std::stol(row[0]);
    if (id != cur_id) {
      raw.emplace_back();
      weights.push_back(std::stod(row[static_cast<size_t>(d) + 2]));
      cur_id = id;
    }
    if (raw.size() == 1) grid.push_back(std::stod(row[1]));
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = std::stod(row[static_cast<size_t>(k) + 2]);
    raw.back().push_back(std::move(v));
  }
  ens.grid = grid;
  bool any_weight = false;
  Vec w(static_cast<Eigen::Index>(raw.size()));
  for (size_t p = 0; p < raw.size(); ++p) {
    if (raw[p].size() != grid.size())
      throw std::invalid_argument("ensemble CSV: ragged path " + std::to_string(p));
    Mat m(static_cast<Eigen::Index>(grid.size()), d);
    for (size_t i = 0; i < grid.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = raw[p][i].transpose();
    ens.paths.push_back(std::move(m));
    w[static_cast<Eigen::Index>(p)] = weights[p];
    any_weight = any_weight || weights[p] != 1.0;
  }
  if (any_weight) {
    ens.weights = w;
    ens.weight_normalizer = w.sum();
  }
  return ens;
}

Path Path::from_csv_text(const std::string& text) {
  const CsvTable table = parse_csv(text);
  if (table.rows.size() < 3) throw std::invalid_argument("path CSV: need header plus two knots");
  const auto& header = table.rows.front();
  if (header.empty() || header[0] != "t")
    throw std::invalid_argument("path CSV: header must be t,x1,...,xd");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw std::invalid_argument("path CSV: no coordinate columns");

  std::vector<double> grid;
  Mat values(static_cast<Eigen::Index>(table.rows.size()) - 1, d);
  for (size_t r = 1; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != d + 1)
      throw std::invalid_argument("path CSV: bad row arity at line " + std::to_string(r));
    grid.push_back(std::stod(row[0]));
    for (int k = 0; k < d; ++k)
      values(static_cast<Eigen::Index>(r) - 1, k) = std::stod(row[static_cast<size_t>(k) + 1]);
  }
  return Path(std::move(grid), std::move(values));
}

Path Path::from_csv(const std::string& file) { return from_csv_text(read_file(file)); }

std::string Path::to_csv_text() const {
  std::ostringstream out;
  out << "t";
  for (int k = 0; k < dim(); ++k) out << ",x" << (k + 1);
  out << "\n";
  for (int i = 0; i < knots(); ++i) {
    out << format_double(grid[static_cast<size_t>(i)]);
    for (int k = 0; k < dim(); ++k) out << "," << format_double(values(i, k));
    out << "\n";
  }
  return out.str();
}

PathEnsemble sample_schrodinger_bridge(const Coupling& plan, double epsilon,
                                       const std::vector<double>& grid, std::int64_t n,
                                       std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_schrodinger_bridge: n must be >= 1");
  if (epsilon < 0.0) throw std::invalid_argument("sample_schrodinger_bridge: epsilon must be >= 0");

  // Flattened plan CDF for pair sampling.
  const int m = static_cast<int>(plan.plan.rows());
  const int nn = static_cast<int>(plan.plan.cols());
  std::vector<double> cdf(static_cast<size_t>(m) * nn);
  double acc = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < nn; ++j) {
      acc += plan.plan(i, j);
      cdf[static_cast<size_t>(i) * nn + j] = acc;
    }

  PathEnsemble ens;
  ens.grid = grid;
  ens.epsilon = epsilon;
  ens.seed = seed;
  ens.paths.resize(static_cast<size_t>(n));

  const Rng master(seed);
  constexpr std::int64_t kChunk = 1024;
  parallel_chunks(n, kChunk, [&](std::int64_t chunk, std::int64_t b, std::int64_t e) {
    Rng rng = master.derive(static_cast<std::uint64_t>(chunk));
    for (std::int64_t k = b; k < e; ++k) {
      const int flat = rng.sample_cdf(cdf);
      const int i = flat / nn, j = flat % nn;
      ens.paths[static_cast<size_t>(k)] =
          sample_brownian_bridge(plan.source.point(i), plan.target.point(j), epsilon, grid, rng)
              .values;
    }
  });
  return ens;
}

double support_distance(const Path& path, const Coupling& plan) {
  const auto pairs = plan.support_pairs();
  if (pairs.empty()) throw std::invalid_argument("support_distance: plan has empty support");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : pairs) {
    const Vec& x = plan.source.point(i);
    const Vec& y = plan.target.point(j);
    double sup = 0.0;
    for (int k = 0; k < path.knots(); ++k) {
      const double t = path.grid[static_cast<size_t>(k)];
      const Vec g = (1.0 - t) * x + t * y;
      sup = std::max(sup, (path.values.row(k).transpose() - g).norm());
      if (sup >= best) break;
    }
    best = std::min(best, sup);
  }
  return best;
}

}  // namespace schro
