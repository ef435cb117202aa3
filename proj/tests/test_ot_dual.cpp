#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "schro/ot_dual.hpp"

using namespace schro;

namespace {

Vec v1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

DiscreteMeasure uniform01_pair() {
  Vec w(2);
  w << 0.5, 0.5;
  return DiscreteMeasure({v1(0), v1(1)}, w);
}

}  // namespace

TEST_CASE("identity instance: zero cost, zero duals") {
  const auto mu = uniform01_pair();
  const auto result = ot_solve_exact(mu, mu);
  // Exhaustive check over the one-parameter 2x2 transport polytope: the
  // diagonal plan is the unique minimizer.
  double best = 1e18;
  double best_theta = -1;
  for (int k = 0; k <= 1000; ++k) {
    const double theta = 0.5 * k / 1000.0;  // mass on the (0,0) cell
    const double cost = (0.5 - theta) * 0.5 + (0.5 - theta) * 0.5;  // off-diagonal cells
    if (cost < best) {
      best = cost;
      best_theta = theta;
    }
  }
  CHECK(best_theta == doctest::Approx(0.5));
  CHECK(result.primal == doctest::Approx(best).epsilon(1e-12));
  CHECK(result.plan.plan(0, 0) == doctest::Approx(0.5));
  CHECK(result.plan.plan(1, 1) == doctest::Approx(0.5));
  CHECK(result.duals.psi.lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK(result.duals.psi_c.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("dirac to two atoms: product plan and split duals") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  Vec w(2);
  w << 0.5, 0.5;
  const DiscreteMeasure mu1({v1(-1), v1(1)}, w);
  const auto result = ot_solve_exact(mu0, mu1);
  CHECK(result.primal == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(result.plan.plan(0, 0) == doctest::Approx(0.5));
  CHECK(result.plan.plan(0, 1) == doctest::Approx(0.5));
  // Dual constraints: psi_c(0) + psi(+-1) <= 0.5 with equality on support;
  // the normalization shift splits the cost equally.
  CHECK(result.duals.psi_c[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(result.duals.psi[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(result.duals.psi[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("singleton to singleton splits the cost after normalization") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0.2));
  const auto mu1 = DiscreteMeasure::dirac(v1(1.2));
  const auto result = ot_solve_exact(mu0, mu1);
  CHECK(result.plan.plan(0, 0) == doctest::Approx(1.0));
  const double c = quad_cost(v1(0.2), v1(1.2));
  CHECK(result.duals.psi_c[0] == doctest::Approx(0.5 * c).epsilon(1e-12));
  CHECK(result.duals.psi[0] == doctest::Approx(0.5 * c).epsilon(1e-12));
}

TEST_CASE("strong duality, feasibility, support equality on random instances") {
  Rng rng(101);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + rep % 3;
    const auto mu0 = oracle::random_measure(rng, 3 + static_cast<int>(rng.uniform01() * 20), d);
    const auto mu1 = oracle::random_measure(rng, 3 + static_cast<int>(rng.uniform01() * 20), d);
    const auto result = ot_solve_exact(mu0, mu1);

    CHECK(std::abs(result.primal - result.dual) <= 1e-9 * std::max(1.0, result.primal));

    const Mat c = cost_matrix(mu0, mu1);
    for (int i = 0; i < mu0.size(); ++i)
      for (int j = 0; j < mu1.size(); ++j)
        CHECK(result.duals.psi_c[i] + result.duals.psi[j] <= c(i, j) + 1e-10);

    for (const auto& [i, j] : result.plan.support_pairs(1e-12))
      CHECK(std::abs(c_superdiff_residual(result.duals, mu0, mu1, i, j)) <= 1e-9);
  }
}

TEST_CASE("c-transform examples") {
  const std::vector<Vec> atoms = {v1(-1), v1(1)};
  Vec psi(2);
  psi << 0.5, 0.5;  // |y|^2 / 2 on both atoms

  CHECK(c_transform(psi, atoms, {v1(0)})[0] == doctest::Approx(0.0));
  // two-term enumeration: min(1.125 - 0.5, 0.125 - 0.5)
  CHECK(c_transform(psi, atoms, {v1(0.5)})[0] == doctest::Approx(-0.375));

  // psi = 0 reduces to the nearest-atom half squared distance
  Vec zero = Vec::Zero(2);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec q = v1(4 * rng.uniform01() - 2);
    const double expect = std::min(quad_cost(q, atoms[0]), quad_cost(q, atoms[1]));
    CHECK(c_transform(zero, atoms, {q})[0] == doctest::Approx(expect));
  }
}

TEST_CASE("c-transform tie breaking and errors") {
  const std::vector<Vec> atoms = {v1(-1), v1(1)};
  Vec psi = Vec::Zero(2);
  std::vector<int> argmin;
  c_transform(psi, atoms, {v1(0)}, &argmin);  // exact tie
  CHECK(argmin[0] == 0);

  CHECK_THROWS_AS(c_transform(psi, {}, {v1(0)}), std::invalid_argument);
  Vec all_inf = Vec::Constant(2, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(c_transform(all_inf, atoms, {v1(0)}), std::invalid_argument);
}

TEST_CASE("c_superdiff_residual examples") {
  const auto mu = uniform01_pair();
  const auto result = ot_solve_exact(mu, mu);
  // off-diagonal pair on the identity instance
  CHECK(c_superdiff_residual(result.duals, mu, mu, 0, 1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_AS(c_superdiff_residual(result.duals, mu, mu, 0, 5), std::out_of_range);

  const auto d0 = DiscreteMeasure::dirac(v1(0.4));
  const auto d1 = DiscreteMeasure::dirac(v1(-0.3));
  const auto single = ot_solve_exact(d0, d1);
  CHECK(c_superdiff_residual(single.duals, d0, d1, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("double c-transform is idempotent on solved duals") {
  Rng rng(77);
  const auto mu0 = oracle::random_measure(rng, 8, 2);
  const auto mu1 = oracle::random_measure(rng, 9, 2);
  const auto result = ot_solve_exact(mu0, mu1);
  const Vec psi_c = c_transform(result.duals.psi, mu1.points(), mu0.points());
  const Vec psi_cc = c_transform(psi_c, mu0.points(), mu1.points());
  CHECK((psi_cc - result.duals.psi).lpNorm<Eigen::Infinity>() <= 1e-10);
  // and the stored psi_c is the c-transform of psi
  CHECK((psi_c - result.duals.psi_c).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("normalized duals have matching integrals") {
  Rng rng(88);
  const auto mu0 = oracle::random_measure(rng, 6, 1);
  const auto mu1 = oracle::random_measure(rng, 4, 1);
  const auto result = ot_solve_exact(mu0, mu1);
  CHECK(mu0.weights().dot(result.duals.psi_c) ==
        doctest::Approx(mu1.weights().dot(result.duals.psi)).epsilon(1e-10));
}

TEST_CASE("desk-scale instance keeps the certificates") {
  Rng rng(140);
  const auto mu0 = oracle::random_measure(rng, 150, 2);
  const auto mu1 = oracle::random_measure(rng, 180, 2);
  const auto result = ot_solve_exact(mu0, mu1);
  CHECK(std::abs(result.primal - result.dual) <= 1e-9 * std::max(1.0, result.primal));
  const Mat c = cost_matrix(mu0, mu1);
  double worst_feas = 0.0, worst_support = 0.0;
  for (int i = 0; i < mu0.size(); ++i)
    for (int j = 0; j < mu1.size(); ++j)
      worst_feas = std::max(worst_feas, result.duals.psi_c[i] + result.duals.psi[j] - c(i, j));
  for (const auto& [i, j] : result.plan.support_pairs(1e-12))
    worst_support =
        std::max(worst_support, std::abs(c_superdiff_residual(result.duals, mu0, mu1, i, j)));
  CHECK(worst_feas <= 1e-10);
  CHECK(worst_support <= 1e-9);
}

TEST_CASE("triple c-transform collapses to a single transform") {
  // psi^{ccc} = psi^c for arbitrary psi, not just solved duals
  Rng rng(141);
  const auto mu0 = oracle::random_measure(rng, 7, 2);
  const auto mu1 = oracle::random_measure(rng, 9, 2);
  for (int rep = 0; rep < 20; ++rep) {
    Vec psi(mu1.size());
    for (int j = 0; j < psi.size(); ++j) psi[j] = 4 * rng.uniform01() - 2;
    const Vec psi_c = c_transform(psi, mu1.points(), mu0.points());
    const Vec psi_cc = c_transform(psi_c, mu0.points(), mu1.points());
    const Vec psi_ccc = c_transform(psi_cc, mu1.points(), mu0.points());
    CHECK((psi_ccc - psi_c).lpNorm<Eigen::Infinity>() <= 1e-12);
    // and the double transform dominates the input
    for (int j = 0; j < psi.size(); ++j) CHECK(psi_cc[j] >= psi[j] - 1e-12);
  }
}

TEST_CASE("1-d monotone instance recovers the sorted pairing") {
  // Sorted atoms with equal weights: the optimal plan is the identity
  // pairing (monotone rearrangement).
  std::vector<Vec> xs, ys;
  const int n = 6;
  Vec w(n);
  for (int i = 0; i < n; ++i) {
    xs.push_back(v1(i * 0.2));
    ys.push_back(v1(0.1 + i * i * 0.05));
    w[i] = 1.0 / n;
  }
  w[n - 1] = 1.0 - w.head(n - 1).sum();
  const DiscreteMeasure mu0(xs, w), mu1(ys, w);
  const auto result = ot_solve_exact(mu0, mu1);
  for (int i = 0; i < n; ++i) CHECK(result.plan.plan(i, i) == doctest::Approx(1.0 / n));
}
