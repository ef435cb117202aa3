#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "schro/dynamics.hpp"
#include "schro/paths.hpp"

using namespace schro;

namespace {

Vec v1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}

DiscreteMeasure two_atoms(double w_minus = 0.5) {
  Vec w(2);
  w << w_minus, 1.0 - w_minus;
  return DiscreteMeasure({v1(-1), v1(1)}, w);
}

// Atom-sum form of h_eps for the finite-difference oracle.
double log_h_hat(const FollmerModel& m, double t, const Vec& y) {
  double best = -std::numeric_limits<double>::infinity();
  Vec terms(m.mu1.size());
  for (int j = 0; j < m.mu1.size(); ++j) {
    terms[j] = std::log(m.mu1.weight(j)) + m.psi[j] / m.epsilon -
               (y - m.mu1.point(j)).squaredNorm() / (2.0 * m.epsilon * (1.0 - t));
    best = std::max(best, terms[j]);
  }
  double s = 0.0;
  for (int j = 0; j < m.mu1.size(); ++j) s += std::exp(terms[j] - best);
  return best + std::log(s);
}

}  // namespace

TEST_CASE("drift of a single-atom target is the pinned bridge drift") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = DiscreteMeasure::dirac(v1(0.8));
  const FollmerModel model(mu0, mu1, 0.5, Vec::Zero(1));
  for (double t : {0.0, 0.3, 0.9}) {
    for (double y : {-1.0, 0.2, 2.0}) {
      const Vec b = follmer_drift(model, t, v1(y));
      CHECK(b[0] == doctest::Approx((0.8 - y) / (1.0 - t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetric target gives zero drift at the center") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = two_atoms();
  const FollmerModel model(mu0, mu1, 1.0, Vec::Constant(2, 0.5));
  const Vec b = follmer_drift(model, 0.4, v1(0));
  CHECK(std::abs(b[0]) <= 1e-14);
}

TEST_CASE("drift equals the finite-difference gradient of eps log h") {
  Rng rng(61);
  const auto mu0 = DiscreteMeasure::dirac((Vec(2) << 0, 0).finished());
  const auto mu1 = oracle::random_measure(rng, 5, 2);
  const auto model = make_follmer_model(mu0, mu1, 0.6, 1e-11);
  for (int rep = 0; rep < 10; ++rep) {
    const double t = 0.85 * rng.uniform01();
    Vec y(2);
    y << 2 * rng.uniform01() - 1, 2 * rng.uniform01() - 1;
    const Vec drift = follmer_drift(model, t, y);
    for (int k = 0; k < 2; ++k) {
      const double fd = oracle::finite_diff(
          [&](const Vec& q) { return model.epsilon * log_h_hat(model, t, q); }, y, k);
      CHECK(std::abs(drift[k] - fd) <= 1e-6);
    }
  }
}

TEST_CASE("drift clamp guard") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const FollmerModel model(mu0, DiscreteMeasure::dirac(v1(1)), 1.0, Vec::Zero(1));
  CHECK_THROWS_AS(follmer_drift(model, 1.0, v1(0)), std::invalid_argument);
  CHECK_THROWS_AS(follmer_drift(model, 0.996, v1(0), 0.005), std::invalid_argument);
  CHECK_NOTHROW(follmer_drift(model, 0.99, v1(0), 0.005));
}

TEST_CASE("model construction validation") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = two_atoms();
  CHECK_THROWS_AS(FollmerModel(mu0, mu1, 0.0, Vec::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(FollmerModel(mu0, mu1, 1.0, Vec::Zero(3)), std::invalid_argument);
  Vec bad = Vec::Zero(2);
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FollmerModel(mu0, mu1, 1.0, bad), std::invalid_argument);
}

TEST_CASE("euler_maruyama to a dirac target tracks the geodesic") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = DiscreteMeasure::dirac(v1(1));
  const FollmerModel model(mu0, mu1, 0.5, Vec::Zero(1));
  const int64_t n = 20000;
  const int steps = 400;
  const auto ens = euler_maruyama(model, n, steps, 7);
  REQUIRE(ens.size() == n);
  double mid = 0.0;
  for (int k = 0; k < ens.size(); ++k) {
    CHECK(ens.paths[static_cast<size_t>(k)](steps, 0) == 1.0);  // pinned exactly
    mid += ens.paths[static_cast<size_t>(k)](steps / 2, 0);
  }
  mid /= static_cast<double>(n);
  const double se = std::sqrt(0.5 * 0.25 / static_cast<double>(n));
  CHECK(std::abs(mid - 0.5) <= 3 * se + 2.0 / steps);
  CHECK_THROWS_AS(euler_maruyama(model, 10, 1, 7), std::invalid_argument);
}

TEST_CASE("euler_maruyama terminal law approximates mu1") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = two_atoms(0.35);
  const auto model = make_follmer_model(mu0, mu1, 1.0, 1e-11);
  const int64_t n = 20000;
  const auto ens = euler_maruyama(model, n, 500, 13);
  double freq_minus = 0.0;
  for (int k = 0; k < ens.size(); ++k)
    if (ens.paths[static_cast<size_t>(k)](500, 0) < 0) ++freq_minus;
  freq_minus /= static_cast<double>(n);
  const double tv = std::abs(freq_minus - 0.35);
  CHECK(tv <= 0.02);
}

TEST_CASE("euler_maruyama with a non-dirac source hits both marginals") {
  Vec w0(2);
  w0 << 0.4, 0.6;
  const DiscreteMeasure mu0({v1(-0.3), v1(0.5)}, w0);
  const auto mu1 = two_atoms(0.55);
  const auto model = make_follmer_model(mu0, mu1, 0.8, 1e-11);
  const int64_t n = 20000;
  const auto ens = euler_maruyama(model, n, 400, 29);
  double start_minus = 0.0, end_minus = 0.0;
  for (int k = 0; k < ens.size(); ++k) {
    if (ens.paths[static_cast<size_t>(k)](0, 0) < 0) ++start_minus;
    if (ens.paths[static_cast<size_t>(k)](400, 0) < 0) ++end_minus;
  }
  CHECK(std::abs(start_minus / n - 0.4) <= 0.015);
  CHECK(std::abs(end_minus / n - 0.55) <= 0.02);
}

TEST_CASE("euler_maruyama concentrates on the support as eps shrinks") {
  const auto mu0 = DiscreteMeasure::dirac(v1(0));
  const auto mu1 = two_atoms();
  Mat plan(1, 2);
  plan << 0.5, 0.5;
  const Coupling support_plan(plan, mu0, mu1, std::nullopt);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1.0, 0.1, 0.01}) {
    const auto model = make_follmer_model(mu0, mu1, eps, 1e-11);
    const auto ens = euler_maruyama(model, 2000, 300, 19);
    double mean = 0.0;
    for (int k = 0; k < ens.size(); ++k) mean += support_distance(ens.path(k), support_plan);
    mean /= ens.size();
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("potential field families and parsing") {
  const auto zero = PotentialField::zero();
  CHECK(zero.value(v1(3)) == 0.0);
  CHECK(zero.laplacian(v1(3)) == 0.0);

  const auto cosf = PotentialField::parse("cosine:1,1");
  CHECK(cosf.value(v1(0)) == doctest::Approx(1.0));
  CHECK(cosf.grad(v1(0))[0] == doctest::Approx(0.0));
  CHECK(cosf.laplacian(v1(0)) == doctest::Approx(-1.0));

  const auto bump = PotentialField::parse("gaussian-bump:2,0.5,0.3");
  CHECK(bump.value(v1(0.3)) == doctest::Approx(2.0));
  CHECK(bump.grad(v1(0.3))[0] == doctest::Approx(0.0));
  CHECK(bump.laplacian(v1(0.3)) == doctest::Approx(-2.0 / 0.25));

  CHECK_THROWS_AS(PotentialField::parse("quartic:1"), std::invalid_argument);
  CHECK_THROWS_AS(PotentialField::parse("cosine:1"), std::invalid_argument);

  // finite-difference sanity for grad and laplacian of the bump
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Vec y = v1(2 * rng.uniform01() - 0.5);
    const double fd = oracle::finite_diff([&](const Vec& q) { return bump.value(q); }, y, 0);
    CHECK(std::abs(bump.grad(y)[0] - fd) <= 1e-6);
    const double fd2 = oracle::finite_diff([&](const Vec& q) { return bump.grad(q)[0]; }, y, 0);
    CHECK(std::abs(bump.laplacian(y) - fd2) <= 1e-5);
  }
}

TEST_CASE("langevin_weight closed forms") {
  const auto grid = uniform_grid(10);
  const auto zero_path = geodesic(v1(0), v1(0), grid);

  CHECK(langevin_weight(zero_path, PotentialField::zero(), 0.3) == 1.0);
  // constant potential: cosine with omega = 0
  CHECK(langevin_weight(zero_path, PotentialField::cosine(2.5, 0.0), 0.3) == 1.0);
  // V = cos along the zero path: integrand |V'|^2 - V'' = 0 + 1
  const double w = langevin_weight(zero_path, PotentialField::cosine(1.0, 1.0), 0.2);
  CHECK(w == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
}

TEST_CASE("langevin_weight quadrature is additive over a shared knot") {
  Rng rng(30);
  const auto grid = uniform_grid(8);
  Mat vals(9, 1);
  for (int i = 0; i <= 8; ++i) vals(i, 0) = 2 * rng.uniform01() - 1;
  const Path path(grid, vals);
  const auto V = PotentialField::cosine(0.7, 2.0, 0.3);
  const double eps = 0.4;

  // split the trapezoid sum at knot 4 by hand; the exponents add
  auto segment_exponent = [&](int a, int b) {
    double integral = 0.0;
    for (int i = a; i < b; ++i) {
      const double dt = grid[static_cast<size_t>(i) + 1] - grid[static_cast<size_t>(i)];
      const Vec xa = path.values.row(i), xb = path.values.row(i + 1);
      const double fa = V.grad(xa).squaredNorm() - V.laplacian(xa);
      const double fb = V.grad(xb).squaredNorm() - V.laplacian(xb);
      integral += 0.5 * dt * (fa + fb);
    }
    return -0.5 * eps * integral;
  };
  const double product = std::exp(segment_exponent(0, 4)) * std::exp(segment_exponent(4, 8));
  CHECK(langevin_weight(path, V, eps) == doctest::Approx(product).epsilon(1e-14));
}

TEST_CASE("langevin_cost with V = 0 recovers the quadratic cost exactly") {
  const Vec x = v1(0), y = v1(1);
  for (double eps : {0.5, 0.1}) {
    const auto res = langevin_cost(x, y, PotentialField::zero(), eps, 1000, 5);
    const double kernel_normalizer = 0.5 * eps * std::log(2.0 * M_PI * eps);
    CHECK(res.value - kernel_normalizer == doctest::Approx(quad_cost(x, y)).epsilon(1e-12));
    CHECK(res.se == 0.0);
  }
}

TEST_CASE("langevin_cost approaches the quadratic cost as eps shrinks") {
  // below eps = 1/(2 pi) the kernel normalizer and the Girsanov terms pull
  // the same way, so the gap shrinks monotonically on this schedule
  const Vec x = v1(0), y = v1(1);
  const auto V = PotentialField::cosine(1.0, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto res = langevin_cost(x, y, V, eps, 50000, 77);
    const double gap = std::abs(res.value - 0.5);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("langevin_cost asymmetry follows 2 eps (V(y) - V(x))") {
  const Vec x = v1(0), y = v1(1);
  const auto V = PotentialField::cosine(1.0, 1.0);
  const double eps = 0.2;
  const auto fwd = langevin_cost(x, y, V, eps, 200000, 91);
  const auto bwd = langevin_cost(y, x, V, eps, 200000, 92);
  const double expect = 2.0 * eps * (V.value(y) - V.value(x));
  const double se = std::sqrt(fwd.se * fwd.se + bwd.se * bwd.se);
  CHECK(std::abs((fwd.value - bwd.value) - expect) <= 4 * se + 1e-6);
}

TEST_CASE("langevin_cost flags high-variance runs") {
  // near-cancelling value with a rough potential and few samples
  const auto res =
      langevin_cost(v1(0), v1(1.5707), PotentialField::cosine(6.0, 2.0), 0.159, 400, 3);
  CHECK(res.high_variance == (res.se > std::abs(res.value) / 10.0));
  CHECK(res.high_variance);
}

TEST_CASE("langevin bridge with V = 0 reduces to plain bridges") {
  const auto grid = uniform_grid(6);
  const auto res =
      sample_langevin_bridge(v1(0), v1(1), PotentialField::zero(), 0.3, grid, 2048, 21);
  REQUIRE(res.ensemble.weights.has_value());
  for (int k = 0; k < res.ensemble.size(); ++k)
    CHECK((*res.ensemble.weights)[k] == 1.0);
  CHECK(res.ess == doctest::Approx(2048.0));
  CHECK_FALSE(res.low_ess);

  // identical chunk-stream derivation reproduces the same paths
  const Rng master(21);
  Rng rng = master.derive(0);
  const auto first = sample_brownian_bridge(v1(0), v1(1), 0.3, grid, rng);
  CHECK((first.values - res.ensemble.paths[0]).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("langevin bridge weights are positive and finite for bounded fields") {
  const auto grid = uniform_grid(12);
  for (const char* spec : {"cosine:1,2", "gaussian-bump:3,0.4,0.2"}) {
    const auto res = sample_langevin_bridge(v1(-0.5), v1(0.5), PotentialField::parse(spec), 0.8,
                                            grid, 2000, 33);
    for (int k = 0; k < res.ensemble.size(); ++k) {
      const double w = (*res.ensemble.weights)[k];
      CHECK(w > 0.0);
      CHECK(std::isfinite(w));
    }
  }
}

TEST_CASE("langevin reweighting pushes the mean away from the bump") {
  const auto grid = uniform_grid(20);
  const auto V = PotentialField::gaussian_bump(2.0, v1(0.8), 0.25);
  const auto res = sample_langevin_bridge(v1(0), v1(0), V, 0.7, grid, 20000, 55);
  double unweighted = 0.0, weighted = 0.0;
  for (int k = 0; k < res.ensemble.size(); ++k) {
    const double mid = res.ensemble.paths[static_cast<size_t>(k)](10, 0);
    unweighted += mid;
    weighted += (*res.ensemble.weights)[k] * mid;
  }
  unweighted /= res.ensemble.size();
  weighted /= res.ensemble.weight_normalizer;
  // the integrand |grad V|^2 - Lap V is strongly positive near the bump at
  // x = 0.8, so the reweighted bridge avoids it (fixed-seed regression)
  CHECK(weighted < unweighted - 0.005);
}

TEST_CASE("low ESS raises the warning code") {
  const auto grid = uniform_grid(30);
  const auto V = PotentialField::gaussian_bump(60.0, v1(0.0), 0.15);
  const auto res = sample_langevin_bridge(v1(-0.5), v1(0.5), V, 1.5, grid, 5000, 8);
  CHECK(res.low_ess);
}
