#include "doctest.h"

#include <cmath>
#include <random>

#include "pa/error.hpp"
#include "pa/torus.hpp"

using namespace pa;

namespace {

const IntegerMatrix kCat{{2, 1}, {1, 1}};

TrigVectorField shear() {
  TrigVectorField psi;
  psi.x = TrigObservable::sin_mode({0, 1});
  return psi;
}

const ToralMap& perturbed() {
  static const ToralMap m = make_toral_map(kCat, shear(), 0.01);
  return m;
}

Eigen::Vector2d random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng)};
}

double fitted_ratio(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = from; i < to; ++i) {
    const double x = static_cast<double>(i), y = std::log(v[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
  }
  return std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
}

// Oracle: rectangle rule, exact for trigonometric polynomials below the grid frequency.
std::complex<double> quadrature_correlation(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g, int n, int grid) {
  const IntegerMatrix ln = L.power(static_cast<unsigned>(n));
  std::complex<double> acc = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double x = static_cast<double>(i) / grid, y = static_cast<double>(j) / grid;
      const Eigen::Vector2d p(x, y);
      const Eigen::Vector2d q(static_cast<double>(ln(0, 0)) * x + static_cast<double>(ln(0, 1)) * y,
                              static_cast<double>(ln(1, 0)) * x + static_cast<double>(ln(1, 1)) * y);
      acc += f(q) * std::conj(g(p));
    }
  return acc / (static_cast<double>(grid) * grid);
}

}  // namespace

TEST_CASE("toral map construction and rejection") {
  const ToralMap cat = make_toral_map(kCat);
  CHECK(cat.linear);
  CHECK(std::isinf(cat.cone_bound));
  CHECK(cat.lambda == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-14));
  CHECK_FALSE(perturbed().linear);
  CHECK(perturbed().cone_bound > 0.01);
  CHECK(cone_invariant(perturbed(), 0.01));
  CHECK_FALSE(cone_invariant(perturbed(), 2.0 * perturbed().cone_bound + 0.1));
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Ok;
  };
  CHECK(code([] { make_toral_map(IntegerMatrix{{1, 1}, {0, 1}}); }) == ErrorCode::NotHyperbolic);
  CHECK(code([] { make_toral_map(IntegerMatrix{{2, 1}, {0, 1}}); }) == ErrorCode::NotUnimodular);
  CHECK(code([] { make_toral_map(kCat, shear(), 5.0); }) == ErrorCode::PerturbationTooLarge);
  CHECK(code([] { make_toral_map(kCat, shear(), -0.1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("winding numbers give the transpose action on cohomology") {
  for (const IntegerMatrix& L : {kCat, IntegerMatrix{{3, 2}, {1, 1}}, IntegerMatrix{{-3, 1}, {-1, 0}}}) {
    for (double eps : {0.0, 0.01, 0.04}) {
      const ToralMap m = make_toral_map(L, shear(), eps);
      CHECK(m.homology_action() == L);
      CHECK(m.cohomology_action() == L.transpose());
    }
  }
}

TEST_CASE("inverse map undoes the map") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d x = random_point(rng);
    const Eigen::Vector2d back = perturbed()(perturbed().inverse(x));
    CHECK(std::abs(std::remainder(back(0) - x(0), 1.0)) < 1e-13);
    CHECK(std::abs(std::remainder(back(1) - x(1), 1.0)) < 1e-13);
  }
}

TEST_CASE("unstable direction of the linear cat map") {
  const ToralMap cat = make_toral_map(kCat);
  const Eigen::Vector2d expected = Eigen::Vector2d(1.0, (std::sqrt(5.0) - 1.0) / 2.0).normalized();
  std::mt19937_64 rng(5);
  Eigen::Vector2d first;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d d = unstable_direction(cat, random_point(rng), 20);
    if (i == 0) first = d;
    CHECK((d - expected).norm() < 1e-12);
    CHECK((d - first).norm() < 1e-12);
  }
}

TEST_CASE("perturbed unstable direction converges geometrically and is invariant") {
  const auto& m = perturbed();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector2d x = random_point(rng);
    const auto inc = unstable_direction_increments(m, x, 12);
    CHECK(fitted_ratio(inc, 0, 10) <= 1.0 / m.lambda + 0.1);
    const Eigen::Vector2d d = unstable_direction(m, x, 40, 1e-12);
    const Eigen::Vector2d pushed = (m.jacobian(x) * d).normalized();
    CHECK((pushed - unstable_direction(m, m(x), 40, 1e-12)).norm() < 1e-10);
  }
  CHECK_THROWS_AS(unstable_direction(m, {0.2, 0.3}, 2, 1e-14), Error);
}

TEST_CASE("expansion cocycle") {
  const ToralMap cat = make_toral_map(kCat);
  for (int n : {1, 5, 10, 20}) CHECK(expansion_cocycle(cat, {0.1, 0.2}, n) == doctest::Approx(std::pow(cat.lambda, n)).epsilon(1e-12));
  const auto& m = perturbed();
  const Eigen::Vector2d x(0.37, 0.81);
  Eigen::Vector2d y = x;
  for (int i = 0; i < 4; ++i) y = m(y);
  CHECK(expansion_cocycle(m, x, 9) == doctest::Approx(expansion_cocycle(m, x, 4) * expansion_cocycle(m, y, 5)).epsilon(1e-8));
}

TEST_CASE("transfer primitive solves the cohomological equation") {
  const ToralMap cat = make_toral_map(kCat);
  CHECK(transfer_primitive(cat, {1.0, -2.0}).u.coeffs.empty());
  CHECK(transfer_primitive(perturbed(), {0.0, 0.0}).u.coeffs.empty());
  const auto& m = perturbed();
  const Eigen::Vector2d c(1.0, 0.0);
  const TransferPrimitive t = transfer_primitive(m, c);
  CHECK(t.residual <= 1e-10);
  for (const auto& [k, v] : t.u.coeffs) CHECK((k[0] != 0 || k[1] != 0));
  // Oracle: central differences of u against A* alpha - alpha(A# C) at off-grid points.
  std::mt19937_64 rng(9);
  const Eigen::Matrix2d lt = m.linear_matrix().transpose();
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector2d x = random_point(rng);
    const double h = 1e-5;
    const Eigen::Vector2d du((t.u(x + Eigen::Vector2d(h, 0)) - t.u(x - Eigen::Vector2d(h, 0))) / (2 * h),
                             (t.u(x + Eigen::Vector2d(0, h)) - t.u(x - Eigen::Vector2d(0, h))) / (2 * h));
    const Eigen::Vector2d target = m.jacobian(x).transpose() * c - lt * c;
    CHECK((du - target).norm() < 1e-8);
  }
  const ToralMap half = make_toral_map(kCat, shear(), 0.005);
  const double ratio = transfer_primitive(half, c).u.sup_bound() / t.u.sup_bound();
  CHECK(ratio == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(transfer_primitive(m, c, 1e-10, 64).grid <= 64);
}

TEST_CASE("linear current is the constant form") {
  const ToralMap cat = make_toral_map(kCat);
  const Eigen::Vector2d c = unstable_class(cat);
  const CurrentHandle b = build_unstable_current(cat, c, 10);
  CHECK(b.tail_bound == 0.0);
  CHECK(b.potential(cat, {0.3, 0.4}) == 0.0);
  for (const auto& w : toral_form_battery()) {
    const Eigen::Vector2d mean(std::real(w.a.mean()), std::real(w.b.mean()));
    CHECK(current_pairing(cat, b, w, 32) == c(0) * mean(1) - c(1) * mean(0));
  }
  CHECK_THROWS_AS(build_unstable_current(cat, {1.0, 0.0}, 3), Error);
}

TEST_CASE("form battery has unit C1 size") {
  const auto battery = toral_form_battery();
  REQUIRE(battery.size() == 10);
  std::mt19937_64 rng(13);
  for (const auto& w : battery) {
    double sup = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Eigen::Vector2d x = random_point(rng);
      const Eigen::Vector2d v = w(x);
      const Eigen::Vector2d ga = w.a.gradient(x), gb = w.b.gradient(x);
      sup = std::max(sup, std::abs(v(0)) + std::abs(v(1)) + ga.cwiseAbs().sum() + gb.cwiseAbs().sum());
    }
    CHECK(sup <= 1.0 + 1e-12);
  }
}

TEST_CASE("perturbed current truncations and equivariance") {
  const auto& m = perturbed();
  const Eigen::Vector2d c = unstable_class(m);
  const auto battery = toral_form_battery();
  const CurrentHandle b5 = build_unstable_current(m, c, 5), b10 = build_unstable_current(m, c, 10);
  CHECK(b5.tail_bound > 0.0);
  for (const auto& w : battery) CHECK(std::abs(current_pairing(m, b5, w, 32) - current_pairing(m, b10, w, 32)) <= b5.tail_bound);
  // Closed forms see only the class.
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector2d mean(std::real(battery[i].a.mean()), std::real(battery[i].b.mean()));
    CHECK(current_pairing(m, b10, battery[i], 32) == c(0) * mean(1) - c(1) * mean(0));
  }
  // Exact forms pair to zero.
  TrigObservable phi = TrigObservable::cos_mode({1, 2});
  OneForm exact;
  for (const auto& [k, v] : phi.coeffs) {
    const std::complex<double> d(0.0, 2.0 * 3.14159265358979323846);
    exact.a.coeffs[k] = d * static_cast<double>(k[0]) * v;
    exact.b.coeffs[k] = d * static_cast<double>(k[1]) * v;
  }
  CHECK(std::abs(current_pairing(m, b10, exact, 32)) < 1e-15);
  for (int n : {2, 4}) {
    const CurrentHandle bn = build_unstable_current(m, c, n);
    for (const auto& w : battery) CHECK(std::abs(equivariance_residual(m, c, n, w, 32)) <= 2.0 * bn.tail_bound);
  }
  const auto json = b5.to_json();
  CHECK(json["depth"] == 5);
}

TEST_CASE("deep truncations stay within the tail bound") {
  const auto& m = perturbed();
  const Eigen::Vector2d c = unstable_class(m);
  const CurrentHandle b20 = build_unstable_current(m, c, 20), b40 = build_unstable_current(m, c, 40);
  // Backward classes are exact multiples of the class, with no stable drift.
  const Eigen::Vector2d last = b40.term_classes.back();
  CHECK(std::abs(last(0) * c(1) - last(1) * c(0)) <= 1e-14 * last.norm() * c.norm());
  for (const auto& w : toral_form_battery())
    CHECK(std::abs(current_pairing(m, b20, w, 64) - current_pairing(m, b40, w, 64)) <= b20.tail_bound);
}

TEST_CASE("equivariance decay separates resolved depths from quadrature error") {
  const auto decay = equivariance_decay(perturbed(), unstable_class(perturbed()), 6, 32);
  REQUIRE(decay.residuals.size() == 6);
  CHECK(decay.fitted >= 2);
  for (std::size_t i = 0; i < decay.resolved.size(); ++i)
    if (decay.resolved[i]) CHECK(decay.quadrature_error[i] <= 0.1 * decay.residuals[i]);
  CHECK(decay.ratio <= 1.0 / perturbed().lambda + 0.1);
  const ToralMap linear = make_toral_map(kCat);
  const auto exact = equivariance_decay(linear, unstable_class(linear), 3, 16);
  CHECK(exact.ratio == 0.0);
  CHECK(exact.fitted == 0);
}

TEST_CASE("exact correlations on the frequency lattice") {
  const TrigObservable one = TrigObservable::constant(1.0);
  for (int n : {0, 1, 7}) CHECK(exact_correlation(kCat, one, one, n) == std::complex<double>(1.0));
  TrigObservable f, g;
  f.coeffs[{1, 0}] = {0.5, 0.25};
  const IntegerMatrix lt3 = kCat.transpose().power(3);
  g.coeffs[{lt3(0, 0), lt3(1, 0)}] = {2.0, -1.0};
  for (int n = 0; n < 8; ++n) {
    const auto v = exact_correlation(kCat, f, g, n);
    if (n == 3) {
      CHECK(v == f.coeffs.begin()->second * std::conj(g.coeffs.begin()->second));
    } else {
      CHECK(v == std::complex<double>(0.0));
    }
  }
  CHECK(correlation_horizon(kCat, f, g) == 3);
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const TrigObservable p = TrigObservable::random_zero_mean(5, 6, seed), q = TrigObservable::random_zero_mean(5, 6, seed + 100);
    CHECK(p.is_real());
    CHECK(std::abs(p.mean()) == 0.0);
    for (int n = 0; n <= 2; ++n) CHECK(std::abs(exact_correlation(kCat, p, q, n) - quadrature_correlation(kCat, p, q, n, 128)) < 1e-12);
    const int horizon = correlation_horizon(kCat, p, q);
    for (int n = std::max(horizon + 1, 0); n <= horizon + 30; ++n) CHECK(exact_correlation(kCat, p, q, n) == std::complex<double>(0.0));
  }
  CHECK_THROWS_AS(exact_correlation(kCat, one, one, -1), Error);
}

TEST_CASE("trig observable serialization") {
  const TrigObservable p = TrigObservable::random_zero_mean(3, 4, 42);
  const TrigObservable q = TrigObservable::from_json(p.to_json());
  CHECK(q.coeffs == p.coeffs);
  TrigVectorField v = shear();
  CHECK(TrigVectorField::from_json(v.to_json()).x.coeffs == v.x.coeffs);
}
