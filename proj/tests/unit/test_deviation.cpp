#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pa/deviation.hpp"
#include "pa/error.hpp"
#include "pa/return_decomposition.hpp"

using namespace pa;

namespace {

const PseudoAnosovModel& genus2() {
  static const PseudoAnosovModel m = pa_from_loop({{0, 1, 2, 3}, {3, 2, 1, 0}}, "ttbtbbtb", "GENUS2_A");
  return m;
}

IntegerMatrix cat() { return IntegerMatrix{{2, 1}, {1, 1}}; }

DeviationReport synthetic(const std::vector<double>& grid, double (*e)(double)) {
  DeviationReport r;
  for (double T : grid) r.samples.push_back({T, e(T), e(T)});
  r.fill_envelope();
  return r;
}

ExponentTable table(std::vector<double> nus) {
  ExponentTable t;
  t.rows.push_back({1, 1.0, 1, 1, 1, 0.0});
  for (std::size_t i = 0; i < nus.size(); ++i) t.rows.push_back({static_cast<int>(i) + 2, nus[i], 1, 1, 1, 0.0});
  return t;
}

// Profile value from the term definitions.
double profile_oracle(const CellObservable& g, int cell, double s) {
  double v = 0.0;
  for (const auto& t : g.cells[cell]) {
    const double p = std::pow(s, t.power);
    const double w = 2.0 * std::numbers::pi * t.freq * s;
    switch (t.kind) {
      case ProfileTerm::Kind::Poly: v += t.coeff * p; break;
      case ProfileTerm::Kind::Cos: v += t.coeff * p * std::cos(w); break;
      case ProfileTerm::Kind::Sin: v += t.coeff * p * std::sin(w); break;
    }
  }
  return v;
}

}  // namespace

TEST_CASE("geometric grid spans the range with the requested ratio") {
  const auto g = geometric_grid(10.0, 1000.0, 10.0);
  REQUIRE(g.size() == 3);
  CHECK(g.back() == doctest::Approx(1000.0));
  CHECK_THROWS_AS(geometric_grid(10.0, 100.0, 1.0), Error);
  CHECK_THROWS_AS(geometric_grid(0.0, 100.0, 2.0), Error);
}

TEST_CASE("constant observable has zero deviation") {
  const auto& m = genus2();
  const auto starts = seeded_starts(m, 3, 5);
  const auto grid = geometric_grid(1.0, 1e6, 1.5);
  for (const auto& x : starts) {
    const DeviationReport r = deviation_series(m, CellObservable::constant(m.d(), 1.0), x, grid);
    for (const auto& s : r.samples) {
      CHECK(s.E == 0.0);
      CHECK(s.S == s.T);
    }
    for (std::size_t i = 1; i < r.envelope.size(); ++i) CHECK(r.envelope[i] >= r.envelope[i - 1]);
  }
}

TEST_CASE("flow derivative has deviation equal to the endpoint difference") {
  const auto& m = genus2();
  using K = ProfileTerm::Kind;
  CellObservable g;
  g.cells.resize(m.d());
  for (int a = 0; a < m.d(); ++a)
    g.cells[a] = {{0.3 + 0.1 * a, 0, K::Sin, 1 + a % 2}, {0.7, 2, K::Poly, 0}, {-0.7, 1, K::Poly, 0}, {0.2, 1, K::Sin, 2}};
  const CellObservable f = flow_derivative(m, g);
  CHECK(std::abs(mean(m, f)) < 1e-14);
  const auto starts = seeded_starts(m, 4, 11);
  const auto grid = geometric_grid(0.5, 1e5, 1.7);
  double sup_g = 0.0;
  for (int a = 0; a < m.d(); ++a)
    for (int k = 0; k <= 1000; ++k) sup_g = std::max(sup_g, std::abs(profile_oracle(g, a, k / 1000.0)));
  for (const auto& x : starts) {
    const DeviationReport r = deviation_series(m, f, x, grid);
    for (const auto& s : r.samples) {
      const FlowPoint end = flow_step(m, x, field_time(m, s.T));
      const double expected = profile_oracle(g, end.cell, end.y.to_double() / m.heights_d[end.cell]) -
                              profile_oracle(g, x.cell, x.y.to_double() / m.heights_d[x.cell]);
      CHECK(s.E == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
      CHECK(std::abs(s.E) <= 2.0 * sup_g + 1e-9);
    }
  }
}

TEST_CASE("linear flow integrals match quadrature along the line") {
  const TrigObservable f = TrigObservable::random_zero_mean(5, 6, 3);
  TrigObservable g = f;
  g.coeffs[{0, 0}] = 0.25;
  const Eigen::Vector2d x(0.123, 0.456);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const Eigen::Vector2d v = Eigen::Vector2d(1.0, phi).normalized();
  const std::vector<double> grid{0.5, 1.0, 3.0, 10.0, 40.0};
  const DeviationReport r = deviation_series(cat(), g, x, grid);
  for (const auto& s : r.samples) {
    double S = 0.0;
    const int pieces = static_cast<int>(std::ceil(s.T * 20));
    for (int p = 0; p < pieces; ++p) {
      const double a = s.T * p / pieces, b = s.T * (p + 1) / pieces;
      S += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          [&](double t) { return g(x + t * v).real(); }, a, b, 0);
    }
    CHECK(s.S == doctest::Approx(S).epsilon(1e-10).scale(1.0));
    CHECK(s.E == doctest::Approx(S - 0.25 * s.T).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("power-law fit recovers synthetic exponents") {
  const auto grid = geometric_grid(1e2, 1e7, 1.05);
  const DeviationReport p = synthetic(grid, [](double T) { return std::pow(T, 0.7); });
  const PowerFit f = fit_power_law(p, 1e3, 1e7);
  CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(f.stderr_slope < 1e-9);
  // Local slope of (log T)^2 is 2 / log T.
  const DeviationReport q = synthetic(grid, [](double T) { return std::log(T) * std::log(T); });
  const double s = fit_power_law(q, 1e4, 1e7).slope;
  CHECK(s <= 2.0 / std::log(1e4));
  CHECK(s >= 2.0 / std::log(1e7));
  const DeviationReport far = synthetic(geometric_grid(1e20, 1e23, 1.05), [](double T) { return std::log(T) * std::log(T); });
  CHECK(fit_power_law(far, 1e20, 1e23).slope <= 0.05);
}

TEST_CASE("power-law fit rejects degenerate windows") {
  const auto grid = geometric_grid(1e2, 1e7, 1.05);
  const DeviationReport p = synthetic(grid, [](double T) { return std::pow(T, 0.7); });
  CHECK_THROWS_AS(fit_power_law(p, 1e4, 1.2e4), Error);
  const PowerFit clipped = fit_power_law(p, 1e4, 1e8);
  CHECK(clipped.t_max == doctest::Approx(grid.back()));
  CHECK(clipped.t_min >= 1e4);
  const DeviationReport z = synthetic(grid, [](double) { return 0.0; });
  try {
    fit_power_law(z, 1e3, 1e7);
    FAIL("expected DegenerateWindow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateWindow);
  }
}

TEST_CASE("peeling a single power returns its coefficient") {
  DeviationReport r = synthetic(geometric_grid(1e2, 1e7, std::pow(10.0, 0.01)), [](double T) { return 3.0 * std::pow(T, 0.7); });
  peel_expansion(r, table({0.7}));
  REQUIRE(r.peeled.size() == 1);
  const PeeledTerm& t = r.peeled[0];
  for (double c : t.coeff) CHECK(c == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(t.bounded);
  CHECK(t.recurrent);
  CHECK(t.floor == doctest::Approx(0.75));
  CHECK(t.window_max.size() == 20);
}

TEST_CASE("peeling detects growth and decay of the coefficient") {
  DeviationReport grow = synthetic(geometric_grid(1e2, 1e7, 1.02), [](double T) { return std::pow(T, 0.8); });
  peel_expansion(grow, table({0.6}));
  CHECK_FALSE(grow.peeled[0].bounded);
  DeviationReport decay = synthetic(geometric_grid(1e2, 1e7, 1.02), [](double T) { return std::pow(T, 0.3); });
  peel_expansion(decay, table({0.6}));
  CHECK(decay.peeled[0].bounded);
  CHECK_FALSE(decay.peeled[0].recurrent);
}

TEST_CASE("peeling orders terms and separates two powers") {
  DeviationReport r =
      synthetic(geometric_grid(1e2, 1e9, 1.02), [](double T) { return 2.0 * std::pow(T, 0.6) + 5.0 * std::pow(T, 0.1); });
  ExponentTable t = table({0.6, 0.1});
  peel_expansion(r, t);
  REQUIRE(r.peeled.size() == 2);
  CHECK(r.peeled[0].nu == 0.6);
  CHECK(r.peeled[1].nu == 0.1);
  CHECK(r.peeled[0].coeff.back() == doctest::Approx(2.0).epsilon(0.01));

  ExponentTable jordan = table({0.5});
  jordan.rows[1].max_block = 2;
  DeviationReport q = synthetic(geometric_grid(1e2, 1e7, 1.02), [](double T) { return std::log(T) * std::pow(T, 0.5); });
  peel_expansion(q, jordan);
  REQUIRE(q.peeled.size() == 2);
  CHECK(q.peeled[0].power == 2);
  for (std::size_t s = 0; s < q.samples.size(); ++s) CHECK(q.peeled[0].coeff[s] == doctest::Approx(1.0));
}

TEST_CASE("peeling rejects colliding exponents and is a no-op without secondary exponents") {
  DeviationReport r = synthetic(geometric_grid(1e2, 1e5, 1.1), [](double T) { return std::log(T); });
  CHECK_THROWS_AS(peel_expansion(r, table({0.5, 0.5 + 1e-7})), Error);
  const ExponentTable cat_table = deviation_exponents(spectral_split(cat()));
  peel_expansion(r, cat_table);
  CHECK(r.peeled.empty());
  for (std::size_t s = 0; s < r.samples.size(); ++s) CHECK(r.remainder[s] == r.samples[s].E);
}

TEST_CASE("sweep results do not depend on the worker count") {
  const auto& m = genus2();
  const CellObservable f = CellObservable::random(m.d(), 4);
  const auto starts = seeded_starts(m, 6, 9);
  const auto grid = geometric_grid(10.0, 1e5, 1.3);
  const auto a = deviation_sweep(m, f, starts, grid, 1);
  const auto b = deviation_sweep(m, f, starts, grid, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t s = 0; s < grid.size(); ++s) CHECK(a[i].samples[s].E == b[i].samples[s].E);
  const DeviationReport pooled = pooled_envelope(a);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    double mx = 0.0;
    for (const auto& r : a) mx = std::max(mx, std::abs(r.samples[s].E));
    CHECK(pooled.samples[s].E == mx);
    for (const auto& r : a) CHECK(pooled.envelope[s] >= r.envelope[s]);
  }
}

TEST_CASE("contraction with the flow field vanishes on flow curves") {
  const auto& m = genus2();
  const auto battery = form_battery(m);
  const auto grid = geometric_grid(10.0, 1e5, 1.3);
  const auto rows = basic_current_check(m, battery, seeded_starts(m, 1, 2)[0], grid);
  REQUIRE(rows.size() == battery.size());
  for (const auto& r : rows) {
    CHECK(r.tangency == 0.0);
    CHECK(r.max_coefficient == 0.0);
  }
  const auto zero = basic_current_check(m, {CellObservable::constant(m.d(), 0.0)}, seeded_starts(m, 1, 2)[0], grid);
  CHECK(zero[0].tangency == 0.0);
}

TEST_CASE("cat map correlations vanish past the lattice horizon and respect the bound") {
  const TrigObservable one = TrigObservable::constant(1.0);
  const CorrelationReport c1 = correlation_expansion_check(cat(), one, one, 10);
  for (const auto& r : c1.rows) CHECK(r.residual == 0.0);
  CHECK(c1.middle_terms == 0);
  CHECK(c1.polylog_power == 2);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TrigObservable f = TrigObservable::random_zero_mean(5, 4, seed);
    TrigObservable g = TrigObservable::random_zero_mean(5, 4, 1000 + seed);
    g.coeffs[{0, 0}] = 0.5;
    const CorrelationReport rep = correlation_expansion_check(cat(), f, g, 20);
    CHECK(rep.within_bound);
    for (const auto& r : rep.rows) {
      if (r.n > rep.vanishing_index) CHECK(r.residual == 0.0);
      CHECK(r.residual <= rep.triangle_bound + 1e-12);
    }
  }
}

TEST_CASE("deviation report JSON lists fits and flags") {
  DeviationReport r = synthetic(geometric_grid(1e2, 1e7, 1.02), [](double T) { return 3.0 * std::pow(T, 0.7); });
  r.fits.push_back(fit_power_law(r, 1e4, 1e7));
  peel_expansion(r, table({0.7}));
  const auto j = r.to_json();
  CHECK(j["fits"][0]["slope"].get<double>() == doctest::Approx(0.7));
  CHECK(j["peeled"][0]["recurrent"].get<bool>());
}
