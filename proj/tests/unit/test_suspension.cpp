#include "doctest.h"

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "pa/error.hpp"
#include "pa/suspension.hpp"

using namespace pa;

namespace {

const PseudoAnosovModel& genus2() {
  static const PseudoAnosovModel m = pa_from_loop({{0, 1, 2, 3}, {3, 2, 1, 0}}, "ttbtbbtb", "GENUS2_A");
  return m;
}

const PseudoAnosovModel& golden() {
  static const PseudoAnosovModel m = pa_from_loop({{0, 1}, {1, 0}}, "tb", "golden");
  return m;
}

FieldElement random_unit(const PseudoAnosovModel& m, std::mt19937_64& rng) {
  return m.field->rational(Rational(BigInt(rng() >> 34), BigInt(1) << 30));
}

FlowPoint random_point(const PseudoAnosovModel& m, std::mt19937_64& rng) {
  FlowPoint p = base_point(m, random_unit(m, rng));
  p.y = m.heights[p.cell] * random_unit(m, rng);
  return p;
}

// Oracle: walk rectangle by rectangle, integrate each piece by Gauss-Legendre.
double naive_integral(const PseudoAnosovModel& m, const CellObservable& f, FlowPoint p, FieldElement T) {
  using Quad = boost::math::quadrature::gauss<double, 30>;
  double total = 0.0;
  while (true) {
    const FieldElement to_top = m.heights[p.cell] - p.y;
    const bool last = T < to_top;
    const FieldElement piece = last ? T : to_top;
    const double h = m.heights_d[p.cell];
    const double y0 = p.y.to_double(), y1 = y0 + piece.to_double();
    const int cell = p.cell;
    total += Quad::integrate([&](double y) { return f.profile(cell, y / h); }, y0, y1);
    if (last) break;
    T -= to_top;
    p.x = p.x - m.top_left[p.cell] + m.bottom_left[p.cell];
    p.cell = m.locate(p.x);
    p.y = m.field->zero();
  }
  return total;
}

}  // namespace

TEST_CASE("profile integrals match quadrature") {
  const auto f = CellObservable::random(4, 7);
  using Quad = boost::math::quadrature::gauss<double, 30>;
  for (int c = 0; c < 4; ++c) {
    const double exact = f.profile_integral(c, 0.1, 0.85);
    const double quad = Quad::integrate([&](double s) { return f.profile(c, s); }, 0.1, 0.85);
    CHECK(std::abs(exact - quad) < 1e-13);
  }
  CellObservable g;
  g.cells = {{ProfileTerm{1.5, 3, ProfileTerm::Kind::Sin, 2}, ProfileTerm{-0.5, 2, ProfileTerm::Kind::Cos, 3}}};
  CHECK(std::abs(g.profile_integral(0, 0.0, 1.0) -
                 Quad::integrate([&](double s) { return g.profile(0, s); }, 0.0, 1.0)) < 1e-13);
}

TEST_CASE("mean of constants and odd profiles") {
  for (const auto* m : {&genus2(), &golden()}) {
    CHECK(std::abs(mean(*m, CellObservable::constant(m->d(), 1.0)) - 1.0) < 1e-14);
    CellObservable odd;
    odd.cells.assign(m->d(), {ProfileTerm{1.0, 0, ProfileTerm::Kind::Sin, 1}, ProfileTerm{2.0, 1, ProfileTerm::Kind::Poly, 0},
                              ProfileTerm{-1.0, 0, ProfileTerm::Kind::Poly, 0}});
    CHECK(std::abs(mean(*m, odd)) < 1e-15);
  }
}

TEST_CASE("flow step basics") {
  const auto& m = genus2();
  std::mt19937_64 rng(1);
  const FlowPoint p = base_point(m, random_unit(m, rng));
  const FlowPoint q = flow_step(m, p, m.field->zero());
  CHECK(q.x == p.x);
  CHECK(q.y == p.y);
  const FlowPoint r = flow_step(m, p, m.heights[p.cell]);
  CHECK(r.x == m.exchange(p.x, p.cell));
  CHECK(r.y.is_zero());
}

TEST_CASE("semigroup law is exact") {
  const auto& m = genus2();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const FlowPoint p = random_point(m, rng);
    const FieldElement s = random_unit(m, rng) * Rational(20), t = random_unit(m, rng) * Rational(20);
    const FlowPoint a = flow_step(m, p, s + t);
    const FlowPoint b = flow_step(m, flow_step(m, p, s), t);
    CHECK(a.cell == b.cell);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
  }
}

TEST_CASE("separatrix hit is reported") {
  const auto& m = genus2();
  // Start just below the top of the rectangle whose image lands on a discontinuity.
  const int label = m.combinatorics.top[2];
  const FieldElement target = m.top_left[label];
  // Preimage of target under the exchange.
  int src = -1;
  for (int a = 0; a < m.d(); ++a) {
    const FieldElement pre = target - m.bottom_left[a] + m.top_left[a];
    if (pre.sign() >= 0 && pre < m.field->one() && m.locate(pre) == a) src = a;
  }
  REQUIRE(src >= 0);
  const FlowPoint p = base_point(m, target - m.bottom_left[src] + m.top_left[src]);
  try {
    flow_step(m, p, m.heights[src]);
    FAIL("expected HitSingularity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::HitSingularity);
  }
}

TEST_CASE("constant observable integrates to T and T = 0 gives 0") {
  const auto& m = genus2();
  const auto one = CellObservable::constant(m.d(), 1.0);
  std::mt19937_64 rng(3);
  for (double T : {0.0, 0.3, 7.0, 1234.5, 1e7}) {
    const FlowPoint p = random_point(m, rng);
    const double v = birkhoff_integral(m, one, p, field_time(m, T));
    CHECK(std::abs(v - T) <= 1e-12 * std::max(1.0, T));
  }
}

TEST_CASE("durations add up exactly") {
  const auto& m = genus2();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const FlowPoint p = random_point(m, rng);
    const FieldElement T = random_unit(m, rng) * Rational(i % 5 == 0 ? 3000 : 1000000);
    const Traversal tr = traverse(m, p, T);
    FieldElement sum = tr.head_duration + tr.tail_duration;
    for (const auto& s : tr.steps) sum += s.duration;
    CHECK(sum == T);
    if (i % 5 != 0) continue;
    const FlowPoint q = flow_step(m, p, T);
    CHECK(q.x == tr.end.x);
    CHECK(q.y == tr.end.y);
  }
}

TEST_CASE("tower return matches the naive orbit") {
  const auto& m = genus2();
  const auto f = CellObservable::random(m.d(), 11);
  const auto sums = tower_sums(m, f, 6);
  std::mt19937_64 rng(5);
  for (int k = 0; k <= 4; ++k) {
    const FlowPoint p = base_point(m, random_unit(m, rng) * m.lambda_pow(-k));
    const int beta = m.locate(p.x * m.lambda_pow(k));
    const FieldElement dur = m.heights[beta] * m.lambda_pow(k);
    const double naive = naive_integral(m, f, p, dur);
    CHECK(std::abs(naive - sums.sums[k][beta]) < 1e-10 * std::max(1.0, std::abs(naive)));
    // Landing point is the rescaled exchange.
    const FlowPoint q = flow_step(m, p, dur);
    CHECK(q.x == m.exchange(p.x * m.lambda_pow(k), beta) * m.lambda_pow(-k));
  }
}

TEST_CASE("accelerated integral agrees with naive summation") {
  for (const auto* m : {&genus2(), &golden()}) {
    const auto f = CellObservable::random(m->d(), 99);
    const auto sums = tower_sums(*m, f);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 12; ++i) {
      const FlowPoint p = random_point(*m, rng);
      const FieldElement T = random_unit(*m, rng) * Rational(3000);
      const double fast = birkhoff_integral(*m, sums, f, p, T);
      const double slow = naive_integral(*m, f, p, T);
      CHECK(std::abs(fast - slow) <= 1e-9 * std::max(1.0, std::abs(slow)));
    }
  }
}

TEST_CASE("observable json round trip") {
  const auto f = CellObservable::random(4, 5);
  const auto g = CellObservable::from_json(f.to_json());
  CHECK(g.to_json() == f.to_json());
}
