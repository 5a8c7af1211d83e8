#include "doctest.h"

#include <cmath>
#include <random>

#include "pa/error.hpp"
#include "pa/return_decomposition.hpp"

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

// Oracle: rectangle-by-rectangle walk recording top crossings and base returns.
struct NaiveWalk {
  FlowPoint end;
  std::vector<long long> crossings;
  std::vector<FieldElement> returns;
};

NaiveWalk naive_walk(const PseudoAnosovModel& m, FlowPoint p, FieldElement T) {
  NaiveWalk w;
  w.crossings.assign(m.d(), 0);
  while (true) {
    const FieldElement to_top = m.heights[p.cell] - p.y;
    if (T < to_top) {
      p.y += T;
      break;
    }
    T -= to_top;
    ++w.crossings[p.cell];
    p.x = p.x - m.top_left[p.cell] + m.bottom_left[p.cell];
    p.cell = m.locate(p.x);
    p.y = m.field->zero();
    w.returns.push_back(p.x);
  }
  w.end = p;
  return w;
}

std::vector<const PseudoAnosovModel*> presets() { return {&genus2(), &golden()}; }

}  // namespace

TEST_CASE("tower floors reach the point without earlier returns to the tower base") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
      const FlowPoint p = random_point(m, rng);
      const auto floors = tower_floors(m, p, 5);
      REQUIRE(floors.size() == 6);
      for (int k = 0; k <= 5; ++k) {
        const auto& f = floors[k];
        CHECK((f.x - m.lambda_pow(-k)).sign() < 0);
        CHECK(f.x.sign() >= 0);
        CHECK(f.label == m.locate(f.x * m.lambda_pow(k)));
        CHECK(f.offset < m.lambda_pow(k) * m.heights[f.label]);
        const NaiveWalk w = naive_walk(m, base_point(m, f.x), f.offset);
        CHECK(w.end.cell == p.cell);
        CHECK(w.end.x == p.x);
        CHECK(w.end.y == p.y);
        for (const auto& r : w.returns) CHECK((r - m.lambda_pow(-k)).sign() >= 0);
      }
    }
  }
}

TEST_CASE("closest-return decomposition satisfies the multiplicity and length bounds") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
      const FlowPoint p = random_point(m, rng);
      const double T = std::exp(std::uniform_real_distribution<double>(0.0, std::log(1e5))(rng));
      const UnstableCurve g{p, field_time(m, T)};
      const auto dec = decompose_closest_returns(m, g);
      const auto chk = check_decomposition(m, dec);
      CHECK(chk.multiplicity_ok);
      CHECK(chk.lengths_ok);
      CHECK(chk.remainder_ok);
      CHECK(chk.additive);
      CHECK(chk.worst_multiplicity <= chk.multiplicity_bound);
      for (std::size_t i = 1; i < dec.items.size(); ++i) CHECK(dec.items[i].scale <= dec.items[i - 1].scale);
      // Remainder admits no further return at any scale.
      CHECK(dec.remainder_duration.to_double() < m.c_max);
    }
  }
}

TEST_CASE("items are consecutive orbit pieces of the advertised length") {
  const auto& m = genus2();
  std::mt19937_64 rng(3);
  const FlowPoint p = random_point(m, rng);
  const UnstableCurve g{p, field_time(m, 2500.0)};
  const auto dec = decompose_closest_returns(m, g);
  FlowPoint cursor = p;
  for (const auto& it : dec.items) {
    CHECK(it.start.cell == cursor.cell);
    CHECK(it.start.x == cursor.x);
    CHECK(it.start.y == cursor.y);
    CHECK(it.duration == m.lambda_pow(it.scale) * m.heights[it.cell]);
    CHECK(it.cell == tower_floors(m, it.start, it.scale)[it.scale].label);
    const NaiveWalk w = naive_walk(m, it.start, it.duration);
    CHECK(it.crossings.visits.size() == static_cast<std::size_t>(m.d()));
    for (int a = 0; a < m.d(); ++a) CHECK(it.crossings.visits[a] == w.crossings[a]);
    cursor = w.end;
  }
}

TEST_CASE("crossing class matches the naive crossing count") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const FlowPoint p = random_point(m, rng);
      const FieldElement T = field_time(m, std::uniform_real_distribution<double>(0.5, 3000.0)(rng));
      const HomologyClass h = crossing_class(m, traverse(m, p, T));
      const NaiveWalk w = naive_walk(m, p, T);
      for (int a = 0; a < m.d(); ++a) CHECK(h.visits[a] == w.crossings[a]);
      // Decomposition crossings plus the remainder's crossings recover the whole curve.
      const auto dec = decompose_closest_returns(m, {p, T});
      const FlowPoint rem_start = dec.items.empty() ? p : naive_walk(m, p, T - dec.remainder_duration).end;
      const NaiveWalk rem = naive_walk(m, rem_start, dec.remainder_duration);
      for (int a = 0; a < m.d(); ++a) CHECK(dec.homology.visits[a] + rem.crossings[a] == w.crossings[a]);
    }
  }
}

TEST_CASE("renormalized curves decompose self-similarly") {
  const auto& m = genus2();
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const UnstableCurve g{random_point(m, rng), field_time(m, std::uniform_real_distribution<double>(5.0, 4000.0)(rng))};
    const auto dec = decompose_closest_returns(m, g);
    const auto image = decompose_closest_returns(m, renormalize(m, g, 1));
    REQUIRE(image.items.size() >= dec.items.size());
    for (std::size_t i = 0; i < dec.items.size(); ++i) {
      CHECK(image.items[i].scale == dec.items[i].scale + 1);
      CHECK(image.items[i].cell == dec.items[i].cell);
      CHECK(image.items[i].duration == dec.items[i].duration * m.lambda);
    }
    for (std::size_t i = dec.items.size(); i < image.items.size(); ++i) CHECK(image.items[i].scale == 0);
  }
}

TEST_CASE("c_plus stays below the uniform bound") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    const double bound = c_plus_bound(m);
    CHECK(std::isfinite(bound));
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
      const double T = std::exp(std::uniform_real_distribution<double>(0.0, std::log(1e6))(rng));
      const auto dec = decompose_closest_returns(m, {random_point(m, rng), field_time(m, T)});
      CHECK(c_plus(m, dec).value.norm() <= bound);
    }
  }
}

TEST_CASE("functional is additive, scales with the unstable action, and respects its tail bound") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    std::mt19937_64 rng(31);
    const int N = 30;
    for (int trial = 0; trial < 10; ++trial) {
      const FlowPoint p = random_point(m, rng);
      const FieldElement t1 = field_time(m, std::uniform_real_distribution<double>(10.0, 800.0)(rng));
      const FieldElement t2 = field_time(m, std::uniform_real_distribution<double>(10.0, 800.0)(rng));
      const auto b1 = bufetov_beta(m, {p, t1}, N);
      const auto b2 = bufetov_beta(m, {traverse(m, p, t1).end, t2}, N);
      const auto b12 = bufetov_beta(m, {p, t1 + t2}, N);
      CHECK((b12.value - b1.value - b2.value).norm() <= 3 * b1.tail_bound);
      const auto image = bufetov_beta(m, renormalize(m, {p, t1}, 1), N);
      CHECK((image.value - push_forward(m, b1.value)).norm() <= 2 * b1.tail_bound);
      const auto deeper = bufetov_beta(m, {p, t1}, N + 4);
      CHECK((deeper.value - b1.value).norm() <= b1.tail_bound);
    }
  }
}

TEST_CASE("functional depends only on the crossing data") {
  const auto& m = genus2();
  const FieldElement x = m.field->rational(Rational(BigInt(31415), BigInt(100003)));
  const FieldElement shift = m.field->rational(Rational(BigInt(1), BigInt(1) << 50));
  const FieldElement T = field_time(m, 600.0);
  const UnstableCurve a{base_point(m, x), T}, b{base_point(m, x + shift), T};
  const auto ia = renormalize(m, a, 12), ib = renormalize(m, b, 12);
  const auto ha = crossing_class(m, traverse(m, ia.start, ia.duration));
  const auto hb = crossing_class(m, traverse(m, ib.start, ib.duration));
  REQUIRE(ha == hb);
  const auto va = bufetov_beta(m, a, 12).value, vb = bufetov_beta(m, b, 12).value;
  for (int i = 0; i < va.size(); ++i) CHECK(va(i) == vb(i));
}

TEST_CASE("reconstructed current tracks the curve on the form battery") {
  for (const auto* mp : presets()) {
    const auto& m = *mp;
    const auto battery = form_battery(m);
    REQUIRE(battery.size() == 10);
    for (const auto& f : battery) {
      double norm = 0.0;
      for (int a = 0; a < m.d(); ++a) {
        double sup = 0.0, slope = 0.0;
        for (int i = 0; i <= 400; ++i) {
          const double s = i / 400.0;
          sup = std::max(sup, std::abs(f.profile(a, s)));
          const double ds = 1e-6;
          slope = std::max(slope, std::abs(f.profile(a, std::min(1.0, s + ds)) - f.profile(a, std::max(0.0, s - ds))) /
                                      ((std::min(1.0, s + ds) - std::max(0.0, s - ds)) * m.heights_d[a]));
        }
        norm = std::max(norm, sup + slope);
      }
      CHECK(norm <= 1.0 + 1e-6);
    }
    const FlowPoint p = base_point(m, m.field->rational(Rational(BigInt(12345), BigInt(99991))));
    for (double T : {1e2, 1e4}) CHECK(asymptotic_gap(m, {p, field_time(m, T)}, battery, 30) < 1.0);
  }
}

TEST_CASE("decomposition rejects negative lengths and serializes") {
  const auto& m = golden();
  CHECK_THROWS_AS(decompose_closest_returns(m, {base_point(m, m.field->zero()), m.field->rational(Rational(-1))}), Error);
  const auto dec = decompose_closest_returns(m, {base_point(m, m.field->rational(Rational(1, 3))), field_time(m, 50.0)});
  const auto j = dec.to_json();
  CHECK(j["items"].size() == dec.items.size());
  CHECK(j["multiplicities"].size() == dec.multiplicities.size());
}
