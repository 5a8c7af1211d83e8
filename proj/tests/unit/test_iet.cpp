#include "doctest.h"

#include <cmath>

#include "pa/error.hpp"
#include "pa/model.hpp"

using namespace pa;

namespace {

const IetCombinatorics kGenus2{{0, 1, 2, 3}, {3, 2, 1, 0}};
const IetCombinatorics kGolden{{0, 1}, {1, 0}};

// Oracle: Rauzy product by explicit list surgery and plain integer loops.
std::vector<std::vector<long long>> oracle_product(std::vector<int> top, std::vector<int> bot, const std::string& w) {
  const std::size_t n = top.size();
  std::vector<std::vector<long long>> b(n, std::vector<long long>(n, 0));
  for (std::size_t i = 0; i < n; ++i) b[i][i] = 1;
  for (char ch : w) {
    const int a = top.back(), c = bot.back();
    int row, col;
    if (ch == 't') {
      bot.pop_back();
      std::vector<int> nb;
      for (int v : bot) {
        nb.push_back(v);
        if (v == a) nb.push_back(c);
      }
      bot = nb;
      row = a;
      col = c;
    } else {
      top.pop_back();
      std::vector<int> nt;
      for (int v : top) {
        nt.push_back(v);
        if (v == c) nt.push_back(a);
      }
      top = nt;
      row = c;
      col = a;
    }
    // b <- b * (I + e_{row,col}): column col gains column row.
    for (std::size_t i = 0; i < n; ++i) b[i][col] += b[i][row];
  }
  return b;
}

long long det(std::vector<std::vector<long long>> a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  long long s = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::vector<long long>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<long long> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) row.push_back(a[r][c]);
      minor.push_back(row);
    }
    s += (j % 2 ? -1 : 1) * a[0][j] * det(minor);
  }
  return s;
}

// Characteristic polynomial coefficients by evaluating det(xI - B) at d+1
// integer points and Lagrange-interpolating.
std::vector<long long> oracle_charpoly(const std::vector<std::vector<long long>>& b) {
  const int n = static_cast<int>(b.size());
  std::vector<Rational> coeffs(n + 1);
  for (int xi = 0; xi <= n; ++xi) {
    auto a = b;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a[i][j] = (i == j ? xi : 0) - b[i][j];
    const Rational y(det(a));
    // Basis polynomial prod_{j != xi} (x - j) / (xi - j).
    std::vector<Rational> basis{1};
    Rational denom = 1;
    for (int j = 0; j <= n; ++j) {
      if (j == xi) continue;
      std::vector<Rational> next(basis.size() + 1);
      for (std::size_t k = 0; k < basis.size(); ++k) {
        next[k + 1] += basis[k];
        next[k] -= basis[k] * j;
      }
      basis = next;
      denom *= xi - j;
    }
    for (int k = 0; k <= n; ++k) coeffs[k] += y * basis[k] / denom;
  }
  std::vector<long long> out;
  for (const auto& c : coeffs) {
    REQUIRE(denominator(c) == 1);
    out.push_back(numerator(c).convert_to<long long>());
  }
  return out;
}

}  // namespace

TEST_CASE("rotation step subtracts the shorter length") {
  auto q = NumberField::create(IntPoly{-1, 1}, 1.0);
  const FieldVector l{q->rational(Rational(5, 7)), q->rational(Rational(2, 7))};
  const auto st = rauzy_step(kGolden, l, Side::Bottom);
  CHECK(st.lengths[0] == q->rational(Rational(3, 7)));
  CHECK(st.lengths[1] == q->rational(Rational(2, 7)));
  CHECK(st.elementary == IntegerMatrix{{1, 1}, {0, 1}});
  // E * new = old, total length drops by the loser.
  for (int i = 0; i < 2; ++i) {
    FieldElement acc = q->zero();
    for (int j = 0; j < 2; ++j) acc += st.lengths[j] * Rational(st.elementary(i, j));
    CHECK(acc == l[i]);
  }
  CHECK(st.lengths[0] + st.lengths[1] == l[0] + l[1] - l[1]);
}

TEST_CASE("rauzy step errors") {
  auto q = NumberField::create(IntPoly{-1, 1}, 1.0);
  const FieldVector tie{q->rational(Rational(1, 2)), q->rational(Rational(1, 2))};
  try {
    rauzy_step(kGolden, tie, Side::Top);
    FAIL("expected tie error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TieBreakUndefined);
  }
  const FieldVector l{q->rational(Rational(2, 3)), q->rational(Rational(1, 3))};
  try {
    rauzy_step(kGolden, l, Side::Top);
    FAIL("expected wrong side");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongSide);
  }
}

TEST_CASE("random rational steps conserve length") {
  auto q = NumberField::create(IntPoly{-2, 0, 1}, std::sqrt(2.0));
  FieldVector l;
  int k = 1;
  for (int v : {13, 7, 29, 11}) l.push_back(q->rational(Rational(v, 60)) + q->generator() * Rational(k++, 97));
  IetCombinatorics c = kGenus2;
  for (int step = 0; step < 30; ++step) {
    const Side s = rauzy_winner(c, l);
    const auto st = rauzy_step(c, l, s);
    FieldElement before = q->zero(), after = q->zero();
    for (const auto& x : l) before += x;
    for (const auto& x : st.lengths) after += x;
    const FieldElement loser = s == Side::Top ? l[c.bottom.back()] : l[c.top.back()];
    CHECK(after == before - loser);
    c = st.next;
    l = st.lengths;
  }
}

TEST_CASE("combinatorial invariants") {
  CHECK(kGenus2.irreducible());
  CHECK_FALSE((IetCombinatorics{{0, 1, 2}, {1, 0, 2}}).irreducible());
  CHECK(kGenus2.genus() == 2);
  CHECK(kGenus2.cone_angles() == std::vector<int>{3});
  CHECK(kGolden.genus() == 1);
  CHECK(kGolden.cone_angles() == std::vector<int>{1});
  // Gauss-Bonnet on a few more permutations: sum (angle - 1) = 2g - 2 and d = 2g + s - 1.
  for (const IetCombinatorics& c : {IetCombinatorics{{0, 1, 2}, {2, 1, 0}}, IetCombinatorics{{0, 1, 2, 3, 4}, {4, 3, 2, 1, 0}},
                                    IetCombinatorics{{0, 1, 2, 3, 4}, {4, 2, 1, 3, 0}}}) {
    const auto angles = c.cone_angles();
    int excess = 0;
    for (int a : angles) excess += a - 1;
    CHECK(excess == 2 * c.genus() - 2);
    CHECK(c.d() == 2 * c.genus() + static_cast<int>(angles.size()) - 1);
  }
}

TEST_CASE("golden model") {
  const auto m = pa_from_loop(kGolden, "tb", "golden");
  CHECK(std::abs(m.lambda_d() - (3 + std::sqrt(5.0)) / 2) < 1e-14);
  CHECK(m.genus == 1);
  CHECK(renormalization_fixed_point(m));
}

TEST_CASE("genus-2 preset loop") {
  const std::string word = "ttbtbbtb";
  LoopSearchOptions opt;
  CHECK(search_loop(kGenus2, opt) == word);
  const auto m = pa_from_loop(kGenus2, word, "GENUS2_A");
  const auto b = oracle_product(kGenus2.top, kGenus2.bottom, word);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m.matrix(i, j) == b[i][j]);
  const auto cp = oracle_charpoly(b);
  REQUIRE(cp.size() == 5);
  for (int k = 0; k <= 4; ++k) CHECK(m.split.charpoly[k] == cp[k]);
  // Reciprocal with Perron root > 1.
  for (int k = 0; k <= 4; ++k) CHECK(cp[k] == cp[4 - k]);
  CHECK(m.lambda_d() > 1.0);
  const auto t = deviation_exponents(m.split);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].nu > 0.0);
  CHECK(t.rows[1].nu < 1.0);
  CHECK(renormalization_fixed_point(m));
  CHECK(m.genus == 2);
  CHECK(m.d() == 2 * m.genus + static_cast<int>(m.cone_angles.size()) - 1);
}

TEST_CASE("loop errors") {
  try {
    pa_from_loop(kGenus2, "t");
    FAIL("expected LoopNotClosed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LoopNotClosed);
  }
  try {
    pa_from_loop(kGolden, "tt");
    FAIL("expected NotPrimitive");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPrimitive);
  }
}
