#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "pa/cohomology.hpp"
#include "pa/error.hpp"

using namespace pa;

namespace {

// Symplectic transvection x -> x + w(v, x) v for the standard form on Z^4.
IntegerMatrix transvection(const std::vector<long long>& v) {
  const int n = 4;
  IntegerMatrix t = IntegerMatrix::identity(n);
  // w(v, x) = v0 x2 + v1 x3 - v2 x0 - v3 x1
  const long long row[4] = {-v[2], -v[3], v[0], v[1]};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) += v[i] * row[j];
  return t;
}

IntegerMatrix block_cat_identity() {
  return IntegerMatrix::block_diagonal(IntegerMatrix{{2, 1}, {1, 1}}, IntegerMatrix::identity(2));
}

}  // namespace

TEST_CASE("cat map split") {
  const auto s = spectral_split(IntegerMatrix{{2, 1}, {1, 1}});
  const double lam = (3 + std::sqrt(5.0)) / 2;
  CHECK(std::abs(s.lambda - lam) < 1e-14);
  CHECK(std::abs(s.h_top - std::log(lam)) < 1e-14);
  CHECK(s.unstable.cols() == 1);
  CHECK(s.stable.cols() == 1);
  CHECK(s.neutral.cols() == 0);
  CHECK(s.neutral_multiplicity == 0);
  // Unstable direction has slope (sqrt5 - 1)/2.
  CHECK(std::abs(s.unstable(1, 0) / s.unstable(0, 0) - (std::sqrt(5.0) - 1) / 2) < 1e-14);
  CHECK(s.lambda_minpoly == IntPoly{1, -3, 1});
}

TEST_CASE("identity block gives a two-dimensional neutral space") {
  const IntegerMatrix m = block_cat_identity();
  const auto s = spectral_split(m);
  CHECK(s.neutral.cols() == 2);
  // Oracle: geometric multiplicity of 1 = 4 - rank(M - I) from a full-pivot LU.
  Eigen::MatrixXd a = to_eigen(m) - Eigen::MatrixXd::Identity(4, 4);
  const int geo = 4 - static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(a).rank());
  CHECK(geo == 2);
  CHECK(s.neutral_multiplicity == geo);
  CHECK(s.neutral_max_block == 1);
}

TEST_CASE("unipotent neutral block reports multiplicity one and block two") {
  const IntegerMatrix m = IntegerMatrix::block_diagonal(IntegerMatrix{{2, 1}, {1, 1}}, IntegerMatrix{{1, 1}, {0, 1}});
  const auto s = spectral_split(m);
  CHECK(s.neutral_multiplicity == 1);
  CHECK(s.neutral_max_block == 2);
}

TEST_CASE("rotation-only matrix has no expanding eigenvalue") {
  CHECK_THROWS_WITH_AS(spectral_split(IntegerMatrix{{0, -1}, {1, 0}}), doctest::Contains("TopEigenvalueNotSimple"), Error);
  CHECK_THROWS_AS(spectral_split(IntegerMatrix::identity(3)), Error);
}

TEST_CASE("non-unimodular matrix rejected") {
  try {
    spectral_split(IntegerMatrix{{2, 1}, {1, 2}});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotUnimodular);
  }
}

TEST_CASE("repeated leading eigenvalue rejected") {
  const IntegerMatrix cat{{2, 1}, {1, 1}};
  try {
    spectral_split(IntegerMatrix::block_diagonal(cat, cat));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TopEigenvalueNotSimple);
  }
}

TEST_CASE("exponent table of the cat map") {
  const auto t = deviation_exponents(spectral_split(IntegerMatrix{{2, 1}, {1, 1}}));
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].index == 1);
  CHECK(t.rows[0].nu == 1.0);
  CHECK(t.rows[0].multiplicity == 1);
}

TEST_CASE("random symplectic matrices: reciprocity, Cayley-Hamilton, residuals") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> coef(-1, 1);
  int tested = 0;
  for (int trial = 0; trial < 2000 && tested < 60; ++trial) {
    IntegerMatrix m = IntegerMatrix::identity(4);
    for (int k = 0; k < 8; ++k) {
      std::vector<long long> v(4);
      for (auto& x : v) x = coef(rng);
      m = m * transvection(v);
    }
    SpectralSplit s;
    try {
      s = spectral_split(m);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TopEigenvalueNotSimple);
      continue;
    }
    ++tested;
    std::vector<double> mods, inv;
    for (const auto& e : s.eigenvalues)
      for (int a = 0; a < e.algebraic_multiplicity; ++a) {
        mods.push_back(std::abs(e.value));
        inv.push_back(1.0 / std::abs(e.value));
      }
    std::sort(mods.begin(), mods.end());
    std::sort(inv.begin(), inv.end());
    REQUIRE(mods.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(mods[i] - inv[i]) < 1e-9);

    const BigMatrix ch = evaluate_at_matrix(s.charpoly, m);
    for (const auto& row : ch)
      for (const auto& x : row) CHECK(x == 0);

    CHECK(s.unstable.cols() + s.stable.cols() + s.neutral.cols() == 4);
    const Eigen::MatrixXd md = to_eigen(m);
    CHECK((md * s.unstable - s.unstable * s.unstable_restriction).norm() <= 1e-9);
    CHECK((md * s.stable - s.stable * s.stable_restriction).norm() <= 1e-9);

    const auto t = deviation_exponents(s);
    CHECK(t.rows[0].nu == 1.0);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
      CHECK(t.rows[i].nu > 0.0);
      CHECK(t.rows[i].nu < 1.0);
      CHECK(t.rows[i].nu < t.rows[i - 1].nu);
    }
  }
  CHECK(tested >= 20);
}

TEST_CASE("split is deterministic") {
  const IntegerMatrix b{{1, 1, 1, 1}, {1, 2, 0, 0}, {0, 0, 2, 1}, {2, 3, 2, 2}};
  CHECK(spectral_split(b).to_json().dump() == spectral_split(b).to_json().dump());
}

TEST_CASE("unstable coordinates annihilate stable and neutral vectors") {
  const auto s = spectral_split(block_cat_identity());
  CHECK((s.unstable_coordinates * s.stable).norm() < 1e-12);
  CHECK((s.unstable_coordinates * s.neutral).norm() < 1e-12);
  CHECK((s.unstable_coordinates * s.unstable - Eigen::MatrixXd::Identity(1, 1)).norm() < 1e-12);
}

TEST_CASE("spectrum json carries minimal polynomials") {
  const auto j = spectral_split(IntegerMatrix{{2, 1}, {1, 1}}).to_json();
  CHECK(j["eigenvalues"][0]["minpoly"] == nlohmann::json::array({1, -3, 1}));
  CHECK(j["neutral_multiplicity"] == 0);
}
