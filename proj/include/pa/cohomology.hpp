#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pa/integer_matrix.hpp"
#include "pa/polynomial.hpp"

namespace pa {

struct Eigenvalue {
  std::complex<double> value;
  double error_bound = 0.0;
  // Irreducible integer factor of the characteristic polynomial containing
  // this root; absent when the factor could not be certified irreducible.
  std::optional<IntPoly> minpoly;
  int algebraic_multiplicity = 1;
  int geometric_multiplicity = 1;
  bool exact_rank = false;  // geometric multiplicity from exact arithmetic
};

struct JordanVector {
  int index = 0;  // position in the expanding (or contracting) family, from 1
  int chain = 0;  // 1..J_i
  Eigen::VectorXcd vector;
};

struct SpectralSplit {
  IntegerMatrix matrix;
  IntPoly charpoly;
  std::vector<Eigenvalue> eigenvalues;  // decreasing modulus, conjugate pairs adjacent
  double lambda = 0.0;
  IntPoly lambda_minpoly;
  double h_top = 0.0;
  std::vector<Eigenvalue> expanding;  // |mu| > 1, lambda first
  int neutral_multiplicity = 0;       // max geometric multiplicity on the unit circle
  int neutral_max_block = 0;          // largest Jordan block on the unit circle
  // Real bases (columns) of the unstable, stable and neutral subspaces.
  Eigen::MatrixXd unstable, stable, neutral;
  Eigen::MatrixXd unstable_restriction, stable_restriction, neutral_restriction;
  // Rows map a vector to its unstable-basis coordinates along stable + neutral.
  Eigen::MatrixXd unstable_coordinates;
  std::vector<JordanVector> jordan_plus, jordan_minus;
  double residual = 0.0;

  int dim() const { return static_cast<int>(matrix.dim()); }
  // Projection onto the unstable subspace along the others, in unstable coordinates.
  Eigen::VectorXd unstable_part(const Eigen::VectorXd& v) const { return unstable_coordinates * v; }
  nlohmann::json to_json() const;
};

// Throws NotUnimodular or TopEigenvalueNotSimple.
SpectralSplit spectral_split(const IntegerMatrix& m, double tol = 1e-9);

struct ExponentRow {
  int index = 1;
  double nu = 1.0;
  int multiplicity = 1;  // J_i: max geometric multiplicity in the modulus group
  int members = 1;       // eigenvalues sharing this modulus
  int max_block = 1;     // largest possible Jordan block: algebraic - geometric + 1
  double modulus = 0.0;
};

struct ExponentTable {
  std::vector<ExponentRow> rows;
  nlohmann::json to_json() const;
};

ExponentTable deviation_exponents(const SpectralSplit& s);

Eigen::MatrixXd to_eigen(const IntegerMatrix& m);

}  // namespace pa
