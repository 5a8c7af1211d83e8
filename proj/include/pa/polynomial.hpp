#pragma once

#include <complex>
#include <vector>

#include "pa/integer_matrix.hpp"

namespace pa {

// Integer polynomial, coefficients from the constant term upwards.
using IntPoly = std::vector<BigInt>;

// det(xI - m) by the division-free Berkowitz recursion.
IntPoly characteristic_polynomial(const IntegerMatrix& m);

int degree(const IntPoly& p);
IntPoly trim(IntPoly p);
IntPoly multiply(const IntPoly& a, const IntPoly& b);
// Exact division; returns false when b does not divide a over the integers.
bool divide_exact(const IntPoly& a, const IntPoly& b, IntPoly& quotient);
std::complex<long double> evaluate(const IntPoly& p, std::complex<long double> z);
std::string to_string(const IntPoly& p);
std::vector<long long> to_int64(const IntPoly& p);

// Cayley-Hamilton evaluation p(m) in exact arithmetic.
BigMatrix evaluate_at_matrix(const IntPoly& p, const IntegerMatrix& m);

struct PolyFactor {
  IntPoly poly;        // primitive, positive leading coefficient
  int multiplicity = 1;
};

// Factorization over the integers for the monic polynomials met here: rational
// roots are split off first, the rest by recombining numerically computed roots
// into integer factors (exhaustive up to degree 16, beyond which the remainder
// is reported as a single factor).
std::vector<PolyFactor> factor_over_integers(const IntPoly& p);

struct PolyRoot {
  std::complex<double> value;
  double error_bound = 0.0;  // radius of a disc certified to contain a root
};

// Roots of an irreducible factor: closed forms for degree 1, 2 and reciprocal
// quartics, otherwise companion-matrix eigenvalues polished by Newton steps.
std::vector<PolyRoot> roots_of(const IntPoly& p);

}  // namespace pa
