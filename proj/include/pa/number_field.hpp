#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pa/polynomial.hpp"

namespace pa {

class FieldElement;

// Real number field Q(lambda) for a real root lambda of an irreducible monic
// integer polynomial. Elements are rational vectors against 1, lambda, ...,
// lambda^{n-1}; comparisons are exact (adaptive-precision evaluation of a
// nonzero element always terminates with the right sign).
class NumberField : public std::enable_shared_from_this<NumberField> {
 public:
  // `approx_root` selects which real root of `minpoly` is meant.
  static std::shared_ptr<const NumberField> create(IntPoly minpoly, double approx_root);

  int degree() const noexcept { return static_cast<int>(minpoly_.size()) - 1; }
  const IntPoly& minimal_polynomial() const noexcept { return minpoly_; }
  double root() const noexcept { return root_d_; }

  FieldElement zero() const;
  FieldElement one() const;
  FieldElement rational(const Rational& q) const;
  FieldElement generator() const;
  FieldElement from_coefficients(std::vector<Rational> c) const;

  // Sign of sum c_i lambda^i; 0 only for the zero vector.
  int sign_of(const std::vector<Rational>& c) const;
  double to_double(const std::vector<Rational>& c) const;

  struct Impl;

 private:
  NumberField() = default;

  IntPoly minpoly_;
  double root_d_ = 0.0;
  std::vector<double> powers_d_;
  std::shared_ptr<Impl> hp_;
};

class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(std::shared_ptr<const NumberField> field, std::vector<Rational> coeffs);

  const std::shared_ptr<const NumberField>& field() const noexcept { return field_; }
  const std::vector<Rational>& coefficients() const noexcept { return c_; }

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator-() const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator*(const Rational& q) const;
  FieldElement operator/(const FieldElement& o) const;
  FieldElement& operator+=(const FieldElement& o);
  FieldElement& operator-=(const FieldElement& o);
  FieldElement inverse() const;
  FieldElement pow(int n) const;

  bool is_zero() const;
  int sign() const { return field_->sign_of(c_); }
  double to_double() const { return field_->to_double(c_); }

  bool operator==(const FieldElement& o) const;
  bool operator<(const FieldElement& o) const { return (*this - o).sign() < 0; }
  bool operator<=(const FieldElement& o) const { return (*this - o).sign() <= 0; }
  bool operator>(const FieldElement& o) const { return (*this - o).sign() > 0; }
  bool operator>=(const FieldElement& o) const { return (*this - o).sign() >= 0; }

  // Coefficients as strings "p/q", lowest power first.
  nlohmann::json to_json() const;
  static FieldElement from_json(const std::shared_ptr<const NumberField>& field, const nlohmann::json& j);
  std::string to_string() const;

 private:
  std::shared_ptr<const NumberField> field_;
  std::vector<Rational> c_;
};

using FieldVector = std::vector<FieldElement>;

// Exact value of a double as a rational.
Rational exact_rational(double v);
// Parses "p/q", an integer, or a decimal string such as "0.318309886183790671537767526745"
// exactly; used for start points given to arbitrary precision.
Rational parse_rational(const std::string& s);

}  // namespace pa
