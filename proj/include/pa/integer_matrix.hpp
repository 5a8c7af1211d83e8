#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <boost/multiprecision/gmp.hpp>
#include <nlohmann/json.hpp>

namespace pa {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

// Square matrix with exact 64-bit entries. Products are overflow-checked.
class IntegerMatrix {
 public:
  IntegerMatrix() = default;
  explicit IntegerMatrix(std::size_t dim);
  IntegerMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows);

  static IntegerMatrix identity(std::size_t dim);
  static IntegerMatrix elementary(std::size_t dim, std::size_t row, std::size_t col);
  static IntegerMatrix block_diagonal(const IntegerMatrix& a, const IntegerMatrix& b);

  std::size_t dim() const noexcept { return dim_; }
  std::int64_t operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
  std::int64_t& operator()(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
  const std::vector<std::int64_t>& entries() const noexcept { return a_; }

  IntegerMatrix operator*(const IntegerMatrix& rhs) const;
  bool operator==(const IntegerMatrix& rhs) const = default;

  IntegerMatrix transpose() const;
  IntegerMatrix power(unsigned n) const;
  std::int64_t trace() const;
  BigInt determinant() const;
  bool is_unimodular() const;
  bool is_nonnegative() const;
  // Some power has strictly positive entries (Wielandt bound (d-1)^2+1).
  bool is_primitive() const;
  std::vector<std::int64_t> column_sums() const;

  nlohmann::json to_json() const;
  static IntegerMatrix from_json(const nlohmann::json& j);
  std::string to_string() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::int64_t> a_;
};

// Exact big-integer matrix used where powers outgrow 64 bits.
using BigMatrix = std::vector<std::vector<BigInt>>;
BigMatrix to_big(const IntegerMatrix& m);
BigMatrix big_multiply(const BigMatrix& a, const BigMatrix& b);

}  // namespace pa
