#include "pa/integer_matrix.hpp"

#include <sstream>

#include "pa/error.hpp"

namespace pa {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::InvalidArgument, "integer matrix overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::InvalidArgument, "integer matrix overflow");
  return r;
}

}  // namespace

IntegerMatrix::IntegerMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0) {}

IntegerMatrix::IntegerMatrix(std::initializer_list<std::initializer_list<std::int64_t>> rows)
    : dim_(rows.size()) {
  for (const auto& row : rows) {
    if (row.size() != dim_) throw Error(ErrorCode::InvalidArgument, "matrix must be square");
    a_.insert(a_.end(), row.begin(), row.end());
  }
}

IntegerMatrix IntegerMatrix::identity(std::size_t dim) {
  IntegerMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1;
  return m;
}

IntegerMatrix IntegerMatrix::elementary(std::size_t dim, std::size_t row, std::size_t col) {
  IntegerMatrix m = identity(dim);
  m(row, col) += 1;
  return m;
}

IntegerMatrix IntegerMatrix::block_diagonal(const IntegerMatrix& a, const IntegerMatrix& b) {
  IntegerMatrix m(a.dim() + b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) m(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) m(a.dim() + i, a.dim() + j) = b(i, j);
  return m;
}

IntegerMatrix IntegerMatrix::operator*(const IntegerMatrix& rhs) const {
  if (rhs.dim_ != dim_) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  IntegerMatrix out(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t k = 0; k < dim_; ++k) {
      const std::int64_t aik = (*this)(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < dim_; ++j) out(i, j) = checked_add(out(i, j), checked_mul(aik, rhs(k, j)));
    }
  return out;
}

IntegerMatrix IntegerMatrix::transpose() const {
  IntegerMatrix t(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

IntegerMatrix IntegerMatrix::power(unsigned n) const {
  IntegerMatrix result = identity(dim_);
  IntegerMatrix base = *this;
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

std::int64_t IntegerMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < dim_; ++i) t = checked_add(t, (*this)(i, i));
  return t;
}

// Bareiss fraction-free elimination.
BigInt IntegerMatrix::determinant() const {
  if (dim_ == 0) return BigInt(1);
  BigMatrix m = to_big(*this);
  BigInt prev = 1;
  int sign = 1;
  const std::size_t n = dim_;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && m[p][k] == 0) ++p;
      if (p == n) return BigInt(0);
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
    prev = m[k][k];
  }
  return sign * m[n - 1][n - 1];
}

bool IntegerMatrix::is_unimodular() const {
  const BigInt d = determinant();
  return d == 1 || d == -1;
}

bool IntegerMatrix::is_nonnegative() const {
  for (auto v : a_)
    if (v < 0) return false;
  return true;
}

bool IntegerMatrix::is_primitive() const {
  if (!is_nonnegative() || dim_ == 0) return false;
  // Work on the zero pattern only so that large powers cannot overflow.
  const std::size_t n = dim_;
  std::vector<char> pattern(n * n), power(n * n);
  for (std::size_t i = 0; i < n * n; ++i) pattern[i] = power[i] = a_[i] > 0;
  const std::size_t bound = (n - 1) * (n - 1) + 1;
  for (std::size_t step = 1; step <= bound; ++step) {
    bool all = true;
    for (char c : power) all = all && c;
    if (all) return true;
    std::vector<char> next(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (power[i * n + k])
          for (std::size_t j = 0; j < n; ++j)
            if (pattern[k * n + j]) next[i * n + j] = 1;
    power.swap(next);
  }
  return false;
}

std::vector<std::int64_t> IntegerMatrix::column_sums() const {
  std::vector<std::int64_t> s(dim_, 0);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) s[j] = checked_add(s[j], (*this)(i, j));
  return s;
}

nlohmann::json IntegerMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < dim_; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < dim_; ++j) row.push_back((*this)(i, j));
    rows.push_back(row);
  }
  return rows;
}

IntegerMatrix IntegerMatrix::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::InvalidArgument, "matrix must be a non-empty array of rows");
  IntegerMatrix m(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != j.size())
      throw Error(ErrorCode::InvalidArgument, "matrix must be square");
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!row[k].is_number_integer()) throw Error(ErrorCode::InvalidArgument, "matrix entries must be integers");
      m(i, k) = row[k].get<std::int64_t>();
    }
  }
  return m;
}

std::string IntegerMatrix::to_string() const { return to_json().dump(); }

BigMatrix to_big(const IntegerMatrix& m) {
  BigMatrix b(m.dim(), std::vector<BigInt>(m.dim()));
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) b[i][j] = m(i, j);
  return b;
}

BigMatrix big_multiply(const BigMatrix& a, const BigMatrix& b) {
  const std::size_t n = a.size();
  BigMatrix c(n, std::vector<BigInt>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

}  // namespace pa
