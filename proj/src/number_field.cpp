#include "pa/number_field.hpp"

#include <cmath>

#include <boost/multiprecision/mpfr.hpp>

#include "pa/error.hpp"

namespace pa {

namespace mp = boost::multiprecision;
using Float500 = mp::number<mp::mpfr_float_backend<160>>;   // ~530 bits
using Float3k = mp::number<mp::mpfr_float_backend<1000>>;   // ~3300 bits

struct NumberField::Impl {
  std::vector<Float500> powers500;
  std::vector<Float3k> powers3k;
};

namespace {

template <class F>
F refine_root(const IntPoly& p, double approx) {
  // Newton from the double root; the root is simple because p is irreducible.
  F z = approx;
  const int n = pa::degree(p);
  for (int it = 0; it < 200; ++it) {
    F v = 0, d = 0;
    for (int i = n; i >= 0; --i) {
      d = d * z + v;
      v = v * z + F(p[i].str());
    }
    const F step = v / d;
    z -= step;
    if (step == 0 || abs(step) < abs(z) * std::numeric_limits<F>::epsilon() * 4) break;
  }
  return z;
}

template <class F>
int sign_at(const std::vector<Rational>& c, const std::vector<F>& powers, bool& certain) {
  F acc = 0, mag = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    const F term = F(numerator(c[i]).str()) / F(denominator(c[i]).str()) * powers[i];
    acc += term;
    mag += abs(term);
  }
  const F err = mag * std::numeric_limits<F>::epsilon() * 64;
  certain = abs(acc) > err;
  return acc > 0 ? 1 : (acc < 0 ? -1 : 0);
}

}  // namespace

std::shared_ptr<const NumberField> NumberField::create(IntPoly minpoly, double approx_root) {
  minpoly = trim(std::move(minpoly));
  const int n = pa::degree(minpoly);
  if (n < 1 || minpoly[n] != 1) throw Error(ErrorCode::InvalidArgument, "minimal polynomial must be monic");
  std::shared_ptr<NumberField> f(new NumberField());
  f->minpoly_ = minpoly;
  f->hp_ = std::make_shared<Impl>();
  const Float3k r3k = refine_root<Float3k>(minpoly, approx_root);
  const Float500 r500 = Float500(r3k);
  f->root_d_ = r3k.convert_to<double>();
  if (std::abs(f->root_d_ - approx_root) > 1e-6 * std::max(1.0, std::abs(approx_root)))
    throw Error(ErrorCode::Internal, "root refinement drifted to another root");
  Float500 p500 = 1;
  Float3k p3k = 1;
  for (int i = 0; i < n; ++i) {
    f->powers_d_.push_back(p3k.convert_to<double>());
    f->hp_->powers500.push_back(p500);
    f->hp_->powers3k.push_back(p3k);
    p500 *= r500;
    p3k *= r3k;
  }
  return f;
}

FieldElement NumberField::zero() const { return FieldElement(shared_from_this(), std::vector<Rational>(degree())); }

FieldElement NumberField::one() const { return rational(1); }

FieldElement NumberField::rational(const Rational& q) const {
  std::vector<Rational> c(degree());
  c[0] = q;
  return FieldElement(shared_from_this(), std::move(c));
}

FieldElement NumberField::generator() const {
  if (degree() == 1) return rational(Rational(-minpoly_[0]));
  std::vector<Rational> c(degree());
  c[1] = 1;
  return FieldElement(shared_from_this(), std::move(c));
}

FieldElement NumberField::from_coefficients(std::vector<Rational> c) const {
  if (static_cast<int>(c.size()) != degree()) throw Error(ErrorCode::InvalidArgument, "coefficient count != field degree");
  return FieldElement(shared_from_this(), std::move(c));
}

double NumberField::to_double(const std::vector<Rational>& c) const {
  bool zero = true;
  double acc = 0, mag = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    zero = false;
    const double t = c[i].convert_to<double>() * powers_d_[i];
    acc += t;
    mag += std::abs(t);
  }
  if (zero) return 0.0;
  if (std::abs(acc) >= mag * 0.25) return acc;
  Float500 v = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0)
      v += Float500(numerator(c[i]).str()) / Float500(denominator(c[i]).str()) * hp_->powers500[i];
  return v.convert_to<double>();
}

int NumberField::sign_of(const std::vector<Rational>& c) const {
  double acc = 0, mag = 0;
  bool zero = true;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    zero = false;
    const double t = c[i].convert_to<double>() * powers_d_[i];
    acc += t;
    mag += std::abs(t);
  }
  if (zero) return 0;
  if (std::abs(acc) > mag * 1e-13 + 1e-300) return acc > 0 ? 1 : -1;
  bool certain = false;
  int s = sign_at(c, hp_->powers500, certain);
  if (certain) return s;
  s = sign_at(c, hp_->powers3k, certain);
  if (certain) return s;
  throw Error(ErrorCode::Internal, "sign undecided at 3300 bits");
}

FieldElement::FieldElement(std::shared_ptr<const NumberField> field, std::vector<Rational> coeffs)
    : field_(std::move(field)), c_(std::move(coeffs)) {}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  FieldElement r = *this;
  r += o;
  return r;
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  FieldElement r = *this;
  r -= o;
  return r;
}

FieldElement FieldElement::operator-() const {
  FieldElement r = *this;
  for (auto& c : r.c_) c = -c;
  return r;
}

FieldElement& FieldElement::operator+=(const FieldElement& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

FieldElement& FieldElement::operator-=(const FieldElement& o) {
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  const int n = field_->degree();
  const IntPoly& m = field_->minimal_polynomial();
  std::vector<Rational> prod(2 * n - 1);
  for (int i = 0; i < n; ++i) {
    if (c_[i] == 0) continue;
    for (int j = 0; j < n; ++j)
      if (o.c_[j] != 0) prod[i + j] += c_[i] * o.c_[j];
  }
  // x^n = -sum_{i<n} m_i x^i
  for (int k = 2 * n - 2; k >= n; --k) {
    if (prod[k] == 0) continue;
    const Rational t = prod[k];
    for (int i = 0; i < n; ++i)
      if (m[i] != 0) prod[k - n + i] -= t * Rational(m[i]);
  }
  prod.resize(n);
  return FieldElement(field_, std::move(prod));
}

FieldElement FieldElement::operator*(const Rational& q) const {
  FieldElement r = *this;
  for (auto& c : r.c_) c *= q;
  return r;
}

FieldElement FieldElement::operator/(const FieldElement& o) const { return *this * o.inverse(); }

FieldElement FieldElement::inverse() const {
  if (is_zero()) throw Error(ErrorCode::InvalidArgument, "inverse of zero");
  const int n = field_->degree();
  // Columns of the multiplication-by-this matrix are this * lambda^j.
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1));
  FieldElement basis = field_->one();
  const FieldElement gen = field_->generator();
  for (int j = 0; j < n; ++j) {
    const FieldElement col = *this * basis;
    for (int i = 0; i < n; ++i) a[i][j] = col.c_[i];
    basis = basis * gen;
  }
  a[0][n] = 1;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) throw Error(ErrorCode::Internal, "singular multiplication matrix; polynomial not irreducible?");
    std::swap(a[piv], a[col]);
    for (int r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational f = a[r][col] / a[col][col];
      for (int k = col; k <= n; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<Rational> x(n);
  for (int i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
  return FieldElement(field_, std::move(x));
}

FieldElement FieldElement::pow(int n) const {
  if (n < 0) return inverse().pow(-n);
  FieldElement result = field_->one();
  FieldElement base = *this;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

bool FieldElement::is_zero() const {
  for (const auto& c : c_)
    if (c != 0) return false;
  return true;
}

bool FieldElement::operator==(const FieldElement& o) const { return c_ == o.c_; }

nlohmann::json FieldElement::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : c_) j.push_back(c.str());
  return j;
}

FieldElement FieldElement::from_json(const std::shared_ptr<const NumberField>& field, const nlohmann::json& j) {
  if (!j.is_array() || static_cast<int>(j.size()) != field->degree())
    throw Error(ErrorCode::InvalidArgument, "field element must list one coefficient per basis power");
  std::vector<Rational> c;
  for (const auto& v : j) c.push_back(v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long long>()));
  return field->from_coefficients(std::move(c));
}

std::string FieldElement::to_string() const { return to_json().dump(); }

Rational exact_rational(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value");
  int exp = 0;
  const double mant = std::frexp(v, &exp);
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rational r(scaled);
  const int shift = exp - 53;
  if (shift >= 0) r *= Rational(BigInt(1) << shift);
  else r /= Rational(BigInt(1) << (-shift));
  return r;
}

Rational parse_rational(const std::string& s) {
  if (s.empty()) throw Error(ErrorCode::InvalidArgument, "empty number");
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
    const auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(BigInt(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    const std::size_t frac = s.size() - dot - 1;
    if (digits.empty() || digits == "-" || digits == "+") throw Error(ErrorCode::InvalidArgument, "bad number: " + s);
    BigInt den = 1;
    for (std::size_t i = 0; i < frac; ++i) den *= 10;
    return Rational(BigInt(digits), den);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(ErrorCode::InvalidArgument, "bad number: " + s);
  }
}

}  // namespace pa
