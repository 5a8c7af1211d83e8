#include "pa/polynomial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "pa/error.hpp"

namespace pa {

IntPoly characteristic_polynomial(const IntegerMatrix& m) {
  const std::size_t n = m.dim();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  const BigMatrix a = to_big(m);
  // q holds the characteristic polynomial of the leading r x r block, highest
  // degree first.
  std::vector<BigInt> q{BigInt(1), BigInt(-a[0][0])};
  for (std::size_t r = 1; r < n; ++r) {
    // Toeplitz column: 1, -a_rr, -R C, -R S C, ..., -R S^{r-1} C.
    std::vector<BigInt> t(r + 2);
    t[0] = 1;
    t[1] = -a[r][r];
    std::vector<BigInt> v(r);  // S^k C
    for (std::size_t i = 0; i < r; ++i) v[i] = a[i][r];
    for (std::size_t k = 0; k < r; ++k) {
      BigInt dot = 0;
      for (std::size_t i = 0; i < r; ++i) dot += a[r][i] * v[i];
      t[k + 2] = -dot;
      std::vector<BigInt> next(r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) next[i] += a[i][j] * v[j];
      v.swap(next);
    }
    std::vector<BigInt> out(r + 2);
    for (std::size_t i = 0; i < r + 2; ++i)
      for (std::size_t j = 0; j <= std::min(i, r); ++j) out[i] += t[i - j] * q[j];
    q.swap(out);
  }
  std::reverse(q.begin(), q.end());
  return q;
}

int degree(const IntPoly& p) {
  for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
    if (p[i] != 0) return i;
  return -1;
}

IntPoly trim(IntPoly p) {
  p.resize(static_cast<std::size_t>(std::max(degree(p), 0)) + 1);
  return p;
}

IntPoly multiply(const IntPoly& a, const IntPoly& b) {
  IntPoly c(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return trim(c);
}

bool divide_exact(const IntPoly& a, const IntPoly& b, IntPoly& quotient) {
  const int da = degree(a), db = degree(b);
  if (db < 0) throw Error(ErrorCode::InvalidArgument, "division by zero polynomial");
  if (da < db) {
    quotient = IntPoly{0};
    return da < 0;
  }
  IntPoly r = a;
  IntPoly q(static_cast<std::size_t>(da - db) + 1);
  const BigInt& lead = b[db];
  for (int k = da - db; k >= 0; --k) {
    const BigInt& top = r[k + db];
    if (top % lead != 0) return false;
    q[k] = top / lead;
    if (q[k] != 0)
      for (int j = 0; j <= db; ++j) r[k + j] -= q[k] * b[j];
  }
  if (degree(r) >= 0) return false;
  quotient = trim(q);
  return true;
}

std::complex<long double> evaluate(const IntPoly& p, std::complex<long double> z) {
  std::complex<long double> acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z + static_cast<long double>(*it);
  return acc;
}

std::string to_string(const IntPoly& p) {
  std::ostringstream os;
  bool first = true;
  for (int i = degree(p); i >= 0; --i) {
    if (p[i] == 0) continue;
    BigInt c = p[i];
    os << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
    if (c < 0) c = -c;
    if (c != 1 || i == 0) os << c;
    if (i >= 1) os << "x";
    if (i >= 2) os << "^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

std::vector<long long> to_int64(const IntPoly& p) {
  std::vector<long long> out;
  for (const auto& c : p) out.push_back(c.convert_to<long long>());
  return out;
}

BigMatrix evaluate_at_matrix(const IntPoly& p, const IntegerMatrix& m) {
  const std::size_t n = m.dim();
  const BigMatrix a = to_big(m);
  BigMatrix acc(n, std::vector<BigInt>(n));
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    acc = big_multiply(acc, a);
    for (std::size_t i = 0; i < n; ++i) acc[i][i] += *it;
  }
  return acc;
}

namespace {

std::complex<long double> derivative_at(const IntPoly& p, std::complex<long double> z) {
  std::complex<long double> acc = 0;
  for (int i = degree(p); i >= 1; --i) acc = acc * z + static_cast<long double>(p[i]) * static_cast<long double>(i);
  return acc;
}

std::vector<std::complex<long double>> numeric_roots(const IntPoly& p) {
  const int n = degree(p);
  std::vector<std::complex<long double>> roots;
  if (n <= 0) return roots;
  const double lead = p[n].convert_to<double>();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -p[i].convert_to<double>() / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  for (int i = 0; i < n; ++i) {
    std::complex<long double> z(solver.eigenvalues()[i].real(), solver.eigenvalues()[i].imag());
    for (int it = 0; it < 8; ++it) {
      const auto d = derivative_at(p, z);
      if (std::abs(d) < 1e-30L) break;
      const auto step = evaluate(p, z) / d;
      z -= step;
      if (std::abs(step) <= 1e-19L * std::max<long double>(1.0L, std::abs(z))) break;
    }
    roots.push_back(z);
  }
  return roots;
}

PolyRoot certify(const IntPoly& p, std::complex<long double> z) {
  const int n = degree(p);
  const auto d = derivative_at(p, z);
  const auto v = evaluate(p, z);
  double bound = std::abs(d) > 0 ? static_cast<double>(n * std::abs(v) / std::abs(d)) : INFINITY;
  // Rounding in the evaluation itself.
  bound += 4.0 * std::numeric_limits<double>::epsilon() * std::abs(static_cast<std::complex<double>>(z));
  return PolyRoot{std::complex<double>(static_cast<double>(z.real()), static_cast<double>(z.imag())), bound};
}

std::vector<BigInt> divisors(BigInt v) {
  if (v < 0) v = -v;
  std::vector<BigInt> out;
  if (v > 1000000) return {BigInt(1)};
  const long long n = v.convert_to<long long>();
  for (long long d = 1; d * d <= n; ++d)
    if (n % d == 0) {
      out.emplace_back(d);
      if (d * d != n) out.emplace_back(n / d);
    }
  return out;
}

void add_factor(std::vector<PolyFactor>& out, const IntPoly& f) {
  for (auto& pf : out)
    if (pf.poly == f) {
      ++pf.multiplicity;
      return;
    }
  out.push_back({f, 1});
}

}  // namespace

std::vector<PolyFactor> factor_over_integers(const IntPoly& p_in) {
  IntPoly p = trim(p_in);
  if (degree(p) < 1) throw Error(ErrorCode::InvalidArgument, "cannot factor a constant");
  std::vector<PolyFactor> out;

  // Integer roots (monic input: rational roots are integers dividing p(0)).
  while (degree(p) >= 1) {
    bool found = false;
    if (p[0] == 0) {
      IntPoly q;
      divide_exact(p, IntPoly{0, 1}, q);
      add_factor(out, IntPoly{0, 1});
      p = q;
      continue;
    }
    for (const BigInt& d : divisors(p[0])) {
      for (int s : {1, -1}) {
        IntPoly lin{BigInt(-s * d), BigInt(1)};
        IntPoly q;
        if (divide_exact(p, lin, q)) {
          add_factor(out, lin);
          p = q;
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) break;
  }

  // Recombine numeric roots into integer factors of smallest degree first.
  while (degree(p) >= 2) {
    const int n = degree(p);
    if (n > 16) {
      add_factor(out, p);
      p = IntPoly{1};
      break;
    }
    const auto roots = numeric_roots(p);
    bool split = false;
    for (int size = 1; size <= n / 2 && !split; ++size) {
      for (unsigned mask = 1; mask < (1U << n) && !split; ++mask) {
        if (std::popcount(mask) != size) continue;
        std::vector<std::complex<long double>> prod{1.0L};
        for (int i = 0; i < n; ++i) {
          if (!(mask & (1U << i))) continue;
          std::vector<std::complex<long double>> next(prod.size() + 1, 0.0L);
          for (std::size_t k = 0; k < prod.size(); ++k) {
            next[k + 1] += prod[k];
            next[k] -= prod[k] * roots[i];
          }
          prod.swap(next);
        }
        IntPoly cand(prod.size());
        bool integral = true;
        for (std::size_t k = 0; k < prod.size() && integral; ++k) {
          const long double re = prod[k].real(), im = prod[k].imag();
          const long double r = std::round(re);
          const long double tol = 1e-6L * std::max<long double>(1.0L, std::abs(re));
          if (std::abs(im) > tol || std::abs(re - r) > tol || std::abs(r) > 9e18L) integral = false;
          else cand[k] = static_cast<long long>(r);
        }
        if (!integral) continue;
        IntPoly q;
        if (divide_exact(p, cand, q)) {
          add_factor(out, cand);
          p = q;
          split = true;
        }
      }
    }
    if (!split) {
      add_factor(out, p);
      p = IntPoly{1};
    }
  }
  if (degree(p) == 1) add_factor(out, p);

  std::sort(out.begin(), out.end(), [](const PolyFactor& a, const PolyFactor& b) {
    if (degree(a.poly) != degree(b.poly)) return degree(a.poly) < degree(b.poly);
    return a.poly < b.poly;
  });
  return out;
}

std::vector<PolyRoot> roots_of(const IntPoly& p_in) {
  const IntPoly p = trim(p_in);
  const int n = degree(p);
  using C = std::complex<long double>;
  std::vector<C> z;
  if (n == 1) {
    z.push_back(C(-static_cast<long double>(p[0]) / static_cast<long double>(p[1])));
  } else if (n == 2) {
    const long double a = static_cast<long double>(p[2]), b = static_cast<long double>(p[1]),
                      c = static_cast<long double>(p[0]);
    const C disc = std::sqrt(C(b * b - 4 * a * c));
    // Stable pairing of the two roots.
    const C q = -0.5L * (C(b) + (b >= 0 ? disc : -disc));
    z.push_back(q / a);
    z.push_back(std::abs(q) > 0 ? C(c) / q : C(0));
  } else if (n == 4 && p[4] == 1 && p[0] == 1 && p[1] == p[3]) {
    // x^4 + a x^3 + b x^2 + a x + 1: with y = x + 1/x, y^2 + a y + (b - 2) = 0.
    const long double a = static_cast<long double>(p[3]), b = static_cast<long double>(p[2]);
    const C disc = std::sqrt(C(a * a - 4 * (b - 2)));
    for (const C y : {(-a + disc) / 2.0L, (-a - disc) / 2.0L}) {
      const C d2 = std::sqrt(y * y - 4.0L);
      z.push_back((y + d2) / 2.0L);
      z.push_back((y - d2) / 2.0L);
    }
  } else {
    z = numeric_roots(p);
  }
  std::vector<PolyRoot> out;
  for (const auto& r : z) out.push_back(certify(p, r));
  return out;
}

}  // namespace pa
