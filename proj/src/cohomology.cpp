#include "pa/cohomology.hpp"

#include <algorithm>
#include <cmath>

#include "pa/error.hpp"
#include "pa/number_field.hpp"

namespace pa {

namespace {

constexpr double kModulusGap = 1e-9;

bool is_zero_value(const Rational& q) { return q == 0; }
bool is_zero_value(const FieldElement& x) { return x.is_zero(); }

template <class T>
int exact_rank(std::vector<std::vector<T>> a) {
  const std::size_t rows = a.size(), cols = rows ? a[0].size() : 0;
  int rank = 0;
  for (std::size_t col = 0; col < cols && static_cast<std::size_t>(rank) < rows; ++col) {
    std::size_t piv = rank;
    while (piv < rows && is_zero_value(a[piv][col])) ++piv;
    if (piv == rows) continue;
    std::swap(a[piv], a[rank]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (is_zero_value(a[r][col])) continue;
      const T f = a[r][col] / a[rank][col];
      for (std::size_t k = col; k < cols; ++k) a[r][k] -= f * a[rank][k];
    }
    ++rank;
  }
  return rank;
}

int numeric_rank(const Eigen::MatrixXcd& a, double threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > threshold) ++r;
  return r;
}

Eigen::MatrixXcd shifted(const IntegerMatrix& m, std::complex<double> mu) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXcd a = to_eigen(m).cast<std::complex<double>>();
  a -= mu * Eigen::MatrixXcd::Identity(n, n);
  return a;
}

// Rank of (m - mu I)^p.
int shifted_power_rank(const IntegerMatrix& m, const Eigenvalue& ev, int p, double threshold) {
  const std::size_t n = m.dim();
  if (ev.minpoly && degree(*ev.minpoly) == 1) {
    const Rational mu(-(*ev.minpoly)[0], (*ev.minpoly)[1]);
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = Rational(m(i, j)) - (i == j ? mu : Rational(0));
    std::vector<std::vector<Rational>> pw = a;
    for (int k = 1; k < p; ++k) {
      std::vector<std::vector<Rational>> next(n, std::vector<Rational>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l)
          if (pw[i][l] != 0)
            for (std::size_t j = 0; j < n; ++j) next[i][j] += pw[i][l] * a[l][j];
      pw.swap(next);
    }
    return exact_rank(pw);
  }
  if (ev.minpoly && ev.value.imag() == 0.0 && p == 1) {
    const auto field = NumberField::create(*ev.minpoly, ev.value.real());
    const FieldElement mu = field->generator();
    std::vector<std::vector<FieldElement>> a(n, std::vector<FieldElement>(n, field->zero()));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        a[i][j] = field->rational(Rational(m(i, j)));
        if (i == j) a[i][j] -= mu;
      }
    return exact_rank(a);
  }
  const Eigen::MatrixXcd s = shifted(m, ev.value);
  Eigen::MatrixXcd pw = s;
  for (int k = 1; k < p; ++k) pw = pw * s;
  return numeric_rank(pw, threshold * std::pow(std::max(1.0, s.norm()), p - 1));
}

// Real polynomial prod (x - mu)^a over the given eigenvalues, evaluated at m.
Eigen::MatrixXd spectral_polynomial_at(const Eigen::MatrixXd& m, const std::vector<const Eigenvalue*>& evs) {
  std::vector<std::complex<double>> c{1.0};
  for (const Eigenvalue* ev : evs)
    for (int k = 0; k < ev->algebraic_multiplicity; ++k) {
      std::vector<std::complex<double>> next(c.size() + 1, 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        next[i + 1] += c[i];
        next[i] -= c[i] * ev->value;
      }
      c.swap(next);
    }
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * m + c[i].real() * Eigen::MatrixXd::Identity(n, n);
  return acc;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, int dim) {
  const Eigen::Index n = a.cols();
  if (dim == 0) return Eigen::MatrixXd(n, 0);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a / scale, Eigen::ComputeFullV);
  Eigen::MatrixXd v = svd.matrixV().rightCols(dim);
  // Deterministic orientation: first significant entry of each column positive.
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(v(i, j)) > 1e-8) {
        if (v(i, j) < 0) v.col(j) *= -1.0;
        break;
      }
  }
  return v;
}

Eigen::MatrixXcd complex_null_space(const Eigen::MatrixXcd& a, int dim) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
  Eigen::MatrixXcd v = svd.matrixV().rightCols(dim);
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index best = 0;
    v.col(j).cwiseAbs().maxCoeff(&best);
    v.col(j) *= std::abs(v(best, j)) / v(best, j);
  }
  return v;
}

double restriction_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& e, Eigen::MatrixXd& r) {
  r = e.transpose() * m * e;
  if (e.cols() == 0) return 0.0;
  return (m * e - e * r).colwise().norm().maxCoeff();
}

nlohmann::json poly_json(const IntPoly& p) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : p) j.push_back(c.convert_to<long long>());
  return j;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    cols.push_back(col);
  }
  return cols;
}

nlohmann::json eigenvalue_json(const Eigenvalue& e) {
  nlohmann::json j;
  j["re"] = e.value.real();
  j["im"] = e.value.imag();
  j["minpoly"] = e.minpoly ? poly_json(*e.minpoly) : nlohmann::json(nullptr);
  j["error_bound"] = e.error_bound;
  j["algebraic_multiplicity"] = e.algebraic_multiplicity;
  j["geometric_multiplicity"] = e.geometric_multiplicity;
  return j;
}

}  // namespace

Eigen::MatrixXd to_eigen(const IntegerMatrix& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = static_cast<double>(m(i, j));
  return a;
}

SpectralSplit spectral_split(const IntegerMatrix& m, double tol) {
  if (m.dim() == 0) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  if (!m.is_unimodular()) throw Error(ErrorCode::NotUnimodular, "determinant is " + m.determinant().str());
  SpectralSplit s;
  s.matrix = m;
  s.charpoly = characteristic_polynomial(m);
  const int n = static_cast<int>(m.dim());

  for (const PolyFactor& f : factor_over_integers(s.charpoly)) {
    const bool certified = degree(f.poly) <= 16;
    for (const PolyRoot& r : roots_of(f.poly)) {
      Eigenvalue ev;
      ev.value = r.value;
      if (std::abs(ev.value.imag()) <= std::max(r.error_bound, 1e-12 * std::abs(ev.value))) ev.value.imag(0.0);
      ev.error_bound = r.error_bound;
      if (certified) ev.minpoly = f.poly;
      ev.algebraic_multiplicity = f.multiplicity;
      s.eigenvalues.push_back(ev);
    }
  }
  std::stable_sort(s.eigenvalues.begin(), s.eigenvalues.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
    const double ma = std::abs(a.value), mb = std::abs(b.value);
    if (std::abs(ma - mb) > kModulusGap * std::max(ma, mb)) return ma > mb;
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    return a.value.imag() > b.value.imag();
  });

  const Eigenvalue& top = s.eigenvalues.front();
  const double lam = top.value.real();
  if (top.value.imag() != 0.0 || lam <= 1.0 + kModulusGap || top.algebraic_multiplicity != 1)
    throw Error(ErrorCode::TopEigenvalueNotSimple, "leading eigenvalue is not a simple real root > 1");
  for (std::size_t i = 1; i < s.eigenvalues.size(); ++i)
    if (std::abs(s.eigenvalues[i].value) >= lam * (1.0 - kModulusGap))
      throw Error(ErrorCode::TopEigenvalueNotSimple, "another eigenvalue has the leading modulus");
  s.lambda = lam;
  s.lambda_minpoly = top.minpoly ? *top.minpoly : IntPoly{};
  s.h_top = std::log(lam);

  const double threshold = std::max(tol, 1e-12) * std::max(1.0, to_eigen(m).norm());
  for (Eigenvalue& ev : s.eigenvalues) {
    if (ev.algebraic_multiplicity == 1) {
      ev.geometric_multiplicity = 1;
      ev.exact_rank = true;
      continue;
    }
    ev.exact_rank = ev.minpoly && ev.value.imag() == 0.0;
    ev.geometric_multiplicity = n - shifted_power_rank(m, ev, 1, threshold);
  }

  std::vector<const Eigenvalue*> plus, minus, zero;
  for (const Eigenvalue& ev : s.eigenvalues) {
    const double r = std::abs(ev.value);
    if (r > 1.0 + kModulusGap) plus.push_back(&ev);
    else if (r < 1.0 - kModulusGap) minus.push_back(&ev);
    else zero.push_back(&ev);
  }
  for (const Eigenvalue* ev : plus) s.expanding.push_back(*ev);
  for (const Eigenvalue* ev : zero) {
    s.neutral_multiplicity = std::max(s.neutral_multiplicity, ev->geometric_multiplicity);
    int block = 1;
    const int target = n - ev->algebraic_multiplicity;
    while (block < ev->algebraic_multiplicity && shifted_power_rank(m, *ev, block, threshold) > target) ++block;
    s.neutral_max_block = std::max(s.neutral_max_block, block);
  }

  auto count = [](const std::vector<const Eigenvalue*>& v) {
    int c = 0;
    for (const Eigenvalue* e : v) c += e->algebraic_multiplicity;
    return c;
  };
  const Eigen::MatrixXd md = to_eigen(m);
  s.unstable = null_space(spectral_polynomial_at(md, plus), count(plus));
  s.stable = null_space(spectral_polynomial_at(md, minus), count(minus));
  s.neutral = null_space(spectral_polynomial_at(md, zero), count(zero));
  s.residual = std::max({restriction_residual(md, s.unstable, s.unstable_restriction),
                         restriction_residual(md, s.stable, s.stable_restriction),
                         restriction_residual(md, s.neutral, s.neutral_restriction)});
  if (!(s.residual <= tol))
    throw Error(ErrorCode::InvariantViolation, "splitting residual " + std::to_string(s.residual) + " exceeds tolerance");

  Eigen::MatrixXd basis(n, n);
  basis << s.unstable, s.stable, s.neutral;
  const Eigen::MatrixXd inv = basis.inverse();
  s.unstable_coordinates = inv.topRows(s.unstable.cols());

  int index = 0;
  for (const Eigenvalue* ev : plus) {
    ++index;
    const Eigen::MatrixXcd v = complex_null_space(shifted(m, ev->value), ev->geometric_multiplicity);
    for (int j = 0; j < ev->geometric_multiplicity; ++j) s.jordan_plus.push_back({index, j + 1, v.col(j)});
  }
  index = 0;
  for (auto it = minus.rbegin(); it != minus.rend(); ++it) {
    ++index;
    const Eigen::MatrixXcd v = complex_null_space(shifted(m, (*it)->value), (*it)->geometric_multiplicity);
    for (int j = 0; j < (*it)->geometric_multiplicity; ++j) s.jordan_minus.push_back({index, j + 1, v.col(j)});
  }
  return s;
}

nlohmann::json SpectralSplit::to_json() const {
  nlohmann::json j;
  j["matrix"] = matrix.to_json();
  j["charpoly"] = poly_json(charpoly);
  j["eigenvalues"] = nlohmann::json::array();
  for (const auto& e : eigenvalues) j["eigenvalues"].push_back(eigenvalue_json(e));
  j["lambda"] = lambda;
  j["lambda_minpoly"] = lambda_minpoly.empty() ? nlohmann::json(nullptr) : poly_json(lambda_minpoly);
  j["h_top"] = h_top;
  j["expanding"] = nlohmann::json::array();
  for (std::size_t i = 0; i < expanding.size(); ++i) {
    nlohmann::json e = eigenvalue_json(expanding[i]);
    e["index"] = i + 1;
    j["expanding"].push_back(e);
  }
  j["neutral_multiplicity"] = neutral_multiplicity;
  j["neutral_max_jordan_block"] = neutral_max_block;
  j["dims"] = {{"unstable", unstable.cols()}, {"stable", stable.cols()}, {"neutral", neutral.cols()}};
  j["subspaces"] = {{"unstable", matrix_json(unstable)}, {"stable", matrix_json(stable)}, {"neutral", matrix_json(neutral)}};
  j["residual"] = residual;
  return j;
}

ExponentTable deviation_exponents(const SpectralSplit& s) {
  ExponentTable t;
  for (const Eigenvalue& ev : s.expanding) {
    const double r = std::abs(ev.value);
    if (!t.rows.empty() && std::abs(t.rows.back().modulus - r) <= kModulusGap * r) {
      ExponentRow& row = t.rows.back();
      row.multiplicity = std::max(row.multiplicity, ev.geometric_multiplicity);
      row.max_block = std::max(row.max_block, ev.algebraic_multiplicity - ev.geometric_multiplicity + 1);
      ++row.members;
      continue;
    }
    ExponentRow row;
    row.index = static_cast<int>(t.rows.size()) + 1;
    row.nu = t.rows.empty() ? 1.0 : std::log(r) / s.h_top;
    row.multiplicity = ev.geometric_multiplicity;
    row.max_block = ev.algebraic_multiplicity - ev.geometric_multiplicity + 1;
    row.modulus = r;
    t.rows.push_back(row);
  }
  return t;
}

nlohmann::json ExponentTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"index", r.index}, {"nu", r.nu}, {"J", r.multiplicity}, {"members", r.members}, {"max_block", r.max_block}, {"modulus", r.modulus}});
  return {{"rows", rows_json}};
}

}  // namespace pa
