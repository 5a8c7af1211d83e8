#include "pa/model.hpp"

#include <cmath>
#include <functional>

#include "pa/error.hpp"

namespace pa {

namespace {

// One nonzero kernel vector of a square matrix over Q(lambda) with a
// one-dimensional kernel.
FieldVector kernel_vector(std::vector<FieldVector> a) {
  const std::size_t n = a.size();
  std::vector<int> pivot_col;
  std::size_t row = 0;
  std::vector<char> is_pivot(n, 0);
  for (std::size_t col = 0; col < n && row < n; ++col) {
    std::size_t piv = row;
    while (piv < n && a[piv][col].is_zero()) ++piv;
    if (piv == n) continue;
    std::swap(a[piv], a[row]);
    const FieldElement inv = a[row][col].inverse();
    for (std::size_t k = col; k < n; ++k) a[row][k] = a[row][k] * inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == row || a[r][col].is_zero()) continue;
      const FieldElement f = a[r][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[row][k];
    }
    pivot_col.push_back(static_cast<int>(col));
    is_pivot[col] = 1;
    ++row;
  }
  if (pivot_col.size() + 1 != n) throw Error(ErrorCode::PerronRootNotSimple, "Perron eigenspace is not one-dimensional");
  const auto& field = a[0][0].field();
  FieldVector v(n, field->zero());
  std::size_t free_col = 0;
  while (is_pivot[free_col]) ++free_col;
  v[free_col] = field->one();
  for (std::size_t r = 0; r < pivot_col.size(); ++r) v[pivot_col[r]] = -a[r][free_col];
  return v;
}

FieldVector perron_vector(const IntegerMatrix& m, const FieldElement& lambda, bool transpose) {
  const std::size_t n = m.dim();
  const auto& field = lambda.field();
  std::vector<FieldVector> a(n, FieldVector(n, field->zero()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = field->rational(Rational(transpose ? m(j, i) : m(i, j)));
      if (i == j) a[i][j] -= lambda;
    }
  return kernel_vector(std::move(a));
}

}  // namespace

const FieldElement& PseudoAnosovModel::lambda_pow(int k) const {
  if (k < -kMaxPower || k > kMaxPower) throw Error(ErrorCode::InvalidArgument, "renormalization depth out of range");
  return powers_[k + kMaxPower];
}

const BigMatrix& PseudoAnosovModel::matrix_power(int k) const {
  if (k < 0 || k > kMaxPower) throw Error(ErrorCode::InvalidArgument, "renormalization depth out of range");
  return matrix_powers_[k];
}

int PseudoAnosovModel::locate(const FieldElement& x) const {
  if (x.sign() < 0 || (x - field->one()).sign() >= 0) throw Error(ErrorCode::InvalidArgument, "point outside the base interval");
  // Rows are short; scan from the right using cheap double checks first.
  const double xd = x.to_double();
  for (int i = d() - 1; i > 0; --i) {
    const int label = combinatorics.top[i];
    if (xd > top_left_d[label] + 1e-9) return label;
    if (xd < top_left_d[label] - 1e-9) continue;
    if ((x - top_left[label]).sign() >= 0) return label;
  }
  return combinatorics.top[0];
}

int PseudoAnosovModel::locate_bottom(const FieldElement& x) const {
  const double xd = x.to_double();
  for (int i = d() - 1; i > 0; --i) {
    const int label = combinatorics.bottom[i];
    if (xd > bottom_left_d[label] + 1e-9) return label;
    if (xd < bottom_left_d[label] - 1e-9) continue;
    if ((x - bottom_left[label]).sign() >= 0) return label;
  }
  return combinatorics.bottom[0];
}

bool PseudoAnosovModel::is_discontinuity(const FieldElement& x) const {
  const double xd = x.to_double();
  for (int i = 1; i < d(); ++i) {
    const int label = combinatorics.top[i];
    if (std::abs(xd - top_left_d[label]) < 1e-9 && x == top_left[label]) return true;
  }
  return false;
}

IntegerMatrix loop_matrix(const IetCombinatorics& c, const std::string& loop) {
  c.validate();
  if (loop.empty()) throw Error(ErrorCode::LoopNotClosed, "empty loop");
  IetCombinatorics cur = c;
  IntegerMatrix b = IntegerMatrix::identity(c.d());
  for (char ch : loop) {
    RauzyMove mv = rauzy_move(cur, side_from_letter(ch));
    b = b * mv.elementary;
    cur = std::move(mv.next);
  }
  if (!(cur == c)) throw Error(ErrorCode::LoopNotClosed, "word '" + loop + "' ends at " + cur.to_string());
  return b;
}

PseudoAnosovModel pa_from_loop(const IetCombinatorics& c, const std::string& loop, const std::string& name) {
  if (!c.irreducible()) throw Error(ErrorCode::InvalidArgument, "combinatorics is reducible");
  PseudoAnosovModel m;
  m.name = name;
  m.combinatorics = c;
  m.loop = loop;
  m.matrix = loop_matrix(c, loop);
  if (!m.matrix.is_primitive()) throw Error(ErrorCode::NotPrimitive, "loop matrix has no strictly positive power");
  try {
    m.split = spectral_split(m.matrix);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TopEigenvalueNotSimple) throw Error(ErrorCode::PerronRootNotSimple, e.what());
    throw;
  }
  if (m.split.lambda_minpoly.empty()) throw Error(ErrorCode::PerronRootNotSimple, "minimal polynomial of the Perron root unavailable");
  m.field = NumberField::create(m.split.lambda_minpoly, m.split.lambda);
  m.lambda = m.field->generator();

  FieldVector l = perron_vector(m.matrix, m.lambda, false);
  FieldElement sum = m.field->zero();
  for (const auto& x : l) sum += x;
  const FieldElement inv_sum = sum.inverse();
  for (auto& x : l) x = x * inv_sum;
  FieldVector h = perron_vector(m.matrix, m.lambda, true);
  FieldElement area = m.field->zero();
  for (int i = 0; i < m.d(); ++i) area += l[i] * h[i];
  const FieldElement inv_area = area.inverse();
  for (auto& x : h) x = x * inv_area;
  for (int i = 0; i < m.d(); ++i)
    if (l[i].sign() <= 0 || h[i].sign() <= 0) throw Error(ErrorCode::Internal, "Perron vector not positive");
  m.lengths = std::move(l);
  m.heights = std::move(h);

  const int n = m.d();
  m.top_left.assign(n, m.field->zero());
  m.bottom_left.assign(n, m.field->zero());
  FieldElement acc = m.field->zero();
  for (int label : c.top) {
    m.top_left[label] = acc;
    acc += m.lengths[label];
  }
  acc = m.field->zero();
  for (int label : c.bottom) {
    m.bottom_left[label] = acc;
    acc += m.lengths[label];
  }
  for (int i = 0; i < n; ++i) {
    m.lengths_d.push_back(m.lengths[i].to_double());
    m.heights_d.push_back(m.heights[i].to_double());
    m.top_left_d.push_back(m.top_left[i].to_double());
    m.bottom_left_d.push_back(m.bottom_left[i].to_double());
  }
  m.c_min = *std::min_element(m.heights_d.begin(), m.heights_d.end());
  m.c_max = *std::max_element(m.heights_d.begin(), m.heights_d.end());
  m.genus = c.genus();
  m.cone_angles = c.cone_angles();

  const FieldElement inv_lambda = m.lambda.inverse();
  m.powers_.assign(2 * PseudoAnosovModel::kMaxPower + 1, m.field->one());
  for (int k = 1; k <= PseudoAnosovModel::kMaxPower; ++k) {
    m.powers_[PseudoAnosovModel::kMaxPower + k] = m.powers_[PseudoAnosovModel::kMaxPower + k - 1] * m.lambda;
    m.powers_[PseudoAnosovModel::kMaxPower - k] = m.powers_[PseudoAnosovModel::kMaxPower - k + 1] * inv_lambda;
  }
  const BigMatrix big = to_big(m.matrix);
  m.matrix_powers_.push_back(to_big(IntegerMatrix::identity(n)));
  for (int k = 1; k <= PseudoAnosovModel::kMaxPower; ++k) m.matrix_powers_.push_back(big_multiply(m.matrix_powers_.back(), big));
  return m;
}

bool renormalization_fixed_point(const PseudoAnosovModel& m) {
  IetCombinatorics c = m.combinatorics;
  FieldVector l = m.lengths;
  for (char ch : m.loop) {
    RauzyStep st = rauzy_step(c, l, side_from_letter(ch));
    c = std::move(st.next);
    l = std::move(st.lengths);
  }
  if (!(c == m.combinatorics)) return false;
  const FieldElement inv = m.lambda.inverse();
  for (int i = 0; i < m.d(); ++i)
    if (!(l[i] == m.lengths[i] * inv)) return false;
  return true;
}

nlohmann::json PseudoAnosovModel::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["combinatorics"] = combinatorics.to_json();
  j["loop"] = loop;
  j["matrix"] = matrix.to_json();
  nlohmann::json mp = nlohmann::json::array();
  for (const auto& c : field->minimal_polynomial()) mp.push_back(c.convert_to<long long>());
  j["minpoly"] = mp;
  j["lambda"] = lambda_d();
  j["genus"] = genus;
  j["cone_angles"] = cone_angles;
  nlohmann::json ls = nlohmann::json::array(), hs = nlohmann::json::array();
  for (const auto& x : lengths) ls.push_back(x.to_json());
  for (const auto& x : heights) hs.push_back(x.to_json());
  j["lengths"] = ls;
  j["heights"] = hs;
  j["lengths_approx"] = lengths_d;
  j["heights_approx"] = heights_d;
  j["return_window"] = {{"c", c_min}, {"C", c_max}};
  return j;
}

std::optional<std::string> search_loop(const IetCombinatorics& c, const LoopSearchOptions& opt) {
  c.validate();
  const int g = c.genus();
  struct Frame {
    IetCombinatorics comb;
    IntegerMatrix product;
  };
  for (int len = 1; len <= opt.max_length; ++len) {
    std::string word(len, 't');
    std::vector<Frame> stack;
    stack.push_back({c, IntegerMatrix::identity(c.d())});
    // Depth-first enumeration in lexicographic order, t before b.
    std::function<std::optional<std::string>(int)> rec = [&](int depth) -> std::optional<std::string> {
      const Frame& f = stack.back();
      if (depth == len) {
        if (!(f.comb == c) || !f.product.is_primitive()) return std::nullopt;
        try {
          const SpectralSplit s = spectral_split(f.product);
          if (opt.require_full_degree && degree(s.lambda_minpoly) != 2 * g) return std::nullopt;
          if (opt.require_secondary_expanding && s.expanding.size() < 2) return std::nullopt;
        } catch (const Error&) {
          return std::nullopt;
        }
        return word;
      }
      for (Side side : {Side::Top, Side::Bottom}) {
        word[depth] = side_letter(side);
        RauzyMove mv = rauzy_move(stack.back().comb, side);
        stack.push_back({std::move(mv.next), stack.back().product * mv.elementary});
        auto r = rec(depth + 1);
        stack.pop_back();
        if (r) return r;
      }
      return std::nullopt;
    };
    if (auto r = rec(0)) return r;
  }
  return std::nullopt;
}

}  // namespace pa
