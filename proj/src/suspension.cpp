#include "pa/suspension.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "pa/error.hpp"

namespace pa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* kind_name(ProfileTerm::Kind k) {
  switch (k) {
    case ProfileTerm::Kind::Poly: return "poly";
    case ProfileTerm::Kind::Cos: return "cos";
    case ProfileTerm::Kind::Sin: return "sin";
  }
  return "poly";
}

ProfileTerm::Kind kind_from(const std::string& s) {
  if (s == "poly") return ProfileTerm::Kind::Poly;
  if (s == "cos") return ProfileTerm::Kind::Cos;
  if (s == "sin") return ProfileTerm::Kind::Sin;
  throw Error(ErrorCode::InvalidArgument, "unknown profile kind '" + s + "'");
}

// Antiderivative of s^p e^{i w s}, by repeated integration by parts.
std::complex<double> oscillatory_antiderivative(int p, double w, double s) {
  const std::complex<double> iw(0.0, w);
  std::complex<double> sum = 0.0;
  double falling = 1.0;  // p! / (p - j)!
  std::complex<double> denom = iw;
  for (int j = 0; j <= p; ++j) {
    sum += (j % 2 ? -1.0 : 1.0) * falling * std::pow(s, p - j) / denom;
    falling *= p - j;
    denom *= iw;
  }
  return std::exp(iw * s) * sum;
}

double term_antiderivative(const ProfileTerm& t, double s) {
  if (t.kind == ProfileTerm::Kind::Poly || t.freq == 0) {
    const double base = std::pow(s, t.power + 1) / (t.power + 1);
    return t.kind == ProfileTerm::Kind::Sin ? 0.0 : t.coeff * base;
  }
  const std::complex<double> a = oscillatory_antiderivative(t.power, kTwoPi * t.freq, s);
  return t.coeff * (t.kind == ProfileTerm::Kind::Cos ? a.real() : a.imag());
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

}  // namespace

FlowPoint base_point(const PseudoAnosovModel& m, const FieldElement& x) { return {m.locate(x), x, m.field->zero()}; }

FlowPoint make_point(const PseudoAnosovModel& m, const FieldElement& x, const FieldElement& y) {
  FlowPoint p = base_point(m, x);
  if (y.sign() < 0 || (y - m.heights[p.cell]).sign() >= 0) throw Error(ErrorCode::InvalidArgument, "height outside the rectangle");
  p.y = y;
  return p;
}

FlowPoint flow_step(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& dt) {
  if (dt.sign() < 0) throw Error(ErrorCode::InvalidArgument, "negative flow time");
  FlowPoint q = p;
  FieldElement rem = dt;
  while (true) {
    const FieldElement to_top = m.heights[q.cell] - q.y;
    if (rem < to_top) {
      q.y += rem;
      return q;
    }
    rem -= to_top;
    q.x = m.exchange(q.x, q.cell);
    q.cell = m.locate(q.x);
    q.y = m.field->zero();
    if (m.is_discontinuity(q.x)) throw Error(ErrorCode::HitSingularity, "orbit reached a separatrix at base point " + q.x.to_string());
  }
}

double CellObservable::profile(int cell, double s) const {
  double v = 0.0;
  for (const auto& t : cells.at(cell)) {
    const double poly = std::pow(s, t.power);
    switch (t.kind) {
      case ProfileTerm::Kind::Poly: v += t.coeff * poly; break;
      case ProfileTerm::Kind::Cos: v += t.coeff * poly * std::cos(kTwoPi * t.freq * s); break;
      case ProfileTerm::Kind::Sin: v += t.coeff * poly * std::sin(kTwoPi * t.freq * s); break;
    }
  }
  return v;
}

double CellObservable::profile_integral(int cell, double s0, double s1) const {
  double v = 0.0;
  for (const auto& t : cells.at(cell)) v += term_antiderivative(t, s1) - term_antiderivative(t, s0);
  return v;
}

double CellObservable::sup_bound() const {
  double best = 0.0;
  for (const auto& c : cells) {
    double s = 0.0;
    for (const auto& t : c) s += std::abs(t.coeff);
    best = std::max(best, s);
  }
  return best;
}

CellObservable CellObservable::constant(int d, double c) {
  CellObservable f;
  f.cells.assign(d, {ProfileTerm{c, 0, ProfileTerm::Kind::Poly, 0}});
  return f;
}

CellObservable CellObservable::random(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CellObservable f;
  f.cells.resize(d);
  for (int a = 0; a < d; ++a) {
    f.cells[a].push_back({uniform(rng), 0, ProfileTerm::Kind::Poly, 0});
    f.cells[a].push_back({uniform(rng), 1, ProfileTerm::Kind::Poly, 0});
    f.cells[a].push_back({uniform(rng), 0, ProfileTerm::Kind::Cos, 1});
    f.cells[a].push_back({uniform(rng), 0, ProfileTerm::Kind::Sin, 1});
    f.cells[a].push_back({0.5 * uniform(rng), 1, ProfileTerm::Kind::Cos, 2});
  }
  return f;
}

nlohmann::json CellObservable::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : c) terms.push_back({{"coeff", t.coeff}, {"power", t.power}, {"kind", kind_name(t.kind)}, {"freq", t.freq}});
    cj.push_back(terms);
  }
  return {{"cells", cj}};
}

CellObservable CellObservable::from_json(const nlohmann::json& j) {
  CellObservable f;
  for (const auto& c : j.at("cells")) {
    std::vector<ProfileTerm> terms;
    for (const auto& t : c) {
      ProfileTerm pt;
      pt.coeff = t.at("coeff").get<double>();
      pt.power = t.value("power", 0);
      pt.kind = kind_from(t.value("kind", std::string("poly")));
      pt.freq = t.value("freq", 0);
      if (pt.power < 0 || pt.freq < 0) throw Error(ErrorCode::InvalidArgument, "profile power and frequency must be >= 0");
      terms.push_back(pt);
    }
    f.cells.push_back(std::move(terms));
  }
  return f;
}

double mean(const PseudoAnosovModel& m, const CellObservable& f) {
  if (static_cast<int>(f.cells.size()) != m.d()) throw Error(ErrorCode::InvalidArgument, "observable cell count != d");
  double acc = 0.0;
  for (int a = 0; a < m.d(); ++a) acc += m.lengths_d[a] * m.heights_d[a] * f.profile_integral(a, 0.0, 1.0);
  return acc;  // area is normalised to 1
}

TowerSums tower_sums(const PseudoAnosovModel& m, const CellObservable& f, int max_depth) {
  if (static_cast<int>(f.cells.size()) != m.d()) throw Error(ErrorCode::InvalidArgument, "observable cell count != d");
  const int d = m.d();
  TowerSums t;
  std::vector<double> level(d);
  for (int a = 0; a < d; ++a) level[a] = m.heights_d[a] * f.profile_integral(a, 0.0, 1.0);
  t.sums.push_back(level);
  for (int k = 1; k <= max_depth; ++k) {
    std::vector<double> next(d, 0.0);
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) next[b] += static_cast<double>(m.matrix(a, b)) * level[a];
    level = next;
    t.sums.push_back(level);
  }
  return t;
}

Traversal traverse(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& T) {
  if (T.sign() < 0) throw Error(ErrorCode::InvalidArgument, "negative duration");
  Traversal tr;
  tr.start = p;
  const auto& field = m.field;
  FieldElement tau = T;
  FieldElement x = p.x;
  bool reached = false;
  tr.head_duration = field->zero();
  tr.tail_duration = field->zero();
  if (p.y.sign() > 0) {
    const FieldElement to_top = m.heights[p.cell] - p.y;
    if (tau < to_top) {
      tr.head_duration = tau;
      tr.end = p;
      tr.end.y += tau;
      tr.tail_cell = p.cell;
      tr.tail_base = p.x;
      return tr;
    }
    tr.head_duration = to_top;
    tau -= to_top;
    x = m.exchange(x, p.cell);
    reached = true;
  }

  FieldElement h_min = m.heights[0];
  for (const auto& h : m.heights)
    if (h < h_min) h_min = h;

  auto check = [&](int k) {
    if (reached && m.is_discontinuity(x * m.lambda_pow(k)))
      throw Error(ErrorCode::HitSingularity, "orbit reached a separatrix at depth " + std::to_string(k));
  };
  auto try_step = [&](int k) -> bool {
    check(k);
    const FieldElement scaled = x * m.lambda_pow(k);
    const int beta = m.locate(scaled);
    const FieldElement dur = m.heights[beta] * m.lambda_pow(k);
    if (dur > tau) return false;
    tr.steps.push_back({k, beta, x, dur});
    tau -= dur;
    x = m.exchange(scaled, beta) * m.lambda_pow(-k);
    reached = true;
    return true;
  };

  int k = 0;
  const int limit = PseudoAnosovModel::kMaxPower - 1;
  while (true) {
    if (k + 1 <= limit && x < m.lambda_pow(-(k + 1)) && h_min * m.lambda_pow(k + 1) <= tau) {
      ++k;
      continue;
    }
    if (!try_step(k)) break;
  }
  tr.max_depth_reached = k;
  for (; k >= 0; --k)
    while (try_step(k)) {
    }
  check(0);
  tr.tail_cell = m.locate(x);
  tr.tail_base = x;
  tr.tail_duration = tau;
  tr.end = {tr.tail_cell, x, tau};
  return tr;
}

double birkhoff_integral(const PseudoAnosovModel& m, const TowerSums& sums, const CellObservable& f, const Traversal& tr) {
  double v = 0.0;
  if (!tr.head_duration.is_zero()) {
    const double y0 = tr.start.y.to_double();
    const double h = m.heights_d[tr.start.cell];
    v += f.integral(tr.start.cell, h, y0, std::min(h, y0 + tr.head_duration.to_double()));
  }
  for (const auto& st : tr.steps) {
    if (st.depth >= static_cast<int>(sums.sums.size())) throw Error(ErrorCode::InvalidArgument, "tower sums too shallow");
    v += sums.sums[st.depth][st.cell];
  }
  if (!tr.tail_duration.is_zero()) {
    const double h = m.heights_d[tr.tail_cell];
    v += f.integral(tr.tail_cell, h, 0.0, std::min(h, tr.tail_duration.to_double()));
  }
  return v;
}

double birkhoff_integral(const PseudoAnosovModel& m, const TowerSums& sums, const CellObservable& f, const FlowPoint& p,
                         const FieldElement& T) {
  return birkhoff_integral(m, sums, f, traverse(m, p, T));
}

double birkhoff_integral(const PseudoAnosovModel& m, const CellObservable& f, const FlowPoint& p, const FieldElement& T) {
  return birkhoff_integral(m, tower_sums(m, f), f, p, T);
}

FieldElement field_time(const PseudoAnosovModel& m, double t) { return m.field->rational(exact_rational(t)); }

}  // namespace pa
