#include "pa/return_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "pa/error.hpp"

namespace pa {

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Powers of the unstable restriction in extended precision, negative exponents included.
class RestrictionPowers {
 public:
  explicit RestrictionPowers(const Eigen::MatrixXd& r) : r_(r.cast<long double>()), inv_(r_.inverse()) {}

  const MatrixXld& get(int j) {
    auto it = cache_.find(j);
    if (it != cache_.end()) return it->second;
    const int next = j > 0 ? j - 1 : j + 1;
    MatrixXld p = j == 0 ? MatrixXld::Identity(r_.rows(), r_.cols()) : MatrixXld(get(next) * (j > 0 ? r_ : inv_));
    return cache_.emplace(j, std::move(p)).first->second;
  }

 private:
  MatrixXld r_, inv_;
  std::map<int, MatrixXld> cache_;
};

double smallest_expanding_modulus(const PseudoAnosovModel& m) {
  double rho = m.lambda_d();
  for (const auto& e : m.split.expanding) rho = std::min(rho, std::abs(e.value));
  return rho;
}

double max_unit_class_norm(const PseudoAnosovModel& m) {
  double best = 0.0;
  for (int b = 0; b < m.d(); ++b) best = std::max(best, m.split.unstable_coordinates.col(b).norm());
  return best;
}

// sup_j |R^-j| rho^j over j >= 0.
double contraction_constant(const PseudoAnosovModel& m, double rho) {
  const Eigen::MatrixXd inv = m.split.unstable_restriction.inverse();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(inv.rows(), inv.cols());
  double kappa = 1.0, scale = 1.0;
  for (int j = 1; j <= 400; ++j) {
    p = p * inv;
    scale *= rho;
    kappa = std::max(kappa, p.operatorNorm() * scale);
  }
  return kappa;
}

Eigen::VectorXd weighted_class_sum(const PseudoAnosovModel& m, const HomologyClass& h, int reference) {
  RestrictionPowers pw(m.split.unstable_restriction);
  const MatrixXld u = m.split.unstable_coordinates.cast<long double>();
  VectorXld v = VectorXld::Zero(m.split.unstable.cols());
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    for (int b = 0; b < m.d(); ++b)
      if (h.counts[k][b] != 0)
        v += static_cast<long double>(h.counts[k][b]) * (pw.get(static_cast<int>(k) - reference) * u.col(b));
  return v.cast<double>();
}

int max_column_sum(const PseudoAnosovModel& m) {
  const auto sums = m.matrix.column_sums();
  return static_cast<int>(*std::max_element(sums.begin(), sums.end()));
}

double lemma_multiplicity_bound(const PseudoAnosovModel& m) { return m.c_max * m.lambda_d() / m.c_min; }

}  // namespace

void HomologyClass::add(int depth, int cell, long long n) {
  if (static_cast<int>(counts.size()) <= depth) counts.resize(depth + 1, std::vector<long long>(counts.empty() ? cell + 1 : counts[0].size(), 0));
  if (static_cast<int>(counts[depth].size()) <= cell)
    for (auto& row : counts) row.resize(cell + 1, 0);
  counts[depth][cell] += n;
}

void HomologyClass::add(const HomologyClass& o) {
  for (std::size_t k = 0; k < o.counts.size(); ++k)
    for (std::size_t b = 0; b < o.counts[k].size(); ++b)
      if (o.counts[k][b] != 0) add(static_cast<int>(k), static_cast<int>(b), o.counts[k][b]);
}

void HomologyClass::finalize(const PseudoAnosovModel& m) {
  const int d = m.d();
  for (auto& row : counts) row.resize(d, 0);
  visits.assign(d, BigInt(0));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const BigMatrix& bk = m.matrix_power(static_cast<int>(k));
    for (int b = 0; b < d; ++b) {
      const long long c = counts[k][b];
      if (c == 0) continue;
      for (int a = 0; a < d; ++a) visits[a] += bk[a][b] * c;
    }
  }
}

double HomologyClass::pairing(const std::vector<double>& per_cell) const {
  double acc = 0.0;
  for (std::size_t a = 0; a < visits.size(); ++a) acc += visits[a].convert_to<double>() * per_cell.at(a);
  return acc;
}

HomologyClass crossing_class(const PseudoAnosovModel& m, const Traversal& tr) {
  HomologyClass h;
  h.counts.assign(1, std::vector<long long>(m.d(), 0));
  if (tr.start.y.sign() > 0 && tr.head_duration == m.heights[tr.start.cell] - tr.start.y) h.add(0, tr.start.cell);
  for (const auto& st : tr.steps) h.add(st.depth, st.cell);
  h.finalize(m);
  return h;
}

std::vector<TowerFloor> tower_floors(const PseudoAnosovModel& m, const FlowPoint& p, int max_depth) {
  if (max_depth < 0 || max_depth >= PseudoAnosovModel::kMaxPower) throw Error(ErrorCode::InvalidArgument, "tower depth out of range");
  std::vector<TowerFloor> out;
  out.push_back({p.cell, p.x, p.y});
  FieldElement x = p.x, offset = p.y;
  for (int k = 0; k < max_depth; ++k) {
    const FieldElement& up = m.lambda_pow(k);
    const FieldElement& bound = m.lambda_pow(-(k + 1));
    while ((x - bound).sign() >= 0) {
      const FieldElement y = x * up;
      const int label = m.locate_bottom(y);
      x = m.inverse_exchange(y, label) * m.lambda_pow(-k);
      offset += m.heights[label] * up;
    }
    out.push_back({m.locate(x * m.lambda_pow(k + 1)), x, offset});
  }
  return out;
}

ReturnDecomposition decompose_closest_returns(const PseudoAnosovModel& m, const UnstableCurve& g) {
  if (g.duration.sign() < 0) throw Error(ErrorCode::InvalidArgument, "negative curve length");
  ReturnDecomposition dec;
  dec.c = m.c_min;
  dec.C = m.c_max;
  dec.total_duration = g.duration;
  dec.homology.counts.assign(1, std::vector<long long>(m.d(), 0));
  const double log_lambda = std::log(m.lambda_d());
  FlowPoint p = g.start;
  FieldElement tau = g.duration;
  int cap = PseudoAnosovModel::kMaxPower - 2;
  while (true) {
    const double t = tau.to_double();
    if (t < m.c_min * (1 - 1e-9)) break;
    const int reach = std::min(cap, static_cast<int>(std::floor(std::log(t / m.c_min) / log_lambda)) + 1);
    const std::vector<TowerFloor> floors = tower_floors(m, p, std::max(reach, 0));
    int scale = -1;
    FieldElement len;
    for (int l = reach; l >= 0; --l) {
      FieldElement candidate = m.lambda_pow(l) * m.heights[floors[l].label];
      if ((tau - candidate).sign() >= 0) {
        scale = l;
        len = std::move(candidate);
        break;
      }
    }
    if (scale < 0) break;
    const Traversal tr = traverse(m, p, len);
    ReturnItem item{scale, floors[scale].label, p, len, crossing_class(m, tr)};
    dec.homology.add(item.crossings);
    if (static_cast<int>(dec.multiplicities.size()) <= scale) dec.multiplicities.resize(scale + 1, 0);
    ++dec.multiplicities[scale];
    dec.items.push_back(std::move(item));
    p = tr.end;
    tau -= len;
    cap = scale;
  }
  dec.remainder_duration = tau;
  dec.homology.finalize(m);
  return dec;
}

nlohmann::json ReturnDecomposition::to_json() const {
  nlohmann::json items_json = nlohmann::json::array();
  for (const auto& it : items)
    items_json.push_back({{"scale", it.scale},
                          {"cell", it.cell},
                          {"start", {{"cell", it.start.cell}, {"x", it.start.x.to_double()}, {"y", it.start.y.to_double()}}},
                          {"duration", it.duration.to_double()}});
  nlohmann::json visits_json = nlohmann::json::array();
  for (const auto& v : homology.visits) visits_json.push_back(v.str());
  return {{"items", items_json},
          {"multiplicities", multiplicities},
          {"remainder", remainder_duration.to_double()},
          {"duration", total_duration.to_double()},
          {"visits", visits_json},
          {"c", c},
          {"C", C}};
}

DecompositionCheck check_decomposition(const PseudoAnosovModel& m, const ReturnDecomposition& dec) {
  DecompositionCheck chk;
  chk.multiplicity_bound = lemma_multiplicity_bound(m);
  for (int mult : dec.multiplicities) {
    chk.worst_multiplicity = std::max(chk.worst_multiplicity, mult);
    if (mult > chk.multiplicity_bound) chk.multiplicity_ok = false;
  }
  FieldElement sum = dec.remainder_duration;
  for (const auto& it : dec.items) {
    sum += it.duration;
    const double len = it.duration.to_double(), scale = std::pow(m.lambda_d(), it.scale);
    if (len < dec.c * scale * (1 - 1e-12) || len > dec.C * scale * (1 + 1e-12)) chk.lengths_ok = false;
  }
  chk.remainder_ok = dec.remainder_duration.to_double() <= chk.multiplicity_bound;
  chk.additive = sum == dec.total_duration;
  return chk;
}

FunctionalValue c_plus(const PseudoAnosovModel& m, const ReturnDecomposition& dec) {
  FunctionalValue f;
  f.value = Eigen::VectorXd::Zero(m.split.unstable.cols());
  if (dec.items.empty()) return f;
  const double T = dec.total_duration.to_double();
  f.depth = static_cast<int>(std::floor(std::log(T) / m.split.h_top));
  f.value = weighted_class_sum(m, dec.homology, f.depth);
  return f;
}

double c_plus_bound(const PseudoAnosovModel& m) {
  // Items per scale x crossings per item x pull-back series over all depth offsets.
  const double per_scale = std::floor(lemma_multiplicity_bound(m));
  const int per_item = 2 * max_column_sum(m) - 1;
  const int spread = static_cast<int>(std::ceil(std::log(m.c_max / m.c_min) / m.split.h_top));
  const int j_min = static_cast<int>(std::floor(-1.0 + std::log(m.c_min) / m.split.h_top)) - spread;
  RestrictionPowers pw(m.split.unstable_restriction);
  double series = 0.0;
  for (int j = j_min; j <= j_min + 4000; ++j) {
    const double term = (j - j_min + 1) * static_cast<double>(pw.get(-j).operatorNorm());
    series += term;
    if (j > 0 && term < 1e-18 * series) break;
  }
  return per_scale * per_item * max_unit_class_norm(m) * series;
}

FlowPoint renormalize_point(const PseudoAnosovModel& m, const FlowPoint& p, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "renormalization power must be >= 0");
  const FlowPoint base = base_point(m, p.x * m.lambda_pow(-n));
  if (p.y.is_zero()) return base;
  return traverse(m, base, p.y * m.lambda_pow(n)).end;
}

UnstableCurve renormalize(const PseudoAnosovModel& m, const UnstableCurve& g, int n) {
  return {renormalize_point(m, g.start, n), g.duration * m.lambda_pow(n)};
}

FunctionalValue bufetov_beta(const PseudoAnosovModel& m, const UnstableCurve& g, int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "truncation depth must be >= 1");
  FunctionalValue f;
  f.depth = N;
  const double rho = smallest_expanding_modulus(m);
  // Consecutive truncations differ by the partial towers at both ends of the image.
  const double K = (2.0 * max_column_sum(m) - 1.0) * max_unit_class_norm(m);
  f.tail_bound = K * contraction_constant(m, rho) * std::pow(rho, -N) / (rho - 1.0);
  if (g.duration.is_zero()) {
    f.value = Eigen::VectorXd::Zero(m.split.unstable.cols());
    return f;
  }
  const UnstableCurve image = renormalize(m, g, N);
  f.value = weighted_class_sum(m, crossing_class(m, traverse(m, image.start, image.duration)), N);
  return f;
}

Eigen::VectorXd push_forward(const PseudoAnosovModel& m, const Eigen::VectorXd& v) { return m.split.unstable_restriction * v; }

FunctionalCheck functional_check(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& t1, const FieldElement& t2,
                                 int N) {
  FunctionalCheck c;
  c.first = bufetov_beta(m, {p, t1}, N);
  const FunctionalValue second = bufetov_beta(m, {traverse(m, p, t1).end, t2}, N);
  const FunctionalValue whole = bufetov_beta(m, {p, t1 + t2}, N);
  c.additivity = (whole.value - c.first.value - second.value).norm();
  const FunctionalValue image = bufetov_beta(m, renormalize(m, {p, t1}, 1), N);
  c.scaling = (image.value - push_forward(m, c.first.value)).norm();
  return c;
}

std::vector<CellObservable> form_battery(const PseudoAnosovModel& m) {
  using K = ProfileTerm::Kind;
  std::vector<CellObservable> out;
  const int d = m.d();
  for (int j = 0; j < 10; ++j) {
    CellObservable f;
    f.cells.resize(d);
    for (int a = 0; a < d; ++a) {
      const double sign = ((a * (j + 1)) % 2 == 0) ? 1.0 : -1.0;
      if (j == 0) {
        f.cells[a] = {ProfileTerm{1.0, 0, K::Poly, 0}};
        continue;
      }
      const int freq = 1 + (j - 1) / 3;
      const K kind = (j % 2) ? K::Cos : K::Sin;
      f.cells[a] = {ProfileTerm{sign, 0, kind, freq}, ProfileTerm{0.5 * (a + 1) / d, j % 3 == 0 ? 1 : 0, K::Poly, 0}};
    }
    double norm = 0.0;
    for (int a = 0; a < d; ++a) {
      double sup = 0.0, slope = 0.0;
      for (const auto& t : f.cells[a]) {
        sup += std::abs(t.coeff);
        slope += std::abs(t.coeff) * (t.power + 2.0 * std::numbers::pi * t.freq) / m.heights_d[a];
      }
      norm = std::max(norm, sup + slope);
    }
    for (auto& cell : f.cells)
      for (auto& t : cell) t.coeff /= norm;
    out.push_back(std::move(f));
  }
  return out;
}

double asymptotic_gap(const PseudoAnosovModel& m, const UnstableCurve& g, const std::vector<CellObservable>& battery, int N) {
  if (g.duration.is_zero()) return 0.0;
  const FunctionalValue beta = bufetov_beta(m, g, N);
  const Eigen::VectorXd current = m.split.unstable * beta.value;
  const Traversal tr = traverse(m, g.start, g.duration);
  double gap = 0.0;
  for (const auto& f : battery) {
    const TowerSums sums = tower_sums(m, f, tr.max_depth_reached + 1);
    const double curve = birkhoff_integral(m, sums, f, tr);
    double recon = 0.0;
    for (int a = 0; a < m.d(); ++a) recon += current(a) * sums.sums[0][a];
    gap = std::max(gap, std::abs(curve - recon));
  }
  return gap;
}

}  // namespace pa
