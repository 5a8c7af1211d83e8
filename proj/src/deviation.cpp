#include "pa/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "pa/error.hpp"

namespace pa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct LineFit {
  double slope = 0.0, intercept = 0.0, stderr_slope = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += r * r;
    }
    f.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  }
  return f;
}

Eigen::Vector2d expanding_direction(const IntegerMatrix& L) {
  if (L.dim() != 2) throw Error(ErrorCode::InvalidArgument, "linear flow needs a 2x2 matrix");
  const double a = static_cast<double>(L(0, 0)), b = static_cast<double>(L(0, 1));
  const double c = static_cast<double>(L(1, 0)), d = static_cast<double>(L(1, 1));
  const double tr = a + d, det = a * d - b * c;
  const double disc = tr * tr - 4.0 * det;
  if (disc <= 0.0 || std::abs(tr) <= 2.0) throw Error(ErrorCode::NotHyperbolic, "linear part is not hyperbolic");
  const double lambda = tr > 0 ? (tr + std::sqrt(disc)) / 2.0 : (tr - std::sqrt(disc)) / 2.0;
  Eigen::Vector2d v = std::abs(b) >= std::abs(c) ? Eigen::Vector2d(b, lambda - a) : Eigen::Vector2d(lambda - d, c);
  v.normalize();
  if (v.x() < 0) v = -v;
  return v;
}

// Constant term common to every cell, and the observable without it.
std::pair<double, CellObservable> split_shared_constant(const CellObservable& f) {
  auto constant_of = [](const std::vector<ProfileTerm>& cell) {
    double c = 0.0;
    for (const auto& t : cell)
      if (t.power == 0 && (t.kind == ProfileTerm::Kind::Poly || (t.kind == ProfileTerm::Kind::Cos && t.freq == 0))) c += t.coeff;
    return c;
  };
  if (f.cells.empty()) return {0.0, f};
  const double c = constant_of(f.cells.front());
  for (const auto& cell : f.cells)
    if (constant_of(cell) != c) return {0.0, f};
  CellObservable rest;
  for (const auto& cell : f.cells) {
    std::vector<ProfileTerm> kept;
    for (const auto& t : cell)
      if (!(t.power == 0 && (t.kind == ProfileTerm::Kind::Poly || (t.kind == ProfileTerm::Kind::Cos && t.freq == 0))))
        kept.push_back(t);
    rest.cells.push_back(std::move(kept));
  }
  return {c, rest};
}

}  // namespace

nlohmann::json PowerFit::to_json() const {
  return {{"slope", slope}, {"intercept", intercept}, {"stderr", stderr_slope},
          {"t_min", t_min}, {"t_max", t_max}, {"points", points}};
}

nlohmann::json PeeledTerm::to_json() const {
  return {{"i", index},         {"j", power},           {"nu", nu},
          {"sup", sup},         {"sup_early", sup_early}, {"sup_late", sup_late}, {"c0", floor},          {"windows_above", windows_above},
          {"windows", static_cast<int>(window_max.size())},
          {"growth_slope", growth_slope}, {"bounded", bounded}, {"recurrent", recurrent}};
}

void DeviationReport::fill_envelope() {
  envelope.resize(samples.size());
  double run = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    run = std::max(run, std::abs(samples[i].E));
    envelope[i] = run;
  }
}

nlohmann::json DeviationReport::to_json() const {
  nlohmann::json j;
  j["samples"] = static_cast<int>(samples.size());
  if (!samples.empty()) {
    j["t_min"] = samples.front().T;
    j["t_max"] = samples.back().T;
    j["final_envelope"] = envelope.empty() ? 0.0 : envelope.back();
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : fits) j["fits"].push_back(f.to_json());
  j["peeled"] = nlohmann::json::array();
  for (const auto& p : peeled) j["peeled"].push_back(p.to_json());
  j["diagnostics"] = diagnostics;
  return j;
}

std::vector<double> geometric_grid(double t_min, double t_max, double ratio) {
  if (!(t_min > 0.0) || !(t_max >= t_min) || !(ratio > 1.0))
    throw Error(ErrorCode::InvalidArgument, "T-grid needs 0 < t_min <= t_max and ratio > 1");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double t = t_min * std::pow(ratio, k);
    if (t > t_max * (1.0 + 1e-12)) break;
    out.push_back(t);
  }
  return out;
}

static void check_grid(const std::vector<double>& T_grid) {
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    if (!(T_grid[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time in T-grid");
    if (i > 0 && !(T_grid[i] > T_grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "T-grid must be increasing");
  }
}

DeviationReport deviation_series(const PseudoAnosovModel& m, const CellObservable& f, const FlowPoint& x,
                                 const std::vector<double>& T_grid) {
  check_grid(T_grid);
  // A constant shared by all cells integrates to exactly c T and carries no deviation.
  const auto [shared, rest] = split_shared_constant(f);
  const double mu_rest = mean(m, rest);
  const TowerSums sums = tower_sums(m, rest);
  DeviationReport r;
  r.samples.reserve(T_grid.size());
  for (double T : T_grid) {
    const double S = birkhoff_integral(m, sums, rest, x, field_time(m, T));
    r.samples.push_back({T, shared * T + S, S - T * mu_rest});
  }
  r.fill_envelope();
  r.diagnostics["mean"] = shared + mu_rest;
  r.diagnostics["start_x"] = x.x.to_double();
  r.diagnostics["start_cell"] = x.cell;
  return r;
}

DeviationReport deviation_series(const IntegerMatrix& L, const TrigObservable& f, const Eigen::Vector2d& x,
                                 const std::vector<double>& T_grid) {
  check_grid(T_grid);
  const Eigen::Vector2d v = expanding_direction(L);
  const double mu = f.mean().real();
  DeviationReport r;
  r.samples.reserve(T_grid.size());
  for (double T : T_grid) {
    std::complex<double> S = 0.0;
    for (const auto& [k, fk] : f.coeffs) {
      if (k[0] == 0 && k[1] == 0) {
        S += fk * T;
        continue;
      }
      const double phase = kTwoPi * (static_cast<double>(k[0]) * x.x() + static_cast<double>(k[1]) * x.y());
      const double omega = kTwoPi * (static_cast<double>(k[0]) * v.x() + static_cast<double>(k[1]) * v.y());
      // int_0^T e^{i omega t} dt = e^{i omega T / 2} * 2 sin(omega T / 2) / omega
      const double half = 0.5 * omega * T;
      const std::complex<double> integral = std::polar(1.0, half) * (2.0 * std::sin(half) / omega);
      S += fk * std::polar(1.0, phase) * integral;
    }
    r.samples.push_back({T, S.real(), S.real() - T * mu});
  }
  r.fill_envelope();
  r.diagnostics["mean"] = mu;
  r.diagnostics["start"] = {x.x(), x.y()};
  r.diagnostics["direction"] = {v.x(), v.y()};
  return r;
}

std::vector<FlowPoint> seeded_starts(const PseudoAnosovModel& m, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<FlowPoint> out;
  while (static_cast<int>(out.size()) < count) {
    const FieldElement x = m.field->rational(Rational(BigInt(rng() >> 34), BigInt(1) << 30));
    if (m.is_discontinuity(x)) continue;
    out.push_back(base_point(m, x));
  }
  return out;
}

std::vector<Eigen::Vector2d> seeded_torus_starts(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Vector2d> out;
  for (int i = 0; i < count; ++i) {
    const double a = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double b = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    out.emplace_back(a, b);
  }
  return out;
}

std::vector<DeviationReport> deviation_sweep(const PseudoAnosovModel& m, const CellObservable& f,
                                             const std::vector<FlowPoint>& starts, const std::vector<double>& T_grid,
                                             int workers) {
  std::vector<DeviationReport> out(starts.size());
  std::vector<std::exception_ptr> errors(starts.size());
  const int n = static_cast<int>(starts.size());
  const int w = std::clamp(workers, 1, std::max(1, n));
  auto run = [&](int id) {
    for (int i = id; i < n; i += w) {
      FlowPoint p = starts[i];
      // Resample along the orbit's base line when the start lies on a separatrix.
      for (int attempt = 0;; ++attempt) {
        try {
          out[i] = deviation_series(m, f, p, T_grid);
          if (attempt > 0) out[i].diagnostics["resampled"] = attempt;
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::HitSingularity || attempt >= 8) {
            errors[i] = std::current_exception();
            break;
          }
          const FieldElement shift = m.field->rational(Rational(BigInt(attempt + 1), BigInt(1) << 31));
          FieldElement nx = p.x + shift;
          if (nx.to_double() >= 1.0) nx = p.x - shift;
          p = base_point(m, nx);
        }
      }
    }
  };
  if (w == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int id = 0; id < w; ++id) pool.emplace_back(run, id);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

DeviationReport pooled_envelope(const std::vector<DeviationReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "no reports to pool");
  DeviationReport r;
  r.samples.resize(reports.front().samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i].T = reports.front().samples[i].T;
  for (const auto& rep : reports) {
    if (rep.samples.size() != r.samples.size()) throw Error(ErrorCode::InvalidArgument, "reports on different grids");
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      if (rep.samples[i].T != r.samples[i].T) throw Error(ErrorCode::InvalidArgument, "reports on different grids");
      const double e = std::abs(rep.samples[i].E);
      if (e > r.samples[i].E) {
        r.samples[i].E = e;
        r.samples[i].S = rep.samples[i].S;
      }
    }
  }
  r.fill_envelope();
  r.diagnostics["pooled_starts"] = static_cast<int>(reports.size());
  return r;
}

PowerFit fit_power_law(const DeviationReport& r, double t_min, double t_max) {
  if (r.envelope.size() != r.samples.size()) throw Error(ErrorCode::InvalidArgument, "envelope not filled");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const double T = r.samples[i].T;
    if (T < t_min || T > t_max) continue;
    if (!(r.envelope[i] > 0.0) || !(T > 0.0))
      throw Error(ErrorCode::DegenerateWindow, "nonpositive envelope value at T = " + std::to_string(T));
    x.push_back(std::log(T));
    y.push_back(std::log(r.envelope[i]));
  }
  if (x.size() < 10) throw Error(ErrorCode::DegenerateWindow, "fewer than 10 envelope points in the fit window");
  const LineFit lf = least_squares(x, y);
  PowerFit f;
  f.slope = lf.slope;
  f.intercept = lf.intercept;
  f.stderr_slope = lf.stderr_slope;
  // Recorded window is the sampled part of the requested one.
  f.t_min = std::exp(x.front());
  f.t_max = std::exp(x.back());
  f.points = static_cast<int>(x.size());
  return f;
}

void peel_expansion(DeviationReport& r, const ExponentTable& exponents, const PeelOptions& opt) {
  for (std::size_t a = 0; a < exponents.rows.size(); ++a)
    for (std::size_t b = a + 1; b < exponents.rows.size(); ++b)
      if (std::abs(exponents.rows[a].nu - exponents.rows[b].nu) < 1e-6)
        throw Error(ErrorCode::ExponentCollision, "exponents " + std::to_string(exponents.rows[a].index) + " and " +
                                                      std::to_string(exponents.rows[b].index) + " coincide within 1e-6");
  const std::size_t n = r.samples.size();
  std::vector<char> used(n, 0);
  std::vector<double> logt(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double T = r.samples[s].T;
    used[s] = T > 1.0 && T >= opt.t_min;
    if (used[s]) logt[s] = std::log(T);
  }
  r.remainder.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) r.remainder[s] = used[s] ? r.samples[s].E : 0.0;
  r.peeled.clear();

  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < n; ++s)
    if (used[s]) idx.push_back(s);

  for (const auto& row : exponents.rows) {
    if (row.index < 2) continue;
    for (int j = row.max_block; j >= 1; --j) {
      PeeledTerm t;
      t.index = row.index;
      t.power = j;
      t.nu = row.nu;
      t.coeff.assign(n, 0.0);
      std::vector<double> scale(n, 0.0);
      for (std::size_t s : idx) {
        scale[s] = std::pow(logt[s], j - 1) * std::exp(row.nu * logt[s]);
        t.coeff[s] = r.remainder[s] / scale[s];
        t.sup = std::max(t.sup, std::abs(t.coeff[s]));
      }
      // Subtract the locally averaged term so later terms see only what it leaves.
      const double half = 0.5 * opt.smoothing_decades * std::log(10.0);
      std::vector<double> smooth(n, 0.0);
      for (std::size_t s : idx) {
        double acc = 0.0;
        int cnt = 0;
        for (std::size_t q : idx) {
          if (std::abs(logt[q] - logt[s]) <= half) {
            acc += t.coeff[q];
            ++cnt;
          }
        }
        smooth[s] = acc / cnt;
      }
      for (std::size_t s : idx) r.remainder[s] -= smooth[s] * scale[s];

      if (!idx.empty()) {
        const double width = opt.window_decades * std::log(10.0);
        const double start = logt[idx.front()], stop = logt[idx.back()];
        std::vector<double> wx, wy;
        for (int w = 0;; ++w) {
          const double lo = start + w * width, hi = lo + width;
          if (hi > stop + 1e-9) break;
          double mx = 0.0;
          int cnt = 0;
          for (std::size_t s : idx) {
            if (logt[s] >= lo && (logt[s] < hi || hi >= stop - 1e-9)) {
              mx = std::max(mx, std::abs(t.coeff[s]));
              ++cnt;
            }
          }
          if (cnt == 0) continue;
          t.window_max.push_back(mx);
          if (mx > 0.0) {
            wx.push_back(0.5 * (lo + hi));
            wy.push_back(std::log(mx));
          }
        }
        t.growth_slope = wx.size() >= 2 ? least_squares(wx, wy).slope : 0.0;
        const double mid = 0.5 * (start + stop);
        for (std::size_t s : idx) {
          double& side = logt[s] < mid ? t.sup_early : t.sup_late;
          side = std::max(side, std::abs(t.coeff[s]));
        }
        t.bounded = std::isfinite(t.sup) && t.sup_late <= opt.growth_factor * t.sup_early;
        t.floor = opt.floor_fraction * t.sup;
        for (double mx : t.window_max)
          if (t.floor > 0.0 && mx >= t.floor) ++t.windows_above;
        t.recurrent = t.floor > 0.0 && t.windows_above >= opt.min_windows;
      }
      r.peeled.push_back(std::move(t));
    }
  }
  r.diagnostics["peel_smoothing_decades"] = opt.smoothing_decades;
  r.diagnostics["peel_window_decades"] = opt.window_decades;
  r.diagnostics["peel_floor_fraction"] = opt.floor_fraction;
  r.diagnostics["peel_growth_factor"] = opt.growth_factor;
  double rem = 0.0;
  for (std::size_t s : idx) rem = std::max(rem, std::abs(r.remainder[s]));
  r.diagnostics["peel_remainder_max"] = rem;
}

CellObservable flow_derivative(const PseudoAnosovModel& m, const CellObservable& g) {
  using K = ProfileTerm::Kind;
  CellObservable f;
  f.cells.resize(g.cells.size());
  for (std::size_t a = 0; a < g.cells.size(); ++a) {
    const double inv_h = 1.0 / m.heights_d[a];
    for (const auto& t : g.cells[a]) {
      if (t.kind == K::Sin && t.freq == 0) continue;
      const K kind = t.freq == 0 ? K::Poly : t.kind;
      if (t.power > 0) f.cells[a].push_back({t.coeff * t.power * inv_h, t.power - 1, kind, t.freq});
      if (kind == K::Poly) continue;
      const double w = kTwoPi * t.freq * inv_h;
      if (kind == K::Cos)
        f.cells[a].push_back({-t.coeff * w, t.power, K::Sin, t.freq});
      else
        f.cells[a].push_back({t.coeff * w, t.power, K::Cos, t.freq});
    }
  }
  return f;
}

nlohmann::json BasicCurrentRow::to_json() const { return {{"tangency", tangency}, {"max_coefficient", max_coefficient}}; }

std::vector<BasicCurrentRow> basic_current_check(const PseudoAnosovModel& m, const std::vector<CellObservable>& densities,
                                                 const FlowPoint& x, const std::vector<double>& T_grid) {
  if (T_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty T-grid");
  // Unit flow field and curve tangent in rectangle coordinates.
  const Eigen::Vector2d Y(0.0, 1.0);
  const Eigen::Vector2d tangent = Y;
  const double contraction = Y.x() * tangent.y() - Y.y() * tangent.x();
  const ExponentTable exps = deviation_exponents(m.split);
  std::vector<BasicCurrentRow> out;
  for (const auto& w : densities) {
    CellObservable contracted = w;
    for (auto& cell : contracted.cells)
      for (auto& t : cell) t.coeff *= contraction;
    const double T = T_grid.back();
    BasicCurrentRow row;
    row.tangency = birkhoff_integral(m, contracted, x, field_time(m, T)) / T;
    DeviationReport rep = deviation_series(m, contracted, x, T_grid);
    peel_expansion(rep, exps);
    for (const auto& p : rep.peeled) row.max_coefficient = std::max(row.max_coefficient, p.sup);
    out.push_back(row);
  }
  return out;
}

nlohmann::json CorrelationReport::to_json() const {
  nlohmann::json j;
  j["vanishing_index"] = vanishing_index;
  j["middle_terms"] = middle_terms;
  j["polylog_power"] = polylog_power;
  j["h_top"] = h_top;
  j["constant"] = constant;
  j["triangle_bound"] = triangle_bound;
  j["within_bound"] = within_bound;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"n", r.n}, {"re", r.value.real()}, {"im", r.value.imag()}, {"residual", r.residual}, {"bound", r.bound}});
  return j;
}

CorrelationReport correlation_expansion_check(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g,
                                              int n_max) {
  if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 0");
  const SpectralSplit split = spectral_split(L);
  const ExponentTable exps = deviation_exponents(split);
  CorrelationReport rep;
  rep.h_top = split.h_top;
  rep.polylog_power = std::max(split.neutral_multiplicity, 1) + 1;
  for (const auto& row : exps.rows)
    if (row.index >= 2) ++rep.middle_terms;
  auto weighted = [](const TrigObservable& h) {
    double acc = 0.0;
    for (const auto& [k, c] : h.coeffs) {
      if (k[0] == 0 && k[1] == 0) continue;
      acc += std::abs(c) * (1.0 + kTwoPi * std::hypot(static_cast<double>(k[0]), static_cast<double>(k[1])));
    }
    return acc;
  };
  auto plain = [](const TrigObservable& h) {
    double acc = 0.0;
    for (const auto& [k, c] : h.coeffs)
      if (k[0] != 0 || k[1] != 0) acc += std::abs(c);
    return acc;
  };
  rep.constant = weighted(f) * weighted(g);
  rep.triangle_bound = plain(f) * plain(g);
  rep.vanishing_index = correlation_horizon(L, f, g);
  const std::complex<double> product = f.mean() * std::conj(g.mean());
  for (int n = 0; n <= n_max; ++n) {
    CorrelationRow row;
    row.n = n;
    row.value = exact_correlation(L, f, g, n);
    row.residual = std::abs(row.value - product);
    row.bound = rep.constant * std::pow(std::max(n, 1), rep.polylog_power) * std::exp(-n * rep.h_top);
    if (row.residual > row.bound * (1.0 + 1e-12) + 1e-15) rep.within_bound = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace pa
