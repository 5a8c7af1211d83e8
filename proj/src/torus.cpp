#include "pa/torus.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "pa/error.hpp"

namespace pa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};

std::complex<double> mode(const Frequency& k, const Eigen::Vector2d& x) {
  const double phase = kTwoPi * (static_cast<double>(k[0]) * x(0) + static_cast<double>(k[1]) * x(1));
  return {std::cos(phase), std::sin(phase)};
}

Eigen::Vector2d reduce(const Eigen::Vector2d& x) { return x.array() - x.array().floor(); }

double centered(double v) { return v - std::round(v); }

double torus_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return std::hypot(centered(a(0) - b(0)), centered(a(1) - b(1)));
}

Frequency negate(const Frequency& k) { return {-k[0], -k[1]}; }

TrigObservable obs_from_json(const nlohmann::json& j) {
  TrigObservable f;
  for (const auto& t : j) f.coeffs[{t.at("k").at(0).get<std::int64_t>(), t.at("k").at(1).get<std::int64_t>()}] += std::complex<double>(t.at("re").get<double>(), t.value("im", 0.0));
  return f;
}

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

class FftGrid {
 public:
  explicit FftGrid(int n) : n_(n), data_(fftw_alloc_complex(static_cast<std::size_t>(n) * n)) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    forward_ = fftw_plan_dft_2d(n, n, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n, n, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftGrid() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }
  FftGrid(const FftGrid&) = delete;
  FftGrid& operator=(const FftGrid&) = delete;

  std::complex<double>& at(int i, int j) { return reinterpret_cast<std::complex<double>*>(data_)[i * n_ + j]; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }
  int signed_index(int i) const { return i <= n_ / 2 ? i : i - n_; }

 private:
  int n_;
  fftw_complex* data_;
  fftw_plan forward_, backward_;
};

std::array<double, 4> eigen_split(const IntegerMatrix& L, Eigen::Vector2d& vu, Eigen::Vector2d& vs) {
  const double a = static_cast<double>(L(0, 0)), b = static_cast<double>(L(0, 1));
  const double c = static_cast<double>(L(1, 0)), d = static_cast<double>(L(1, 1));
  const double tr = a + d;
  const double disc = std::sqrt(tr * tr - 4.0);
  const double mu_u = tr > 0 ? (tr + disc) / 2.0 : (tr - disc) / 2.0;
  const double mu_s = 1.0 / mu_u;
  auto eigvec = [&](double mu) {
    Eigen::Vector2d v = std::abs(b) > 0 ? Eigen::Vector2d(b, mu - a) : Eigen::Vector2d(mu - d, c);
    v.normalize();
    if (v(0) < 0 || (v(0) == 0 && v(1) < 0)) v = -v;
    return v;
  };
  vu = eigvec(mu_u);
  vs = eigvec(mu_s);
  return {mu_u, mu_s, tr, disc};
}

// Jacobians of the perturbation on the cone grid.
std::vector<Eigen::Matrix2d> perturbation_jacobians(const TrigVectorField& psi) {
  std::vector<Eigen::Matrix2d> out;
  out.reserve(static_cast<std::size_t>(kConeGrid) * kConeGrid);
  for (int i = 0; i < kConeGrid; ++i)
    for (int j = 0; j < kConeGrid; ++j) out.push_back(psi.jacobian({static_cast<double>(i) / kConeGrid, static_cast<double>(j) / kConeGrid}));
  return out;
}

bool cone_check(const ToralMap& m, const std::vector<Eigen::Matrix2d>& dpsi, double epsilon) {
  Eigen::Matrix2d basis;
  basis.col(0) = m.unstable_eigenvector;
  basis.col(1) = m.stable_eigenvector;
  const Eigen::Matrix2d inv = basis.inverse();
  const Eigen::Matrix2d lin = m.linear_matrix();
  for (const auto& dp : dpsi) {
    const Eigen::Matrix2d conj = inv * (lin + epsilon * dp) * basis;
    for (int t = 0; t < kConeDirections; ++t) {
      const double slope = m.cone_aperture * (-1.0 + 2.0 * t / (kConeDirections - 1));
      const Eigen::Vector2d image = conj * Eigen::Vector2d(1.0, slope);
      if (!(std::abs(image(1)) < m.cone_aperture * std::abs(image(0)))) return false;
    }
  }
  return true;
}

// Unit vector pushed from the cone axis along the last `steps` points of a backward orbit.
Eigen::Vector2d push_along(const ToralMap& m, const std::vector<Eigen::Vector2d>& backward, int steps) {
  Eigen::Vector2d w = m.unstable_eigenvector;
  for (int j = steps; j >= 1; --j) {
    w = m.jacobian(backward[j - 1]) * w;
    w.normalize();
  }
  if (w.dot(m.unstable_eigenvector) < 0) w = -w;
  return w;
}

std::vector<Eigen::Vector2d> backward_orbit(const ToralMap& m, const Eigen::Vector2d& x, int n) {
  std::vector<Eigen::Vector2d> out;
  Eigen::Vector2d z = reduce(x);
  for (int j = 0; j < n; ++j) {
    z = m.inverse(z);
    out.push_back(z);
  }
  return out;
}

// Shifted periodic rectangle rule; the irrational offset keeps the nodes off the
// finite orbits that the linear part has on rational grids.
Eigen::Vector2d quadrature_node(int i, int j, int grid) {
  constexpr double kShiftX = 0.41421356237309515, kShiftY = 0.7320508075688772;
  return {(i + kShiftX) / grid, (j + kShiftY) / grid};
}

}  // namespace

std::complex<double> TrigObservable::operator()(const Eigen::Vector2d& x) const {
  std::complex<double> v = 0.0;
  for (const auto& [k, c] : coeffs) v += c * mode(k, x);
  return v;
}

Eigen::Vector2d TrigObservable::gradient(const Eigen::Vector2d& x) const {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (const auto& [k, c] : coeffs) {
    const double d = std::real(c * kI * mode(k, x)) * kTwoPi;
    g(0) += d * static_cast<double>(k[0]);
    g(1) += d * static_cast<double>(k[1]);
  }
  return g;
}

std::complex<double> TrigObservable::mean() const { return coefficient({0, 0}); }

std::complex<double> TrigObservable::coefficient(const Frequency& k) const {
  auto it = coeffs.find(k);
  return it == coeffs.end() ? std::complex<double>(0.0) : it->second;
}

double TrigObservable::l1_norm() const {
  double s = 0.0;
  for (const auto& [k, c] : coeffs) s += std::abs(c);
  return s;
}

bool TrigObservable::is_real(double tol) const {
  for (const auto& [k, c] : coeffs)
    if (std::abs(c - std::conj(coefficient(negate(k)))) > tol) return false;
  return true;
}

std::int64_t TrigObservable::max_frequency() const {
  std::int64_t r = 0;
  for (const auto& [k, c] : coeffs) r = std::max({r, std::abs(k[0]), std::abs(k[1])});
  return r;
}

TrigObservable TrigObservable::random_zero_mean(int max_freq, int count, std::uint64_t seed) {
  if (max_freq < 1 || count < 1) throw Error(ErrorCode::InvalidArgument, "need a positive frequency bound and term count");
  const int side = 2 * max_freq + 1;
  if (count > (side * side - 1) / 2) throw Error(ErrorCode::InvalidArgument, "more terms than frequency pairs");
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  TrigObservable f;
  while (static_cast<int>(f.coeffs.size()) < 2 * count) {
    const Frequency k{static_cast<std::int64_t>(rng() % side) - max_freq, static_cast<std::int64_t>(rng() % side) - max_freq};
    if ((k[0] == 0 && k[1] == 0) || f.coeffs.count(k)) continue;
    const std::complex<double> c{unit(), unit()};
    f.coeffs[k] = c;
    f.coeffs[negate(k)] = std::conj(c);
  }
  return f;
}

TrigObservable TrigObservable::constant(double c) {
  TrigObservable f;
  f.coeffs[{0, 0}] = c;
  return f;
}

TrigObservable TrigObservable::cos_mode(const Frequency& k, double amplitude) {
  TrigObservable f;
  f.coeffs[k] += amplitude / 2.0;
  f.coeffs[negate(k)] += amplitude / 2.0;
  return f;
}

TrigObservable TrigObservable::sin_mode(const Frequency& k, double amplitude) {
  TrigObservable f;
  f.coeffs[k] += amplitude / (2.0 * kI);
  f.coeffs[negate(k)] -= amplitude / (2.0 * kI);
  return f;
}

nlohmann::json TrigObservable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [k, c] : coeffs) j.push_back({{"k", {k[0], k[1]}}, {"re", c.real()}, {"im", c.imag()}});
  return j;
}

TrigObservable TrigObservable::from_json(const nlohmann::json& j) { return obs_from_json(j); }

Eigen::Vector2d TrigVectorField::operator()(const Eigen::Vector2d& p) const { return {std::real(x(p)), std::real(y(p))}; }

Eigen::Matrix2d TrigVectorField::jacobian(const Eigen::Vector2d& p) const {
  Eigen::Matrix2d j;
  j.row(0) = x.gradient(p).transpose();
  j.row(1) = y.gradient(p).transpose();
  return j;
}

nlohmann::json TrigVectorField::to_json() const { return {{"x", x.to_json()}, {"y", y.to_json()}}; }

TrigVectorField TrigVectorField::from_json(const nlohmann::json& j) {
  return {obs_from_json(j.value("x", nlohmann::json::array())), obs_from_json(j.value("y", nlohmann::json::array()))};
}

Eigen::Matrix2d ToralMap::linear_matrix() const {
  Eigen::Matrix2d l;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) l(i, j) = static_cast<double>(linear_part(i, j));
  return l;
}

Eigen::Vector2d ToralMap::lift(const Eigen::Vector2d& x) const {
  Eigen::Vector2d y = linear_matrix() * x;
  if (!linear) y += epsilon * perturbation(x);
  return y;
}

Eigen::Vector2d ToralMap::operator()(const Eigen::Vector2d& x) const { return reduce(lift(x)); }

Eigen::Matrix2d ToralMap::jacobian(const Eigen::Vector2d& x) const {
  Eigen::Matrix2d j = linear_matrix();
  if (!linear) j += epsilon * perturbation.jacobian(x);
  return j;
}

Eigen::Vector2d ToralMap::inverse(const Eigen::Vector2d& x) const {
  const Eigen::Matrix2d inv = linear_matrix().inverse();
  Eigen::Vector2d z = reduce(inv * x);
  if (linear) return z;
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector2d next = reduce(inv * (x - epsilon * perturbation(z)));
    const double step = torus_distance(next, z);
    z = next;
    if (step < 1e-15) return z;
  }
  throw Error(ErrorCode::NoConvergence, "inverse map iteration did not converge");
}

IntegerMatrix ToralMap::homology_action() const {
  constexpr int kSteps = 4096;
  IntegerMatrix h(2);
  for (int i = 0; i < 2; ++i) {
    Eigen::Vector2d disp = Eigen::Vector2d::Zero();
    Eigen::Vector2d prev = (*this)(Eigen::Vector2d::Zero());
    for (int s = 1; s <= kSteps; ++s) {
      Eigen::Vector2d p = Eigen::Vector2d::Zero();
      p(i) = static_cast<double>(s) / kSteps;
      const Eigen::Vector2d cur = (*this)(p);
      disp(0) += centered(cur(0) - prev(0));
      disp(1) += centered(cur(1) - prev(1));
      prev = cur;
    }
    for (int r = 0; r < 2; ++r) {
      const double w = std::round(disp(r));
      if (std::abs(disp(r) - w) > 1e-6) throw Error(ErrorCode::Internal, "winding number is not an integer");
      h(r, i) = static_cast<std::int64_t>(w);
    }
  }
  return h;
}

nlohmann::json ToralMap::to_json() const {
  return {{"linear_part", linear_part.to_json()},
          {"perturbation", perturbation.to_json()},
          {"epsilon", epsilon},
          {"linear", linear},
          {"cone_aperture", cone_aperture},
          {"cone_bound", std::isfinite(cone_bound) ? nlohmann::json(cone_bound) : nlohmann::json("inf")},
          {"lambda", lambda}};
}

ToralMap make_toral_map(const IntegerMatrix& L, const TrigVectorField& psi, double epsilon) {
  if (L.dim() != 2) throw Error(ErrorCode::InvalidArgument, "toral map needs a 2x2 matrix");
  if (L.determinant() != 1) throw Error(ErrorCode::NotUnimodular, "linear part must have determinant 1");
  if (std::abs(L.trace()) <= 2) throw Error(ErrorCode::NotHyperbolic, "linear part must have |trace| > 2");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::InvalidArgument, "perturbation amplitude must be finite and >= 0");
  if (!psi.x.is_real() || !psi.y.is_real()) throw Error(ErrorCode::InvalidArgument, "perturbation must be real-valued");
  ToralMap m;
  m.linear_part = L;
  m.perturbation = psi;
  m.epsilon = epsilon;
  const auto ev = eigen_split(L, m.unstable_eigenvector, m.stable_eigenvector);
  m.lambda = std::abs(ev[0]);
  m.linear = epsilon == 0.0 || psi.empty();
  if (m.linear) return m;
  const auto dpsi = perturbation_jacobians(psi);
  if (!cone_check(m, dpsi, epsilon)) throw Error(ErrorCode::PerturbationTooLarge, "unstable cone family not invariant on the verification grid");
  double lo = epsilon, hi = std::max(2.0 * epsilon, 1e-3);
  while (cone_check(m, dpsi, hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      m.cone_bound = std::numeric_limits<double>::infinity();
      return m;
    }
  }
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cone_check(m, dpsi, mid) ? lo : hi) = mid;
  }
  m.cone_bound = lo;
  return m;
}

bool cone_invariant(const ToralMap& m, double epsilon) {
  if (m.perturbation.empty()) return true;
  return cone_check(m, perturbation_jacobians(m.perturbation), epsilon);
}

Eigen::Vector2d unstable_direction(const ToralMap& m, const Eigen::Vector2d& x, int n, double tol) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one push");
  const auto orbit = backward_orbit(m, x, n);
  const Eigen::Vector2d now = push_along(m, orbit, n), before = push_along(m, orbit, n - 1);
  if ((now - before).norm() > tol) throw Error(ErrorCode::NoConvergence, "unstable direction increment above tolerance");
  return now;
}

std::vector<double> unstable_direction_increments(const ToralMap& m, const Eigen::Vector2d& x, int n) {
  const auto orbit = backward_orbit(m, x, n);
  std::vector<double> out;
  Eigen::Vector2d prev = m.unstable_eigenvector;
  for (int j = 1; j <= n; ++j) {
    const Eigen::Vector2d cur = push_along(m, orbit, j);
    out.push_back((cur - prev).norm());
    prev = cur;
  }
  return out;
}

double expansion_cocycle(const ToralMap& m, const Eigen::Vector2d& x, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "cocycle needs n >= 0");
  Eigen::Vector2d p = reduce(x);
  Eigen::Vector2d dir = m.linear ? m.unstable_eigenvector : unstable_direction(m, p, 60, 1e-9);
  double nu = 1.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector2d w = m.jacobian(p) * dir;
    const double stretch = w.norm();
    nu *= stretch;
    dir = w / stretch;
    p = m(p);
  }
  return nu;
}

double PeriodicFunction::operator()(const Eigen::Vector2d& x) const {
  double v = 0.0;
  for (const auto& [k, c] : coeffs) v += std::real(c * mode(k, x));
  return v;
}

double PeriodicFunction::sup_bound() const {
  double s = 0.0;
  for (const auto& [k, c] : coeffs) s += std::abs(c);
  return s;
}

PeriodicFunction PeriodicFunction::scaled(double s) const {
  PeriodicFunction out = *this;
  for (auto& [k, c] : out.coeffs) c *= s;
  return out;
}

TransferPrimitive transfer_primitive(const ToralMap& m, const Eigen::Vector2d& c, double tol, int max_grid) {
  const Eigen::Matrix2d lin_t = m.linear_matrix().transpose();
  double last_residual = 0.0;
  for (int n = 32; n <= max_grid; n *= 2) {
    FftGrid wx(n), wy(n);
    std::vector<Eigen::Vector2d> samples(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d x(static_cast<double>(i) / n, static_cast<double>(j) / n);
        const Eigen::Vector2d w = m.jacobian(x).transpose() * c - lin_t * c;
        samples[i * n + j] = w;
        wx.at(i, j) = w(0);
        wy.at(i, j) = w(1);
      }
    wx.forward();
    wy.forward();
    FftGrid u(n), gx(n), gy(n);
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int k1 = wx.signed_index(i), k2 = wx.signed_index(j);
        std::complex<double> uh = 0.0;
        if ((k1 != 0 || k2 != 0) && 2 * std::abs(k1) != n && 2 * std::abs(k2) != n) {
          const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
          uh = (static_cast<double>(k1) * wx.at(i, j) + static_cast<double>(k2) * wy.at(i, j)) * norm / (kTwoPi * kI * kk);
        }
        u.at(i, j) = uh;
        gx.at(i, j) = kTwoPi * kI * static_cast<double>(k1) * uh;
        gy.at(i, j) = kTwoPi * kI * static_cast<double>(k2) * uh;
      }
    gx.backward();
    gy.backward();
    double residual = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d& w = samples[i * n + j];
        residual = std::max(residual, std::hypot(w(0) - gx.at(i, j).real(), w(1) - gy.at(i, j).real()));
      }
    last_residual = residual;
    if (residual > tol) continue;
    TransferPrimitive out;
    out.grid = n;
    out.residual = residual;
    double largest = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) largest = std::max(largest, std::abs(u.at(i, j)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (largest > 0 && std::abs(u.at(i, j)) > 1e-14 * largest)
          out.u.coeffs.push_back({{u.signed_index(i), u.signed_index(j)}, u.at(i, j)});
    return out;
  }
  throw Error(ErrorCode::ResolutionInsufficient, "transfer primitive residual " + std::to_string(last_residual) + " above tolerance");
}

Eigen::Vector2d OneForm::operator()(const Eigen::Vector2d& x) const { return {std::real(a(x)), std::real(b(x))}; }

double OneForm::exterior_derivative(const Eigen::Vector2d& x) const { return b.gradient(x)(0) - a.gradient(x)(1); }

std::vector<OneForm> toral_form_battery() {
  using T = TrigObservable;
  auto sum = [](T p, const T& q) {
    for (const auto& [k, c] : q.coeffs) p.coeffs[k] += c;
    return p;
  };
  std::vector<OneForm> forms{
      {T::constant(1.0), {}},
      {{}, T::constant(1.0)},
      {T::cos_mode({1, 0}), T::sin_mode({0, 1})},
      {T::sin_mode({0, 1}), T::cos_mode({1, 0})},
      {T::cos_mode({1, 1}), T::cos_mode({1, -1})},
      {T::sin_mode({2, 1}), T::constant(0.3)},
      {sum(T::constant(0.5), T::cos_mode({1, 2})), T::sin_mode({2, -1})},
      {T::cos_mode({3, 1}), T::sin_mode({1, 3})},
      {sum(T::sin_mode({1, 0}), T::cos_mode({0, 2})), T::cos_mode({2, 2})},
      {T::cos_mode({0, 1}), sum(T::sin_mode({1, 0}), T::constant(0.2))},
  };
  for (auto& w : forms) {
    double norm = 0.0;
    for (const T* f : {&w.a, &w.b})
      for (const auto& [k, c] : f->coeffs) norm += std::abs(c) * (1.0 + kTwoPi * (std::abs(k[0]) + std::abs(k[1])));
    for (T* f : {&w.a, &w.b})
      for (auto& [k, c] : f->coeffs) c /= norm;
  }
  return forms;
}

Eigen::Vector2d unstable_class(const ToralMap& m) {
  const IntegerMatrix act = m.cohomology_action();
  Eigen::Vector2d vu, vs;
  eigen_split(act, vu, vs);
  return vu;
}

double CurrentHandle::potential(const ToralMap& m, const Eigen::Vector2d& x) const {
  double v = 0.0;
  Eigen::Vector2d y = reduce(x);
  for (int k = 0; k < depth; ++k) {
    const Eigen::Vector2d& c = term_classes[k];
    v += c(0) * u_x(y) + c(1) * u_y(y);
    if (k + 1 < depth) y = m(y);
  }
  return v;
}

nlohmann::json CurrentHandle::to_json() const {
  auto table = [](const PeriodicFunction& f) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, c] : f.coeffs) j.push_back({{"k", {k[0], k[1]}}, {"re", c.real()}, {"im", c.imag()}});
    return j;
  };
  return {{"class", {cls(0), cls(1)}},
          {"harmonic_part", {cls(0), cls(1)}},
          {"depth", depth},
          {"tail_bound", tail_bound},
          {"expanding_modulus", expanding_modulus},
          {"u_unit_bound", u_unit_bound},
          {"solver_residual", solver_residual},
          {"potential_terms", {{"u_e1", table(u_x)}, {"u_e2", table(u_y)}}}};
}

CurrentHandle build_unstable_current(const ToralMap& m, const Eigen::Vector2d& c, int depth) {
  if (depth < 0) throw Error(ErrorCode::InvalidArgument, "depth must be >= 0");
  const IntegerMatrix act = m.cohomology_action();
  Eigen::Matrix2d a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = static_cast<double>(act(i, j));
  Eigen::Vector2d vu, vs;
  const auto ev = eigen_split(act, vu, vs);
  if ((a * c - ev[0] * c).norm() > 1e-9 * std::max(1.0, std::abs(ev[0]) * c.norm()))
    throw Error(ErrorCode::InvalidArgument, "class is not in the expanding subspace");
  CurrentHandle h;
  h.cls = c;
  h.depth = depth;
  h.expanding_modulus = std::abs(ev[0]);
  const TransferPrimitive px = transfer_primitive(m, {1.0, 0.0});
  const TransferPrimitive py = transfer_primitive(m, {0.0, 1.0});
  h.u_x = px.u;
  h.u_y = py.u;
  h.solver_residual = std::max(px.residual, py.residual);
  h.u_unit_bound = std::hypot(h.u_x.sup_bound(), h.u_y.sup_bound());
  // c is an eigenvector, so the backward classes are scalar multiples; iterating the
  // inverse matrix would amplify the rounding in the stable direction.
  for (int k = 1; k <= depth; ++k) h.term_classes.push_back(c * std::pow(ev[0], -k));
  const double rho = h.expanding_modulus;
  h.tail_bound = h.u_unit_bound * c.norm() * std::pow(rho, -depth) / (1.0 - 1.0 / rho);
  return h;
}

double current_pairing(const ToralMap& m, const CurrentHandle& b, const OneForm& w, int grid) {
  // Harmonic part integrates exactly from the zero modes; the potential part by quadrature.
  const double harmonic = b.cls(0) * std::real(w.b.mean()) - b.cls(1) * std::real(w.a.mean());
  if (b.depth == 0 || (b.u_x.coeffs.empty() && b.u_y.coeffs.empty())) return harmonic;
  double acc = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const Eigen::Vector2d x = quadrature_node(i, j, grid);
      const double dw = w.exterior_derivative(x);
      if (dw != 0.0) acc += b.potential(m, x) * dw;
    }
  return harmonic - acc / (static_cast<double>(grid) * grid);
}

double equivariance_residual(const ToralMap& m, const Eigen::Vector2d& c, int depth, const OneForm& w, int grid) {
  const IntegerMatrix act = m.cohomology_action();
  const Eigen::Vector2d image_class(static_cast<double>(act(0, 0)) * c(0) + static_cast<double>(act(0, 1)) * c(1),
                                    static_cast<double>(act(1, 0)) * c(0) + static_cast<double>(act(1, 1)) * c(1));
  const CurrentHandle pushed = build_unstable_current(m, image_class, depth);
  const CurrentHandle base = build_unstable_current(m, c, depth);
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const Eigen::Vector2d x = quadrature_node(i, j, grid);
      const Eigen::Vector2d ax = m(x);
      const Eigen::Matrix2d jac = m.jacobian(x);
      const double det = jac.determinant();
      const Eigen::Vector2d wa = w(ax);
      const Eigen::Vector2d pulled = jac.transpose() * wa;
      const double dw = w.exterior_derivative(ax);
      lhs += pushed.cls(0) * pulled(1) - pushed.cls(1) * pulled(0) - pushed.potential(m, x) * dw * det;
      rhs += (c(0) * wa(1) - c(1) * wa(0) - base.potential(m, ax) * dw) * det;
    }
  return (lhs - rhs) / (static_cast<double>(grid) * grid);
}

EquivarianceDecay equivariance_decay(const ToralMap& m, const Eigen::Vector2d& c, int max_depth, int grid) {
  if (max_depth < 2) throw Error(ErrorCode::InvalidArgument, "need at least two depths");
  const auto battery = toral_form_battery();
  EquivarianceDecay out;
  for (int n = 1; n <= max_depth; ++n) {
    double worst = 0.0, err = 0.0;
    for (const auto& w : battery) {
      const double fine = equivariance_residual(m, c, n, w, 2 * grid);
      worst = std::max(worst, std::abs(fine));
      err = std::max(err, std::abs(fine - equivariance_residual(m, c, n, w, grid)));
    }
    out.residuals.push_back(worst);
    out.quadrature_error.push_back(err);
  }
  out.roundoff_floor = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, out.residuals[0]);
  for (int i = 0; i < max_depth; ++i)
    out.resolved.push_back(out.residuals[i] > out.roundoff_floor && out.quadrature_error[i] <= 0.1 * out.residuals[i]);
  std::vector<double> xs, ys;
  for (int i = 0; i < max_depth; ++i)
    if (out.resolved[i]) xs.push_back(i + 1.0), ys.push_back(out.residuals[i]);
  for (int i = static_cast<int>(ys.size()) - 2; i >= 0; --i) ys[i] = std::max(ys[i], ys[i + 1]);
  out.envelope = ys;
  out.fitted = static_cast<int>(xs.size());
  const bool exact = std::all_of(out.residuals.begin(), out.residuals.end(), [&](double r) { return r <= out.roundoff_floor; });
  if (exact) return out;  // ratio 0: the residual vanishes at every depth
  if (out.fitted < 2) throw Error(ErrorCode::ResolutionInsufficient, "fewer than two resolved depths in the equivariance decay");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = out.fitted;
  for (int i = 0; i < out.fitted; ++i) {
    const double x = xs[i], y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.ratio = std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
  return out;
}

std::complex<double> exact_correlation(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g, int n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "correlation lag must be >= 0");
  const IntegerMatrix lt = L.transpose();
  std::complex<double> acc = 0.0;
  for (const auto& [k, fk] : f.coeffs) {
    Frequency q = k;
    bool escaped = false;
    for (int s = 0; s < n && !escaped; ++s) {
      const std::int64_t a = lt(0, 0) * q[0] + lt(0, 1) * q[1];
      const std::int64_t b = lt(1, 0) * q[0] + lt(1, 1) * q[1];
      q = {a, b};
      // Hyperbolic orbits of nonzero frequencies never return once far enough out.
      if (std::max(std::abs(a), std::abs(b)) > (std::int64_t{1} << 40)) escaped = true;
    }
    if (escaped) continue;
    acc += fk * std::conj(g.coefficient(q));
  }
  return acc;
}

int correlation_horizon(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g) {
  const IntegerMatrix lt = L.transpose();
  Eigen::Vector2d vu, vs;
  const auto ev = eigen_split(lt, vu, vs);
  Eigen::Matrix2d basis;
  basis.col(0) = vu;
  basis.col(1) = vs;
  const Eigen::Matrix2d inv = basis.inverse();
  const double lambda = std::abs(ev[0]);
  const double reach = std::sqrt(2.0) * static_cast<double>(g.max_frequency()) + 1.0;
  int last = -1;
  for (const auto& [k, fk] : f.coeffs) {
    if ((k[0] == 0 && k[1] == 0) || fk == 0.0) continue;
    const Eigen::Vector2d coords = inv * Eigen::Vector2d(static_cast<double>(k[0]), static_cast<double>(k[1]));
    Frequency q = k;
    if (g.coefficient(q) != 0.0) last = std::max(last, 0);
    double grow = 1.0;
    for (int n = 1; n <= 400; ++n) {
      q = {lt(0, 0) * q[0] + lt(0, 1) * q[1], lt(1, 0) * q[0] + lt(1, 1) * q[1]};
      grow *= lambda;
      if (g.coefficient(q) != 0.0) last = std::max(last, n);
      // |q| >= |unstable part| - |stable part|; past the support of g for good.
      if (grow * std::abs(coords(0)) - std::abs(coords(1)) / grow > reach) break;
    }
  }
  return last;
}

}  // namespace pa
