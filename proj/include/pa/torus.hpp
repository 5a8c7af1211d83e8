#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pa/integer_matrix.hpp"

namespace pa {

using Frequency = std::array<std::int64_t, 2>;

// Finite Fourier series on the torus R^2 / Z^2.
struct TrigObservable {
  std::map<Frequency, std::complex<double>> coeffs;

  std::complex<double> operator()(const Eigen::Vector2d& x) const;
  // Gradient of the real part.
  Eigen::Vector2d gradient(const Eigen::Vector2d& x) const;
  std::complex<double> mean() const;
  std::complex<double> coefficient(const Frequency& k) const;
  double l1_norm() const;
  bool is_real(double tol = 1e-14) const;
  // Largest sup-norm of a frequency coordinate.
  std::int64_t max_frequency() const;

  // Real, zero-mean, `count` conjugate pairs with frequencies of sup-norm <= max_freq.
  static TrigObservable random_zero_mean(int max_freq, int count, std::uint64_t seed);
  static TrigObservable constant(double c);
  static TrigObservable cos_mode(const Frequency& k, double amplitude = 1.0);
  static TrigObservable sin_mode(const Frequency& k, double amplitude = 1.0);

  nlohmann::json to_json() const;
  static TrigObservable from_json(const nlohmann::json& j);
};

// Real vector field with trigonometric-polynomial components.
struct TrigVectorField {
  TrigObservable x, y;

  Eigen::Vector2d operator()(const Eigen::Vector2d& p) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& p) const;
  bool empty() const { return x.coeffs.empty() && y.coeffs.empty(); }
  nlohmann::json to_json() const;
  static TrigVectorField from_json(const nlohmann::json& j);
};

// x -> L x + eps psi(x) mod 1.
struct ToralMap {
  IntegerMatrix linear_part;
  TrigVectorField perturbation;
  double epsilon = 0.0;
  bool linear = true;
  double cone_aperture = 1.0;  // |stable coord| <= aperture |unstable coord|
  double cone_bound = std::numeric_limits<double>::infinity();  // largest grid-verified epsilon
  double lambda = 0.0;  // modulus of the expanding eigenvalue of the linear part
  Eigen::Vector2d unstable_eigenvector, stable_eigenvector;

  Eigen::Matrix2d linear_matrix() const;
  Eigen::Vector2d lift(const Eigen::Vector2d& x) const;  // without reduction mod 1
  Eigen::Vector2d operator()(const Eigen::Vector2d& x) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& x) const;
  Eigen::Vector2d inverse(const Eigen::Vector2d& x) const;
  // Action on H_1 from winding numbers of the images of the generator loops.
  IntegerMatrix homology_action() const;
  // Pullback action on H^1: transpose of the homology action.
  IntegerMatrix cohomology_action() const { return homology_action().transpose(); }
  nlohmann::json to_json() const;
};

inline constexpr int kConeGrid = 256;
inline constexpr int kConeDirections = 8;

ToralMap make_toral_map(const IntegerMatrix& L, const TrigVectorField& psi = {}, double epsilon = 0.0);
bool cone_invariant(const ToralMap& m, double epsilon);

// Unit unstable direction at x from n forward pushes of the unstable cone axis along
// the backward orbit. Throws NoConvergence when the last increment exceeds tol.
Eigen::Vector2d unstable_direction(const ToralMap& m, const Eigen::Vector2d& x, int n, double tol = 1e-12);
// Increments |X_j - X_{j-1}| for j = 1..n.
std::vector<double> unstable_direction_increments(const ToralMap& m, const Eigen::Vector2d& x, int n);
// nu_n(x): stretch factor of DA^n along the unstable direction.
double expansion_cocycle(const ToralMap& m, const Eigen::Vector2d& x, int n);

// Real periodic function given by a Fourier table.
struct PeriodicFunction {
  std::vector<std::pair<Frequency, std::complex<double>>> coeffs;

  double operator()(const Eigen::Vector2d& x) const;
  double sup_bound() const;  // sum of coefficient moduli
  PeriodicFunction scaled(double s) const;
};

struct TransferPrimitive {
  PeriodicFunction u;
  int grid = 0;
  double residual = 0.0;  // sup over the grid of |A* alpha(C) - alpha(A# C) - du|
};

// Mean-zero u(C) with A* alpha(C) = alpha(A# C) + du(C), alpha(C) the constant form.
TransferPrimitive transfer_primitive(const ToralMap& m, const Eigen::Vector2d& c, double tol = 1e-10, int max_grid = 256);

// 1-form a dx + b dy with trigonometric coefficients.
struct OneForm {
  TrigObservable a, b;

  Eigen::Vector2d operator()(const Eigen::Vector2d& x) const;
  double exterior_derivative(const Eigen::Vector2d& x) const;  // db/dx - da/dy
};

// Ten fixed 1-forms with sup|a| + sup|b| + sum of sup|first partials| <= 1.
std::vector<OneForm> toral_form_battery();

struct CurrentHandle {
  Eigen::Vector2d cls;  // cohomology class, equal to the harmonic part
  int depth = 0;
  double tail_bound = 0.0;
  double expanding_modulus = 0.0;
  std::vector<Eigen::Vector2d> term_classes;  // (A#)^-k C for k = 1..depth
  PeriodicFunction u_x, u_y;  // u(e_1), u(e_2)
  double u_unit_bound = 0.0;  // sup over unit classes of |u(C)|
  double solver_residual = 0.0;

  // U_N(x) = sum_k u((A#)^-k C)(A^(k-1) x).
  double potential(const ToralMap& m, const Eigen::Vector2d& x) const;
  nlohmann::json to_json() const;
};

CurrentHandle build_unstable_current(const ToralMap& m, const Eigen::Vector2d& c, int depth);
// Unit vector spanning the expanding eigenspace of the cohomology action.
Eigen::Vector2d unstable_class(const ToralMap& m);

// Pairing of the current with a form: int alpha(C) ^ w - int U_N dw on a grid x grid rule.
double current_pairing(const ToralMap& m, const CurrentHandle& b, const OneForm& w, int grid = 128);
// Pairing of B_N(A# C) with A* w minus the pairing of B_N(C) with w, the latter evaluated
// on the image nodes A(x_i) weighted by the Jacobian so both sides share quadrature nodes.
double equivariance_residual(const ToralMap& m, const Eigen::Vector2d& c, int depth, const OneForm& w, int grid = 128);

// Residuals are taken on a doubled grid; the change from the base grid estimates the
// quadrature error. The ratio is fitted over depths that are resolved (error below a
// tenth of the residual) and above the roundoff floor.
struct EquivarianceDecay {
  std::vector<double> residuals;  // max over the battery, depth 1..n
  std::vector<double> quadrature_error;
  std::vector<bool> resolved;
  std::vector<double> envelope;  // running max from the deep end over resolved depths
  double roundoff_floor = 0.0;
  int fitted = 0;  // depths used by the fit
  double ratio = 0.0;  // exp of the least-squares slope of log envelope
};
EquivarianceDecay equivariance_decay(const ToralMap& m, const Eigen::Vector2d& c, int max_depth, int grid = 128);

// <f o A^n, g> for the linear map L on the frequency lattice.
std::complex<double> exact_correlation(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g, int n);
// Largest n >= 0 for which some nonzero frequency of f is carried onto the support of g
// by (L^T)^n; -1 when none is. Correlations of zero-mean parts vanish beyond it.
int correlation_horizon(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g);

}  // namespace pa
