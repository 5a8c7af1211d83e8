#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pa/cohomology.hpp"
#include "pa/suspension.hpp"
#include "pa/torus.hpp"

namespace pa {

struct DeviationSample {
  double T = 0.0;
  double S = 0.0;  // ergodic integral
  double E = 0.0;  // S - T * mean
};

struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double t_min = 0.0, t_max = 0.0;
  int points = 0;
  nlohmann::json to_json() const;
};

struct PeelOptions {
  double smoothing_decades = 1.0;  // window of the average coefficient subtracted for later terms
  double window_decades = 0.25;    // width of the disjoint windows used by the flags
  double floor_fraction = 0.25;    // c0 = floor_fraction * sup |c|
  int min_windows = 10;            // recurrence needs this many windows above c0
  double growth_factor = 2.0;      // bounded: sup over the later half of log T <= factor * sup over the earlier half
  double t_min = 0.0;              // samples below are ignored
};

struct PeeledTerm {
  int index = 0;  // exponent row index i
  int power = 1;  // j: multiplies (log T)^(j-1)
  double nu = 0.0;
  std::vector<double> coeff;  // per sample
  std::vector<double> window_max;  // max |c| per disjoint window
  double sup = 0.0;
  double sup_early = 0.0, sup_late = 0.0;
  double floor = 0.0;  // measured c0
  int windows_above = 0;
  double growth_slope = 0.0;  // log-log slope of the window maxima, diagnostic
  bool bounded = false;
  bool recurrent = false;
  nlohmann::json to_json() const;
};

struct DeviationReport {
  std::vector<DeviationSample> samples;
  std::vector<double> envelope;  // running max of |E|
  std::vector<PowerFit> fits;
  std::vector<PeeledTerm> peeled;
  std::vector<double> remainder;  // E minus the smoothed peeled terms
  nlohmann::json diagnostics = nlohmann::json::object();

  void fill_envelope();
  nlohmann::json to_json() const;
};

// T_min, T_min * ratio, ... up to T_max.
std::vector<double> geometric_grid(double t_min, double t_max, double ratio);

// Ergodic integrals along the flow orbit of x.
DeviationReport deviation_series(const PseudoAnosovModel& m, const CellObservable& f, const FlowPoint& x,
                                 const std::vector<double>& T_grid);
// Ergodic integrals along the straight line x + t v, v the unit expanding eigendirection of L.
DeviationReport deviation_series(const IntegerMatrix& L, const TrigObservable& f, const Eigen::Vector2d& x,
                                 const std::vector<double>& T_grid);

// Seeded base points away from the singular orbits.
std::vector<FlowPoint> seeded_starts(const PseudoAnosovModel& m, int count, std::uint64_t seed);
std::vector<Eigen::Vector2d> seeded_torus_starts(int count, std::uint64_t seed);

// Reports for several starts, computed on up to `workers` threads.
std::vector<DeviationReport> deviation_sweep(const PseudoAnosovModel& m, const CellObservable& f,
                                             const std::vector<FlowPoint>& starts, const std::vector<double>& T_grid,
                                             int workers = 1);
// Envelope of the sup over starts: E holds max |E| over the reports.
DeviationReport pooled_envelope(const std::vector<DeviationReport>& reports);

// Least squares of log envelope on log T over samples with T in [t_min, t_max].
// Throws DegenerateWindow with fewer than 10 points or a nonpositive envelope value.
PowerFit fit_power_law(const DeviationReport& r, double t_min, double t_max);

// Coefficients of (log T)^(j-1) T^nu_i for the secondary exponents, in the order
// i ascending, j descending. Throws ExponentCollision.
void peel_expansion(DeviationReport& r, const ExponentTable& exponents, const PeelOptions& opt = {});

// Cell observable f = d g / dt along the flow.
CellObservable flow_derivative(const PseudoAnosovModel& m, const CellObservable& g);

struct BasicCurrentRow {
  double tangency = 0.0;  // (1/T) int_gamma i_Y w
  double max_coefficient = 0.0;  // largest peeled coefficient of i_Y w against the flow
  nlohmann::json to_json() const;
};
// 2-forms w = phi dx ^ dy with phi from the battery profiles; Y the unit flow field.
std::vector<BasicCurrentRow> basic_current_check(const PseudoAnosovModel& m, const std::vector<CellObservable>& densities,
                                                 const FlowPoint& x, const std::vector<double>& T_grid);

struct CorrelationRow {
  int n = 0;
  std::complex<double> value;
  double residual = 0.0;
  double bound = 0.0;
};
struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  int vanishing_index = -1;  // correlations of the zero-mean parts vanish beyond it
  int middle_terms = 0;      // secondary expanding exponents of L
  int polylog_power = 0;     // max(J0, 1) + 1
  double h_top = 0.0;
  double constant = 0.0;     // C in the bound
  double triangle_bound = 0.0;  // (sum |f^|)(sum |g^|) over nonzero frequencies
  bool within_bound = true;
  nlohmann::json to_json() const;
};
CorrelationReport correlation_expansion_check(const IntegerMatrix& L, const TrigObservable& f, const TrigObservable& g,
                                              int n_max);

}  // namespace pa
