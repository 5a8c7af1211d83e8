#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pa/model.hpp"

namespace pa {

// Point of the special flow: the vertical line over base position x (absolute,
// in [0, 1)) inside the rectangle of `cell`, at height y in [0, h_cell).
struct FlowPoint {
  int cell = 0;
  FieldElement x;
  FieldElement y;
};

FlowPoint base_point(const PseudoAnosovModel& m, const FieldElement& x);
FlowPoint make_point(const PseudoAnosovModel& m, const FieldElement& x, const FieldElement& y);

// Exact translation flow; throws HitSingularity when the orbit reaches a
// discontinuity of the base exchange.
FlowPoint flow_step(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& dt);

// Terms coeff * s^power * {1, cos, sin}(2 pi freq s) of s = y / h_cell.
struct ProfileTerm {
  enum class Kind { Poly, Cos, Sin };
  double coeff = 0.0;
  int power = 0;
  Kind kind = Kind::Poly;
  int freq = 0;
};

// Observable depending on the cell and the height inside it.
struct CellObservable {
  std::vector<std::vector<ProfileTerm>> cells;

  double profile(int cell, double s) const;
  // Exact integral of the profile over [s0, s1].
  double profile_integral(int cell, double s0, double s1) const;
  // Integral along the flow between heights y0 <= y1 of a cell of height h.
  double integral(int cell, double h, double y0, double y1) const { return h * profile_integral(cell, y0 / h, y1 / h); }
  double sup_bound() const;  // sum of |coeff| over the worst cell

  static CellObservable constant(int d, double c);
  // Seeded observable with low-degree polynomial and trigonometric terms per cell.
  static CellObservable random(int d, std::uint64_t seed);

  nlohmann::json to_json() const;
  static CellObservable from_json(const nlohmann::json& j);
};

double mean(const PseudoAnosovModel& m, const CellObservable& f);

// Integrals of f over one full depth-k return from each depth-k interval:
// sums[k] = (B^T)^k F with F the full-crossing integrals.
struct TowerSums {
  std::vector<std::vector<double>> sums;
};
TowerSums tower_sums(const PseudoAnosovModel& m, const CellObservable& f, int max_depth = PseudoAnosovModel::kMaxPower);

// One full return to the depth-`depth` base interval [0, lambda^-depth).
struct TowerStep {
  int depth = 0;
  int cell = 0;         // label of the depth-depth interval
  FieldElement base;    // absolute base position where the return starts
  FieldElement duration;
};

// Orbit segment resolved into a partial head crossing, tower returns and a
// partial tail crossing; durations add up exactly to T.
struct Traversal {
  FlowPoint start, end;
  FieldElement head_duration;  // from start.y inside start.cell
  std::vector<TowerStep> steps;
  int tail_cell = 0;
  FieldElement tail_base;
  FieldElement tail_duration;
  int max_depth_reached = 0;
};

Traversal traverse(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& T);

double birkhoff_integral(const PseudoAnosovModel& m, const TowerSums& sums, const CellObservable& f, const FlowPoint& p,
                         const FieldElement& T);
double birkhoff_integral(const PseudoAnosovModel& m, const CellObservable& f, const FlowPoint& p, const FieldElement& T);
double birkhoff_integral(const PseudoAnosovModel& m, const TowerSums& sums, const CellObservable& f, const Traversal& tr);

// Exact time as a field element.
FieldElement field_time(const PseudoAnosovModel& m, double t);

}  // namespace pa
