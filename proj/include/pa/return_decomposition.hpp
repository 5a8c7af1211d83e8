#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pa/suspension.hpp"

namespace pa {

struct UnstableCurve {
  FlowPoint start;
  FieldElement duration;
};

// Crossings of rectangle tops by a curve, resolved by tower depth: counts[k][beta]
// is the number of complete depth-k towers over interval beta that the curve
// crosses. The visitation vector is sum_k B^k counts[k].
struct HomologyClass {
  std::vector<std::vector<long long>> counts;
  std::vector<BigInt> visits;

  bool operator==(const HomologyClass& o) const { return counts == o.counts && visits == o.visits; }
  void add(int depth, int cell, long long n = 1);
  void add(const HomologyClass& o);
  void finalize(const PseudoAnosovModel& m);
  // Sum of visits_alpha * value_alpha.
  double pairing(const std::vector<double>& per_cell) const;
};

HomologyClass crossing_class(const PseudoAnosovModel& m, const Traversal& tr);

// Floor of the depth-k tower containing a point: the point is reached from base
// point x of I^(k) after time offset < lambda^k h_label.
struct TowerFloor {
  int label = 0;
  FieldElement x;
  FieldElement offset;
};
std::vector<TowerFloor> tower_floors(const PseudoAnosovModel& m, const FlowPoint& p, int max_depth);

// Closest return at scale l from a point: the orbit piece of length lambda^l h_beta,
// with beta the label of the depth-l tower containing the point.
struct ReturnItem {
  int scale = 0;
  int cell = 0;
  FlowPoint start;
  FieldElement duration;
  HomologyClass crossings;
};

struct ReturnDecomposition {
  std::vector<ReturnItem> items;  // in orbit order, scales non-increasing
  std::vector<int> multiplicities;  // indexed by scale
  FieldElement remainder_duration;  // final piece shorter than every admissible return
  FieldElement total_duration;
  HomologyClass homology;  // crossings of all items
  double c = 0.0, C = 0.0;  // shortest / longest first return

  nlohmann::json to_json() const;
};

// Greedy from the start: take the largest scale whose closest return fits, never
// exceeding the previous scale.
ReturnDecomposition decompose_closest_returns(const PseudoAnosovModel& m, const UnstableCurve& g);

struct DecompositionCheck {
  bool multiplicity_ok = true;
  bool lengths_ok = true;
  bool remainder_ok = true;
  bool additive = true;
  int worst_multiplicity = 0;
  double multiplicity_bound = 0.0;  // C lambda / c
};
DecompositionCheck check_decomposition(const PseudoAnosovModel& m, const ReturnDecomposition& dec);

struct FunctionalValue {
  Eigen::VectorXd value;  // coordinates in the unstable basis of the split
  int depth = 0;
  double tail_bound = 0.0;
};

// Weighted class sum over the decomposition pulled back to scale [log T / log lambda].
FunctionalValue c_plus(const PseudoAnosovModel& m, const ReturnDecomposition& dec);
// Geometric-series bound on |c_plus| for every curve.
double c_plus_bound(const PseudoAnosovModel& m);

// Image of a point / curve under the pseudo-Anosov map A^n (n >= 0).
FlowPoint renormalize_point(const PseudoAnosovModel& m, const FlowPoint& p, int n);
UnstableCurve renormalize(const PseudoAnosovModel& m, const UnstableCurve& g, int n);

// Truncated functional: unstable part of the crossing class of A^N(g), pulled back by B^-N.
FunctionalValue bufetov_beta(const PseudoAnosovModel& m, const UnstableCurve& g, int N);
// B acting on unstable coordinates.
Eigen::VectorXd push_forward(const PseudoAnosovModel& m, const Eigen::VectorXd& v);

// Additivity residual |beta(g1 g2) - beta(g1) - beta(g2)| for consecutive pieces g1, g2 of
// lengths t1, t2 from p, and scaling residual |beta(A g1) - B beta(g1)|.
struct FunctionalCheck {
  FunctionalValue first;
  double additivity = 0.0;
  double scaling = 0.0;
};
FunctionalCheck functional_check(const PseudoAnosovModel& m, const FlowPoint& p, const FieldElement& t1, const FieldElement& t2,
                                 int N);

// Ten fixed cell-profile forms with sup |f| + sup |df/dy| <= 1 on every cell.
std::vector<CellObservable> form_battery(const PseudoAnosovModel& m);

// Largest difference over the battery between the curve pairing and the pairing
// of the current reconstructed from the functional.
double asymptotic_gap(const PseudoAnosovModel& m, const UnstableCurve& g, const std::vector<CellObservable>& battery, int N);

}  // namespace pa
