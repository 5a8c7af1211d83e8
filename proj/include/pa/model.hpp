#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pa/cohomology.hpp"
#include "pa/iet.hpp"
#include "pa/number_field.hpp"

namespace pa {

// Linear pseudo-Anosov map realised as the fixed point of a closed Rauzy loop.
// Lengths and heights live in Q(lambda); the suspension is the special flow
// over the exchange with roof h_alpha on the interval labelled alpha.
struct PseudoAnosovModel {
  std::string name;
  IetCombinatorics combinatorics;
  std::string loop;  // letters 't' / 'b'
  IntegerMatrix matrix;  // product of the loop's elementary matrices
  std::shared_ptr<const NumberField> field;
  FieldElement lambda;
  FieldVector lengths;  // B l = lambda l, sum 1
  FieldVector heights;  // B^T h = lambda h, sum l h = 1
  FieldVector top_left, bottom_left;  // left endpoints by label
  std::vector<double> lengths_d, heights_d, top_left_d, bottom_left_d;
  SpectralSplit split;
  int genus = 0;
  std::vector<int> cone_angles;  // in units of 2 pi
  double c_min = 0.0, c_max = 0.0;  // min / max first-return time

  int d() const { return combinatorics.d(); }
  double lambda_d() const { return split.lambda; }
  // lambda^k for |k| <= kMaxPower.
  const FieldElement& lambda_pow(int k) const;
  // Label of the top interval containing x in [0, 1).
  int locate(const FieldElement& x) const;
  // Exchange of the base interval.
  FieldElement exchange(const FieldElement& x, int label) const { return x - top_left[label] + bottom_left[label]; }
  // Label of the bottom interval containing x, and the inverse exchange.
  int locate_bottom(const FieldElement& x) const;
  FieldElement inverse_exchange(const FieldElement& x, int label) const { return x - bottom_left[label] + top_left[label]; }
  // True when x is an interior discontinuity of the exchange.
  bool is_discontinuity(const FieldElement& x) const;

  nlohmann::json to_json() const;

  // B^k for 0 <= k <= kMaxPower; column beta counts depth-0 crossings of one depth-k return.
  const BigMatrix& matrix_power(int k) const;

  static constexpr int kMaxPower = 96;
  std::vector<FieldElement> powers_;  // lambda^{k} for k = -kMaxPower..kMaxPower
  std::vector<BigMatrix> matrix_powers_;
};

// Throws LoopNotClosed, NotPrimitive or PerronRootNotSimple.
PseudoAnosovModel pa_from_loop(const IetCombinatorics& c, const std::string& loop, const std::string& name = "");

// Product matrix of a word from c; throws LoopNotClosed if the word does not return.
IntegerMatrix loop_matrix(const IetCombinatorics& c, const std::string& loop);

// Every step of the loop, applied to the model's own lengths, must pick the
// loop's letter; afterwards the combinatorics returns and lengths equal l / lambda.
bool renormalization_fixed_point(const PseudoAnosovModel& m);

struct LoopSearchOptions {
  int max_length = 14;
  bool require_secondary_expanding = true;  // some |mu| in (1, lambda)
  bool require_full_degree = true;  // minimal polynomial of lambda has degree 2g
};

// Shortest closed Rauzy loop (then lexicographic with t < b) with primitive
// product meeting the options. Empty when none is found up to max_length.
std::optional<std::string> search_loop(const IetCombinatorics& c, const LoopSearchOptions& opt);

}  // namespace pa
