#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pa/integer_matrix.hpp"
#include "pa/number_field.hpp"

namespace pa {

enum class Side { Top, Bottom };

char side_letter(Side s);
Side side_from_letter(char c);

// Labelled permutation pair; labels are 0..d-1, each row lists labels left to right.
struct IetCombinatorics {
  std::vector<int> top, bottom;

  int d() const { return static_cast<int>(top.size()); }
  void validate() const;
  bool irreducible() const;
  bool operator==(const IetCombinatorics&) const = default;

  // Rank of the intersection form is 2g; s = d + 1 - 2g marked points.
  int genus() const;
  // Cone angles of the marked points in units of 2*pi.
  std::vector<int> cone_angles() const;

  nlohmann::json to_json() const;
  static IetCombinatorics from_json(const nlohmann::json& j);
  std::string to_string() const;
};

// Combinatorial half of a Rauzy move: new combinatorics and the matrix E with
// lengths_old = E * lengths_new.
struct RauzyMove {
  IetCombinatorics next;
  IntegerMatrix elementary;
};
RauzyMove rauzy_move(const IetCombinatorics& c, Side winner);

struct RauzyStep {
  IetCombinatorics next;
  FieldVector lengths;
  IntegerMatrix elementary;
};

// Side whose last interval is longer. Throws TieBreakUndefined on equality.
Side rauzy_winner(const IetCombinatorics& c, const FieldVector& lengths);
// Throws TieBreakUndefined, or WrongSide when `side` is not the winner.
RauzyStep rauzy_step(const IetCombinatorics& c, const FieldVector& lengths, Side side);

}  // namespace pa
