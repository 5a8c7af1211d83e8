#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "pa/model.hpp"
#include "pa/suspension.hpp"
#include "pa/torus.hpp"

namespace pa {

// Largest normalized pairing of the full-crossing integrals of f with an
// eigenvector of B for a secondary expanding eigenvalue; 0 when there is none.
double secondary_pairing(const PseudoAnosovModel& m, const CellObservable& f);

inline constexpr double kGenericPairing = 1e-3;

struct SuspensionPreset {
  std::string name;
  IetCombinatorics combinatorics;
  std::string loop;
  std::uint64_t observable_seed = 0;
  CellObservable observable;
  double pairing = 0.0;

  PseudoAnosovModel model() const { return pa_from_loop(combinatorics, loop, name); }
  nlohmann::json to_json() const;
};

struct ToralPreset {
  std::string name;
  IntegerMatrix linear_part;
  TrigVectorField perturbation;
  double epsilon = 0.0;
  std::uint64_t observable_seed = 0;
  TrigObservable observable;

  ToralMap map() const { return make_toral_map(linear_part, perturbation, epsilon); }
  nlohmann::json to_json() const;
};

using Preset = std::variant<SuspensionPreset, ToralPreset>;

// Draws seeded observables from `seed` upward until the secondary pairing is at least
// kGenericPairing (skipped for models without secondary exponents).
SuspensionPreset make_suspension_preset(const std::string& name, const IetCombinatorics& c, const std::string& loop,
                                        std::uint64_t seed);
// Observable with `terms` conjugate pairs of frequencies of sup-norm <= 5.
ToralPreset make_toral_preset(const std::string& name, const IntegerMatrix& L, const TrigVectorField& psi, double epsilon,
                              std::uint64_t seed, int terms = 6);

// Throws ConfigInvalid on malformed content and InvariantViolation when a stored
// suspension observable fails the genericity check.
Preset preset_from_json(const nlohmann::json& j);
nlohmann::json preset_to_json(const Preset& p);
// Throws PresetMissing when the file does not exist.
Preset load_preset(const std::string& path);
// Looks up <dir>/<name>.json.
Preset load_named_preset(const std::string& dir, const std::string& name);

}  // namespace pa
