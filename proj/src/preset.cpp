#include "pa/preset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "pa/cohomology.hpp"
#include "pa/error.hpp"

namespace pa {

double secondary_pairing(const PseudoAnosovModel& m, const CellObservable& f) {
  const int d = m.d();
  Eigen::VectorXd full(d);
  for (int a = 0; a < d; ++a) full[a] = f.integral(a, m.heights_d[a], 0.0, m.heights_d[a]);
  if (full.norm() == 0.0) return 0.0;
  // Tower integrals are (B^T)^k F; the component growing like |mu|^k is the
  // pairing of F with the mu-eigenvector of B.
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(m.matrix));
  double best = 0.0;
  bool any = false;
  for (int i = 0; i < d; ++i) {
    const double mod = std::abs(es.eigenvalues()[i]);
    if (mod <= 1.0 + 1e-9 || mod >= m.lambda_d() - 1e-9) continue;
    any = true;
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    const std::complex<double> p = v.dot(full.cast<std::complex<double>>());
    best = std::max(best, std::abs(p) / (v.norm() * full.norm()));
  }
  return any ? best : 0.0;
}

static bool has_secondary(const PseudoAnosovModel& m) { return deviation_exponents(m.split).rows.size() > 1; }

nlohmann::json SuspensionPreset::to_json() const {
  return {{"name", name},
          {"kind", "suspension"},
          {"combinatorics", combinatorics.to_json()},
          {"loop", loop},
          {"observable_seed", observable_seed},
          {"observable", observable.to_json()},
          {"secondary_pairing", pairing}};
}

nlohmann::json ToralPreset::to_json() const {
  return {{"name", name},
          {"kind", "toral"},
          {"linear_part", linear_part.to_json()},
          {"perturbation", perturbation.to_json()},
          {"epsilon", epsilon},
          {"observable_seed", observable_seed},
          {"observable", observable.to_json()}};
}

SuspensionPreset make_suspension_preset(const std::string& name, const IetCombinatorics& c, const std::string& loop,
                                        std::uint64_t seed) {
  SuspensionPreset p;
  p.name = name;
  p.combinatorics = c;
  p.loop = loop;
  const PseudoAnosovModel m = p.model();
  const bool secondary = has_secondary(m);
  for (std::uint64_t s = seed;; ++s) {
    CellObservable f = CellObservable::random(m.d(), s);
    const double pairing = secondary_pairing(m, f);
    if (!secondary || pairing >= kGenericPairing) {
      p.observable_seed = s;
      p.observable = std::move(f);
      p.pairing = pairing;
      return p;
    }
  }
}

ToralPreset make_toral_preset(const std::string& name, const IntegerMatrix& L, const TrigVectorField& psi, double epsilon,
                              std::uint64_t seed, int terms) {
  ToralPreset p;
  p.name = name;
  p.linear_part = L;
  p.perturbation = psi;
  p.epsilon = epsilon;
  p.observable_seed = seed;
  p.observable = TrigObservable::random_zero_mean(5, terms, seed);
  p.map();  // validates L, psi and epsilon
  return p;
}

Preset preset_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "suspension") {
      SuspensionPreset p;
      p.name = j.at("name").get<std::string>();
      p.combinatorics = IetCombinatorics::from_json(j.at("combinatorics"));
      p.loop = j.at("loop").get<std::string>();
      p.observable_seed = j.value("observable_seed", std::uint64_t{0});
      p.observable = CellObservable::from_json(j.at("observable"));
      const PseudoAnosovModel m = p.model();
      if (static_cast<int>(p.observable.cells.size()) != m.d())
        throw Error(ErrorCode::ConfigInvalid, "observable has " + std::to_string(p.observable.cells.size()) + " cells, model has " +
                                                  std::to_string(m.d()));
      p.pairing = secondary_pairing(m, p.observable);
      if (has_secondary(m) && p.pairing < kGenericPairing)
        throw Error(ErrorCode::InvariantViolation, "stored observable of preset '" + p.name + "' is not generic (pairing " +
                                                       std::to_string(p.pairing) + ")");
      return p;
    }
    if (kind == "toral") {
      ToralPreset p;
      p.name = j.at("name").get<std::string>();
      p.linear_part = IntegerMatrix::from_json(j.at("linear_part"));
      p.perturbation = TrigVectorField::from_json(j.value("perturbation", nlohmann::json::object()));
      p.epsilon = j.value("epsilon", 0.0);
      p.observable_seed = j.value("observable_seed", std::uint64_t{0});
      p.observable = TrigObservable::from_json(j.at("observable"));
      p.map();
      return p;
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown preset kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed preset: ") + e.what());
  }
}

nlohmann::json preset_to_json(const Preset& p) {
  return std::visit([](const auto& v) { return v.to_json(); }, p);
}

Preset load_preset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::PresetMissing, "cannot open preset file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "preset file '" + path + "' is not JSON: " + e.what());
  }
  return preset_from_json(j);
}

Preset load_named_preset(const std::string& dir, const std::string& name) {
  const std::filesystem::path path = std::filesystem::path(dir) / (name + ".json");
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::PresetMissing, "no preset '" + name + "' in " + dir);
  return load_preset(path.string());
}

}  // namespace pa
