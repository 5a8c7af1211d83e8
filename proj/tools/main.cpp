#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "output.hpp"
#include "pa/c_api.h"

using nlohmann::json;
using namespace tool;

namespace {

// Error carrying a library status, rendered with the subcommand context.
struct ModuleError : std::runtime_error {
  pa_status status;
  ModuleError(pa_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(pa_status s, const std::string& context) {
  if (s != PA_OK) throw ModuleError(s, context + ": " + pa_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  pa_string_free(s);
  return out;
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Model = std::unique_ptr<pa_model, Deleter<pa_model, pa_model_free>>;
using Observable = std::unique_ptr<pa_observable, Deleter<pa_observable, pa_observable_free>>;
using ToralMap = std::unique_ptr<pa_toral_map, Deleter<pa_toral_map, pa_toral_map_free>>;
using Trig = std::unique_ptr<pa_trig, Deleter<pa_trig, pa_trig_free>>;
using Sweep = std::unique_ptr<pa_sweep, Deleter<pa_sweep, pa_sweep_free>>;

struct Loaded {
  int kind = -1;  // 0 suspension, 1 toral
  Model model;
  Observable observable;
  ToralMap map;
  Trig trig;
  std::string sha256;
};

struct Run {
  std::string command;
  Config cfg;
  std::string out;
  int workers = 1;
  json summary;
  std::vector<std::string> violations;

  std::string path(const std::string& file) const { return (std::filesystem::path(out) / file).string(); }
  void violate(const std::string& what) { violations.push_back(what); }
};

std::string preset_dir(const Config& cfg) { return cfg.text("preset_dir", PA_DEFAULT_PRESET_DIR); }

Loaded load_preset(Run& run) {
  const std::string name = run.cfg.text("preset", "");
  if (name.empty()) throw ConfigError("this subcommand needs a preset (--preset or 'preset' key)");
  Loaded l;
  pa_model* m = nullptr;
  pa_observable* f = nullptr;
  pa_toral_map* t = nullptr;
  pa_trig* g = nullptr;
  check(pa_load_preset(preset_dir(run.cfg).c_str(), name.c_str(), &l.kind, &m, &f, &t, &g), "loading preset '" + name + "'");
  l.model.reset(m);
  l.observable.reset(f);
  l.map.reset(t);
  l.trig.reset(g);
  std::ifstream in(std::filesystem::path(preset_dir(run.cfg)) / (name + ".json"), std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  l.sha256 = sha256_hex(buf.str());
  run.summary["preset"] = name;
  run.summary["preset_sha256"] = l.sha256;
  return l;
}

// Suspension observable: the preset's stored one, "constant:<v>" or "seed:<n>".
Observable choose_observable(Run& run, Loaded& l) {
  const std::string spec = run.cfg.text("observable", "preset");
  const std::size_t d = pa_model_dim(l.model.get());
  pa_observable* f = nullptr;
  if (spec == "preset") return std::move(l.observable);
  if (spec.rfind("constant:", 0) == 0) {
    const double v = std::stod(spec.substr(9));
    check(pa_observable_constant(d, v, &f), "constant observable");
  } else if (spec.rfind("seed:", 0) == 0) {
    check(pa_observable_random(d, std::stoull(spec.substr(5)), &f), "seeded observable");
  } else {
    throw ConfigError("observable must be 'preset', 'constant:<value>' or 'seed:<n>', got '" + spec + "'");
  }
  return Observable(f);
}

std::vector<std::vector<int64_t>> matrix_rows(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
  std::vector<std::vector<int64_t>> rows;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != j.size()) throw ConfigError("matrix must be square");
    std::vector<int64_t> row;
    for (const auto& v : r) {
      if (!v.is_number_integer()) throw ConfigError("matrix entries must be integers");
      row.push_back(v.get<int64_t>());
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<int> label_row(const Config& cfg, const std::string& key) {
  const json j = cfg.json(key);
  if (!j.is_array()) throw ConfigError("'" + key + "' must be an array of labels");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError("'" + key + "' must hold integers");
    out.push_back(v.get<int>());
  }
  return out;
}

std::array<int64_t, 4> toral_matrix(Run& run, Loaded* l) {
  json rows;
  if (run.cfg.has("matrix")) {
    rows = run.cfg.json("matrix");
  } else {
    if (!l || l->kind != 1) throw ConfigError("needs 'matrix' or a toral preset");
    rows = json::parse(take([&] {
      char* s = nullptr;
      check(pa_toral_map_json(l->map.get(), &s), "toral map");
      return s;
    }()))["linear_part"];
  }
  const auto m = matrix_rows(rows);
  if (m.size() != 2) throw ConfigError("toral matrix must be 2x2");
  return {m[0][0], m[0][1], m[1][0], m[1][1]};
}

// Runs body(i) for i in [0, n) on the configured workers; body writes into slot i.
void parallel_for(int workers, std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(w);
  auto work = [&](std::size_t id) {
    try {
      for (std::size_t i = id; i < n; i += w) body(i);
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  if (w == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t id = 0; id < w; ++id) pool.emplace_back(work, id);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct CurveDraw {
  int64_t x_num;
  double y_frac;
  double T1, T2;
};

std::vector<CurveDraw> draw_curves(std::uint64_t seed, std::size_t count, double t_lo, double t_hi) {
  if (!(t_lo > 0 && t_hi >= t_lo)) throw ConfigError("need 0 < curve_min <= curve_max");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CurveDraw> out;
  const double a = std::log(t_lo), b = std::log(t_hi);
  for (std::size_t i = 0; i < count; ++i) {
    CurveDraw c;
    c.x_num = static_cast<int64_t>(rng() >> 34);
    c.y_frac = unit(rng);
    c.T1 = std::exp(a + (b - a) * unit(rng));
    c.T2 = std::exp(a + (b - a) * unit(rng));
    out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------- spectrum

void cmd_spectrum(Run& run) {
  json rows;
  if (run.cfg.has("matrix")) {
    rows = run.cfg.json("matrix");
  } else {
    Loaded l = load_preset(run);
    char* s = nullptr;
    if (l.kind == 0) {
      check(pa_model_json(l.model.get(), &s), "model");
      rows = json::parse(take(s))["matrix"];
    } else {
      check(pa_toral_map_json(l.map.get(), &s), "toral map");
      rows = json::parse(take(s))["linear_part"];
    }
  }
  const auto m = matrix_rows(rows);
  std::vector<int64_t> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  char* s = nullptr;
  check(pa_spectrum_json(flat.data(), m.size(), &s), "spectral split");
  const json spec = json::parse(take(s));

  CsvWriter csv({"index [1]", "re [1]", "im [1]", "modulus [1]", "algebraic_multiplicity [count]", "geometric_multiplicity [count]"});
  Series ev{"eigenvalues", {}, {}, true}, circle{"unit circle", {}, {}, false};
  std::vector<double> moduli;
  long long idx = 1;
  for (const auto& e : spec["eigenvalues"]) {
    const double re = e["re"], im = e["im"];
    moduli.push_back(std::hypot(re, im));
    csv.row({num(idx++), num(re), num(im), num(moduli.back()), num(e["algebraic_multiplicity"].get<long long>()),
             num(e["geometric_multiplicity"].get<long long>())});
    ev.x.push_back(re);
    ev.y.push_back(im);
  }
  for (int k = 0; k <= 128; ++k) {
    circle.x.push_back(std::cos(2 * M_PI * k / 128));
    circle.y.push_back(std::sin(2 * M_PI * k / 128));
  }
  const auto& exps = spec["exponents"]["rows"];
  if (exps.empty() || exps[0]["nu"].get<double>() != 1.0) run.violate("first exponent is not 1");
  for (std::size_t i = 1; i < exps.size(); ++i) {
    const double nu = exps[i]["nu"];
    if (!(nu > 0.0 && nu < 1.0)) run.violate("secondary exponent outside (0, 1)");
    if (nu >= exps[i - 1]["nu"].get<double>()) run.violate("exponents not strictly decreasing");
  }
  for (double r : moduli) {
    bool paired = false;
    for (double q : moduli) paired |= std::abs(r * q - 1.0) < 1e-6;
    if (!paired) run.violate("eigenvalue modulus " + num(r) + " has no reciprocal partner");
  }
  run.summary["lambda"] = spec["lambda"];
  run.summary["h_top"] = spec["h_top"];
  run.summary["exponents"] = spec["exponents"];
  run.summary["neutral_multiplicity"] = spec["neutral_multiplicity"];
  run.summary["charpoly"] = spec["charpoly"];
  run.summary["dims"] = spec["dims"];
  write_file(run.path("spectrum.csv"), csv.str());
  write_file(run.path("spectrum_full.json"), spec.dump(2) + "\n");
  write_file(run.path("spectrum.svg"), svg_plot({"Spectrum of the cohomology action", "Re", "Im"}, {circle, ev}));
}

// ---------------------------------------------------------------- build-pa

void cmd_build_pa(Run& run) {
  const std::string kind = run.cfg.text("kind", "suspension");
  const std::string name = run.cfg.text("name", "");
  if (name.empty()) throw ConfigError("build-pa needs a 'name'");
  const std::uint64_t seed = run.cfg.unsigned_integer("seed", 2024);
  std::string preset;
  if (kind == "suspension") {
    const auto top = label_row(run.cfg, "top"), bottom = label_row(run.cfg, "bottom");
    if (top.size() != bottom.size()) throw ConfigError("'top' and 'bottom' must have equal length");
    std::string loop = run.cfg.text("loop", "");
    if (loop.empty()) {
      char* s = nullptr;
      check(pa_search_loop(top.data(), bottom.data(), top.size(), static_cast<int>(run.cfg.integer("max_loop_length", 14)), &s),
            "loop search");
      loop = take(s);
    }
    pa_model* raw = nullptr;
    check(pa_model_from_loop(top.data(), bottom.data(), top.size(), loop.c_str(), name.c_str(), &raw), "model");
    Model m(raw);
    int ok = 0;
    check(pa_model_fixed_point(m.get(), &ok), "fixed point check");
    if (!ok) run.violate("loop does not fix the lengths");
    char* s = nullptr;
    check(pa_make_suspension_preset(name.c_str(), top.data(), bottom.data(), top.size(), loop.c_str(), seed, &s), "preset");
    preset = take(s);
    const json pj = json::parse(preset);
    run.summary["loop"] = loop;
    run.summary["lambda"] = pa_model_lambda(m.get());
    run.summary["observable_seed"] = pj["observable_seed"];
    run.summary["secondary_pairing"] = pj["secondary_pairing"];
    run.summary["fixed_point"] = ok == 1;
  } else if (kind == "toral") {
    const auto L = toral_matrix(run, nullptr);
    const std::string psi = run.cfg.has("perturbation") ? run.cfg.json("perturbation").dump() : std::string();
    char* s = nullptr;
    check(pa_make_toral_preset(name.c_str(), L.data(), psi.empty() ? nullptr : psi.c_str(), run.cfg.real("epsilon", 0.0), seed, &s),
          "preset");
    preset = take(s);
  } else {
    throw ConfigError("kind must be 'suspension' or 'toral'");
  }
  run.summary["preset_file"] = name + ".json";
  run.summary["preset_sha256"] = sha256_hex(preset + "\n");
  write_file(run.path(name + ".json"), preset + "\n");
}

// ---------------------------------------------------------------- deviate / peel

struct SweepResult {
  Sweep sweep;
  json exponents;
  double expected = -1.0;  // largest secondary exponent, or 0 without one
  std::vector<double> T;
};

SweepResult run_sweep(Run& run) {
  Loaded l = load_preset(run);
  SweepResult r;
  const double t_min = run.cfg.real("t_min", 1e2), t_max = run.cfg.real("t_max", 1e7), ratio = run.cfg.real("ratio", 1.02);
  const std::size_t starts = static_cast<std::size_t>(run.cfg.integer("starts", 20));
  const std::uint64_t seed = run.cfg.unsigned_integer("seed", 1);
  if (!(ratio > 1.0)) throw ConfigError("ratio must exceed 1");
  if (!(t_min > 0.0 && t_max >= t_min)) throw ConfigError("need 0 < t_min <= t_max");
  if (starts == 0) throw ConfigError("starts must be positive");
  pa_sweep* s = nullptr;
  if (l.kind == 0) {
    Observable f = choose_observable(run, l);
    double genericity = 0.0;
    check(pa_observable_genericity(l.model.get(), f.get(), &genericity), "genericity");
    run.summary["observable_secondary_pairing"] = genericity;
    check(pa_sweep_run(l.model.get(), f.get(), starts, seed, t_min, t_max, ratio, run.workers, &s), "deviation sweep");
  } else {
    const auto L = toral_matrix(run, &l);
    check(pa_sweep_run_linear(L.data(), l.trig.get(), starts, seed, t_min, t_max, ratio, &s), "linear-flow sweep");
  }
  r.sweep.reset(s);
  char* js = nullptr;
  check(pa_sweep_json(r.sweep.get(), &js), "sweep summary");
  r.exponents = json::parse(take(js))["exponents"];
  const auto& rows = r.exponents["rows"];
  r.expected = rows.size() > 1 ? rows[1]["nu"].get<double>() : 0.0;
  r.T.resize(pa_sweep_samples(r.sweep.get()));
  check(pa_sweep_series(r.sweep.get(), -1, r.T.data(), nullptr, nullptr, nullptr), "series");
  run.summary["exponents"] = r.exponents;
  run.summary["grid"] = {{"t_min", t_min}, {"t_max", t_max}, {"ratio", ratio}, {"samples", r.T.size()}};
  run.summary["starts"] = starts;
  return r;
}

void cmd_deviate(Run& run) {
  SweepResult r = run_sweep(run);
  const std::size_t n = r.T.size(), starts = pa_sweep_starts(r.sweep.get());
  CsvWriter csv({"start [index]", "T [flow time]", "S_T [observable x time]", "E_T [observable x time]", "envelope [observable x time]"});
  std::vector<Series> plot;
  std::vector<double> S(n), E(n), env(n);
  for (int k = 0; k < static_cast<int>(starts); ++k) {
    check(pa_sweep_series(r.sweep.get(), k, nullptr, S.data(), E.data(), env.data()), "series");
    for (std::size_t i = 0; i < n; ++i) csv.row({num(static_cast<long long>(k)), num(r.T[i]), num(S[i]), num(E[i]), num(env[i])});
    for (std::size_t i = 1; i < n; ++i)
      if (env[i] < env[i - 1]) run.violate("envelope of start " + std::to_string(k) + " decreases");
    if (k < 3) plot.push_back({"|E_T| start " + std::to_string(k), r.T, {}, true});
    if (k < 3)
      for (double e : E) plot.back().y.push_back(std::abs(e));
  }
  check(pa_sweep_series(r.sweep.get(), -1, nullptr, S.data(), E.data(), env.data()), "pooled series");
  for (std::size_t i = 0; i < n; ++i) csv.row({"pooled", num(r.T[i]), num(S[i]), num(E[i]), num(env[i])});
  plot.push_back({"pooled envelope", r.T, env, false});

  const double fit_min = run.cfg.real("fit_min", 1e4), fit_max = run.cfg.real("fit_max", r.T.back());
  const double tol = run.cfg.real("slope_tol", 0.05);
  const std::string expect = run.cfg.text("expect", "auto");
  json fits = json::array();
  bool all_zero = true;
  for (double e : env) all_zero &= e == 0.0;
  if (all_zero) {
    run.summary["pooled_fit"] = nullptr;
    run.summary["zero_deviation"] = true;
  } else {
    double slope = 0, err = 0;
    check(pa_sweep_fit(r.sweep.get(), -1, fit_min, fit_max, &slope, &err), "pooled envelope fit");
    run.summary["pooled_fit"] = {{"slope", slope}, {"stderr", err}, {"t_min", fit_min}, {"t_max", fit_max}};
    for (int k = 0; k < static_cast<int>(starts); ++k) {
      double sk = 0, ek = 0;
      check(pa_sweep_fit(r.sweep.get(), k, fit_min, fit_max, &sk, &ek), "envelope fit");
      fits.push_back({{"start", k}, {"slope", sk}, {"stderr", ek}});
    }
    run.summary["expected_exponent"] = r.expected;
    if (expect == "auto") {
      const bool ok = r.expected > 0.0 ? std::abs(slope - r.expected) <= tol : slope <= tol;
      run.summary["slope_within_tolerance"] = ok;
      if (!ok) run.violate("pooled envelope slope " + num(slope) + " outside tolerance of exponent " + num(r.expected));
    } else if (expect != "none") {
      throw ConfigError("expect must be 'auto' or 'none'");
    }
    // Reference power law through the last pooled point.
    Series ref{"T^nu reference", {}, {}, false};
    const double nu = r.expected > 0.0 ? r.expected : 0.0;
    for (double t : r.T) {
      ref.x.push_back(t);
      ref.y.push_back(env.back() * std::pow(t / r.T.back(), nu));
    }
    plot.push_back(ref);
  }
  run.summary["start_fits"] = fits;
  run.summary["slope_tol"] = tol;
  write_file(run.path("deviate.csv"), csv.str());
  write_file(run.path("deviate.svg"), svg_plot({"Deviation of ergodic integrals", "T", "|E_T|", true, true}, plot));
}

void cmd_peel(Run& run) {
  SweepResult r = run_sweep(run);
  const std::size_t n = r.T.size(), starts = pa_sweep_starts(r.sweep.get());
  json opt = {{"smoothing_decades", run.cfg.real("smoothing_decades", 1.0)},
              {"window_decades", run.cfg.real("window_decades", 0.25)},
              {"floor_fraction", run.cfg.real("floor_fraction", 0.25)},
              {"min_windows", run.cfg.integer("min_windows", 10)},
              {"growth_factor", run.cfg.real("growth_factor", 2.0)},
              {"t_min", run.cfg.real("peel_min", 0.0)}};
  const std::string opt_text = opt.dump();
  CsvWriter csv({"start [index]", "T [flow time]", "i [index]", "j [index]", "nu [1]", "c [observable x time^(1-nu)]"});
  json per_start = json::array();
  std::vector<Series> plot;
  std::vector<double> c(n);
  for (int k = 0; k < static_cast<int>(starts); ++k) {
    char* s = nullptr;
    check(pa_sweep_peel(r.sweep.get(), k, opt_text.c_str(), &s), "peeling");
    const json terms = json::parse(take(s));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      check(pa_sweep_coefficients(r.sweep.get(), k, t, c.data()), "coefficients");
      for (std::size_t i = 0; i < n; ++i)
        csv.row({num(static_cast<long long>(k)), num(r.T[i]), num(terms[t]["i"].get<long long>()), num(terms[t]["j"].get<long long>()),
                 num(terms[t]["nu"].get<double>()), num(c[i])});
      if (!terms[t]["bounded"].get<bool>())
        run.violate("coefficient (" + terms[t]["i"].dump() + "," + terms[t]["j"].dump() + ") of start " + std::to_string(k) + " not bounded");
      if (t == 0 && !terms[t]["recurrent"].get<bool>()) run.violate("leading coefficient of start " + std::to_string(k) + " not recurrent");
      if (k < 3 && t == 0) {
        Series sr{"|c| start " + std::to_string(k), r.T, {}, false};
        for (double v : c) sr.y.push_back(std::abs(v));
        plot.push_back(sr);
        plot.push_back({"c0 start " + std::to_string(k), {r.T.front(), r.T.back()},
                        {terms[t]["c0"].get<double>(), terms[t]["c0"].get<double>()}, false});
      }
    }
    per_start.push_back({{"start", k}, {"terms", terms}});
  }
  run.summary["peel_options"] = opt;
  run.summary["peeled"] = per_start;
  run.summary["secondary_terms"] = r.exponents["rows"].size() > 1 ? per_start[0]["terms"].size() : 0;
  write_file(run.path("peel.csv"), csv.str());
  write_file(run.path("peel.svg"), svg_plot({"Peeled coefficients", "T", "|c(x,T)|", true, true}, plot));
}

// ---------------------------------------------------------------- correlate

void cmd_correlate(Run& run) {
  std::unique_ptr<Loaded> l;
  if (!run.cfg.has("matrix")) l = std::make_unique<Loaded>(load_preset(run));
  const auto L = toral_matrix(run, l.get());
  const int pairs = static_cast<int>(run.cfg.integer("pairs", 20));
  const int max_freq = static_cast<int>(run.cfg.integer("max_freq", 5));
  const int terms = static_cast<int>(run.cfg.integer("terms", 4));
  const int n_max = static_cast<int>(run.cfg.integer("n_max", 20));
  const std::uint64_t seed = run.cfg.unsigned_integer("seed", 1);
  if (pairs <= 0 || n_max < 0) throw ConfigError("pairs must be positive and n_max non-negative");
  std::vector<json> reports(pairs);
  parallel_for(run.workers, pairs, [&](std::size_t i) {
    pa_trig *f = nullptr, *g = nullptr;
    check(pa_trig_random(max_freq, terms, seed + 2 * i, &f), "observable");
    Trig ff(f);
    check(pa_trig_random(max_freq, terms, seed + 2 * i + 1, &g), "observable");
    Trig gg(g);
    char* s = nullptr;
    check(pa_correlation_json(L.data(), ff.get(), gg.get(), n_max, &s), "correlation");
    reports[i] = json::parse(take(s));
  });
  CsvWriter csv({"pair [index]", "n [iterations]", "re [observable^2]", "im [observable^2]", "residual [observable^2]", "bound [observable^2]"});
  json rows = json::array();
  std::vector<Series> plot;
  for (int p = 0; p < pairs; ++p) {
    const json& rep = reports[p];
    const int n0 = rep["vanishing_index"];
    bool zero_beyond = true;
    Series sr{"pair " + std::to_string(p), {}, {}, true};
    for (const auto& row : rep["rows"]) {
      const int n = row["n"];
      const double res = row["residual"];
      csv.row({num(static_cast<long long>(p)), num(static_cast<long long>(n)), num(row["re"].get<double>()),
               num(row["im"].get<double>()), num(res), num(row["bound"].get<double>())});
      if (n > n0 && res != 0.0) zero_beyond = false;
      sr.x.push_back(n);
      sr.y.push_back(res);
    }
    if (p < 6) plot.push_back(sr);
    if (!zero_beyond) run.violate("pair " + std::to_string(p) + " has a nonzero residual beyond its vanishing index");
    if (!rep["within_bound"].get<bool>()) run.violate("pair " + std::to_string(p) + " exceeds the decay bound");
    rows.push_back({{"pair", p}, {"vanishing_index", n0}, {"zero_beyond", zero_beyond}, {"within_bound", rep["within_bound"]},
                    {"constant", rep["constant"]}});
  }
  Series bound{"bound (pair 0)", {}, {}, false};
  for (const auto& row : reports[0]["rows"]) {
    bound.x.push_back(row["n"].get<int>());
    bound.y.push_back(row["bound"].get<double>());
  }
  plot.push_back(bound);
  run.summary["matrix"] = {{L[0], L[1]}, {L[2], L[3]}};
  run.summary["pairs"] = rows;
  run.summary["middle_terms"] = reports[0]["middle_terms"];
  run.summary["polylog_power"] = reports[0]["polylog_power"];
  run.summary["h_top"] = reports[0]["h_top"];
  write_file(run.path("correlate.csv"), csv.str());
  write_file(run.path("correlate.svg"), svg_plot({"Correlation residuals", "n", "residual", false, true}, plot));
}

// ---------------------------------------------------------------- functional

// Toral presets: truncated unstable current at depths N and 2N on the form battery,
// and the decay of the one-step equivariance residual.
void functional_toral(Run& run, Loaded& l) {
  const int N = static_cast<int>(run.cfg.integer("depth", 10));
  const int grid = static_cast<int>(run.cfg.integer("grid", 64));
  const int decay_depth = static_cast<int>(run.cfg.integer("decay_depth", 8));
  if (N < 1 || grid < 4 || decay_depth < 2) throw ConfigError("need depth >= 1, grid >= 4 and decay_depth >= 2");
  double at_n[10], at_2n[10], tail = 0.0, tail_2n = 0.0;
  check(pa_current_pairings(l.map.get(), N, grid, at_n, &tail), "current at depth N");
  check(pa_current_pairings(l.map.get(), 2 * N, grid, at_2n, &tail_2n), "current at depth 2N");
  CsvWriter csv({"form [index]", "pairing_N [form units]", "pairing_2N [form units]", "difference [form units]", "tail_bound [form units]"});
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double diff = std::abs(at_n[i] - at_2n[i]);
    worst = std::max(worst, diff);
    csv.row({num(static_cast<long long>(i)), num(at_n[i]), num(at_2n[i]), num(diff), num(tail)});
  }
  if (worst > tail) run.violate("depth N and 2N pairings differ by " + num(worst) + ", above the tail bound " + num(tail));
  char* s = nullptr;
  check(pa_equivariance_decay(l.map.get(), decay_depth, grid, &s), "equivariance decay");
  const json decay = json::parse(take(s));
  const double limit = 1.0 / decay["expanding_modulus"].get<double>() + 0.1;
  if (decay["ratio"].get<double>() > limit) run.violate("equivariance residual ratio " + num(decay["ratio"].get<double>()) + " above " + num(limit));
  CsvWriter dcsv({"depth [steps]", "residual [form units]", "quadrature_error [form units]", "resolved [bool]"});
  Series res{"residual", {}, {}, true}, ref{"geometric reference", {}, {}, false};
  for (int n = 1; n <= decay_depth; ++n) {
    const double r = decay["residuals"][n - 1], e = decay["quadrature_error"][n - 1];
    dcsv.row({num(static_cast<long long>(n)), num(r), num(e), decay["resolved"][n - 1].get<bool>() ? "true" : "false"});
    res.x.push_back(n);
    res.y.push_back(r);
    ref.x.push_back(n);
    ref.y.push_back(decay["residuals"][0].get<double>() * std::pow(decay["expanding_modulus"].get<double>(), 1 - n));
  }
  run.summary["depth"] = N;
  run.summary["grid"] = grid;
  run.summary["tail_bound"] = tail;
  run.summary["worst_truncation_difference"] = worst;
  run.summary["equivariance"] = decay;
  run.summary["equivariance_ratio_limit"] = limit;
  write_file(run.path("functional.csv"), csv.str());
  write_file(run.path("functional_equivariance.csv"), dcsv.str());
  write_file(run.path("functional.svg"), svg_plot({"One-step equivariance residual", "depth", "residual", false, true}, {res, ref}));
}

void cmd_functional(Run& run) {
  Loaded l = load_preset(run);
  if (l.kind == 1) return functional_toral(run, l);
  const std::size_t curves = static_cast<std::size_t>(run.cfg.integer("curves", 200));
  const int N = static_cast<int>(run.cfg.integer("depth", 30));
  const auto draws = draw_curves(run.cfg.unsigned_integer("seed", 1), curves, run.cfg.real("curve_min", 10.0),
                                 run.cfg.real("curve_max", 1e3));
  struct Row {
    double add = 0, scale = 0, tail = 0;
    std::vector<double> beta;
  };
  std::vector<Row> rows(curves);
  const std::size_t dim = pa_model_dim(l.model.get());
  parallel_for(run.workers, curves, [&](std::size_t i) {
    const auto& c = draws[i];
    Row& r = rows[i];
    r.beta.resize(dim);
    std::size_t len = 0;
    check(pa_functional_check(l.model.get(), c.x_num, c.y_frac, c.T1, c.T2, N, &r.add, &r.scale, &r.tail, r.beta.data(), dim, &len),
          "functional");
    r.beta.resize(len);
  });
  const std::size_t k = rows.empty() ? 0 : rows[0].beta.size();
  std::vector<std::string> header{"model", "x [base length]", "y_frac [1]", "T [flow time]", "N [depth]"};
  for (std::size_t j = 0; j < k; ++j) header.push_back("beta_" + std::to_string(j + 1) + " [flow time]");
  for (const char* h : {"tail [flow time]", "additivity_residual [flow time]", "scaling_residual [flow time]"}) header.push_back(h);
  CsvWriter csv(header);
  const std::string model = run.cfg.text("preset", "");
  double worst_add = 0, worst_scale = 0;
  Series add{"additivity / tail", {}, {}, true}, sc{"scaling / tail", {}, {}, true};
  for (std::size_t i = 0; i < curves; ++i) {
    const auto& c = draws[i];
    const auto& r = rows[i];
    std::vector<std::string> cells{model, num(static_cast<double>(c.x_num) / (1LL << 30)), num(c.y_frac), num(c.T1), num(static_cast<long long>(N))};
    for (double b : r.beta) cells.push_back(num(b));
    for (double v : {r.tail, r.add, r.scale}) cells.push_back(num(v));
    csv.row(cells);
    worst_add = std::max(worst_add, r.add / r.tail);
    worst_scale = std::max(worst_scale, r.scale / r.tail);
    add.x.push_back(c.T1);
    add.y.push_back(r.add / r.tail);
    sc.x.push_back(c.T1);
    sc.y.push_back(r.scale / r.tail);
  }
  if (worst_add > 3.0) run.violate("additivity residual exceeds 3 x tail bound");
  if (worst_scale > 3.0) run.violate("scaling residual exceeds 3 x tail bound");
  double bound = 0.0;
  check(pa_c_plus_bound(l.model.get(), &bound), "C' bound");
  run.summary["depth"] = N;
  run.summary["curves"] = curves;
  run.summary["worst_additivity_over_tail"] = worst_add;
  run.summary["worst_scaling_over_tail"] = worst_scale;
  run.summary["tail_bound"] = rows.empty() ? 0.0 : rows[0].tail;
  run.summary["c_plus_bound"] = bound;
  write_file(run.path("functional.csv"), csv.str());
  write_file(run.path("functional.svg"), svg_plot({"Functional residuals relative to the tail bound", "T", "residual / tail", true, true}, {add, sc}));
}

// ---------------------------------------------------------------- decompose

void cmd_decompose(Run& run) {
  Loaded l = load_preset(run);
  if (l.kind != 0) throw ConfigError("decompose needs a suspension preset");
  const std::size_t curves = static_cast<std::size_t>(run.cfg.integer("curves", 100));
  const auto draws = draw_curves(run.cfg.unsigned_integer("seed", 1), curves, run.cfg.real("curve_min", 10.0),
                                 run.cfg.real("curve_max", 1e4));
  std::vector<json> decs(curves);
  parallel_for(run.workers, curves, [&](std::size_t i) {
    char* s = nullptr;
    check(pa_decompose(l.model.get(), draws[i].x_num, draws[i].y_frac, draws[i].T1, &s), "decomposition");
    decs[i] = json::parse(take(s));
  });
  CsvWriter csv({"curve [index]", "x [base length]", "y_frac [1]", "T [flow time]", "scale [renormalization steps]", "multiplicity [count]"});
  int worst = 0;
  double bound = 0;
  bool ok = true;
  Series pts{"multiplicity", {}, {}, true};
  json dump = json::array();
  for (std::size_t i = 0; i < curves; ++i) {
    const json& d = decs[i];
    const auto& mult = d["multiplicities"];
    for (std::size_t s = 0; s < mult.size(); ++s) {
      csv.row({num(static_cast<long long>(i)), num(static_cast<double>(draws[i].x_num) / (1LL << 30)), num(draws[i].y_frac), num(draws[i].T1),
               num(static_cast<long long>(s)), num(mult[s].get<long long>())});
      pts.x.push_back(static_cast<double>(s));
      pts.y.push_back(mult[s].get<double>());
    }
    const auto& chk = d["check"];
    worst = std::max(worst, chk["worst_multiplicity"].get<int>());
    bound = chk["multiplicity_bound"];
    const bool good = chk["multiplicity_ok"].get<bool>() && chk["lengths_ok"].get<bool>() && chk["remainder_ok"].get<bool>() &&
                      chk["additive"].get<bool>();
    if (!good) run.violate("decomposition of curve " + std::to_string(i) + " fails its check");
    ok &= good;
    dump.push_back({{"curve", i}, {"x", static_cast<double>(draws[i].x_num) / (1LL << 30)}, {"y_frac", draws[i].y_frac},
                    {"T", draws[i].T1}, {"decomposition", d}});
  }
  run.summary["curves"] = curves;
  run.summary["worst_multiplicity"] = worst;
  run.summary["multiplicity_bound"] = bound;
  run.summary["all_checks_pass"] = ok;
  write_file(run.path("decompose.csv"), csv.str());
  write_file(run.path("decompositions.json"), dump.dump(1) + "\n");
  Series limit{"C lambda / c", {0.0, pts.x.empty() ? 1.0 : *std::max_element(pts.x.begin(), pts.x.end())}, {bound, bound}, false};
  write_file(run.path("decompose.svg"), svg_plot({"Closest-return multiplicities", "scale", "multiplicity"}, {pts, limit}));
}

int exit_code_for(pa_status s) {
  switch (s) {
    case PA_CONFIG_INVALID:
    case PA_PRESET_MISSING:
      return 3;
    case PA_INVARIANT_VIOLATION:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments on deviations of ergodic integrals for linear pseudo-Anosov maps"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, preset, out, tmax, depth, seed;
  int workers = 1;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "INI or JSON configuration file");
  app.add_option("--preset", preset, "preset name (file <preset_dir>/<name>.json)");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed");
  app.add_option("--tmax", tmax, "largest flow time of the T-grid");
  app.add_option("--depth", depth, "truncation depth N");
  app.add_option("--set", sets, "override a config key: key=value");
  const std::vector<std::pair<std::string, std::function<void(Run&)>>> commands{
      {"spectrum", cmd_spectrum}, {"build-pa", cmd_build_pa}, {"deviate", cmd_deviate}, {"peel", cmd_peel},
      {"correlate", cmd_correlate}, {"functional", cmd_functional}, {"decompose", cmd_decompose}};
  const std::map<std::string, std::string> help{
      {"spectrum", "spectral split and deviation exponents"},
      {"build-pa", "search a Rauzy loop and emit a preset"},
      {"deviate", "deviation series, envelopes and exponent fits"},
      {"peel", "peeled expansion coefficients with boundedness and recurrence flags"},
      {"correlate", "exact toral correlations against the decay bound"},
      {"functional", "additivity and scaling of the truncated functional"},
      {"decompose", "closest-return decompositions and their bounds"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  Run run;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) run.command = name;
    run.cfg = config_path.empty() ? Config{} : Config::load(config_path);
    if (!preset.empty()) run.cfg.set("preset", preset);
    if (!out.empty()) run.cfg.set("out", out);
    if (!seed.empty()) run.cfg.set("seed", seed);
    if (!tmax.empty()) run.cfg.set("t_max", tmax);
    if (!depth.empty()) run.cfg.set("depth", depth);
    if (app.count("--workers")) run.cfg.set("workers", std::to_string(workers));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      run.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    run.out = run.cfg.text("out", "out");
    run.workers = static_cast<int>(run.cfg.integer("workers", 1));
    if (run.workers < 1) throw ConfigError("workers must be positive");
    const json canonical = {{"command", run.command}, {"config", run.cfg.canonical()}};
    run.summary["command"] = run.command;
    run.summary["config"] = run.cfg.canonical();
    run.summary["config_hash"] = sha256_hex(canonical.dump());
    run.summary["library_version"] = pa_version();
    for (const auto& [name, fn] : commands)
      if (name == run.command) fn(run);
    run.summary["violations"] = run.violations;
    run.summary["status"] = run.violations.empty() ? "ok" : "invariant_violation";
    write_file(run.path(run.command + ".json"), run.summary.dump(2) + "\n");
  } catch (const ConfigError& e) {
    std::cerr << run.command << ": config error: " << e.what() << "\n";
    return 3;
  } catch (const ModuleError& e) {
    std::cerr << run.command << ": " << e.what() << "\n";
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    std::cerr << run.command << ": " << e.what() << "\n";
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& v : run.violations) std::cerr << run.command << ": invariant violation: " << v << "\n";
  std::cerr << run.command << ": wrote " << run.out << " in " << secs << " s\n";
  return run.violations.empty() ? 0 : 2;
}
