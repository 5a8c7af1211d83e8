#include "pa/c_api.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "pa/cohomology.hpp"
#include "pa/deviation.hpp"
#include "pa/error.hpp"
#include "pa/preset.hpp"
#include "pa/return_decomposition.hpp"
#include "pa/torus.hpp"

struct pa_model {
  pa::PseudoAnosovModel model;
};
struct pa_observable {
  pa::CellObservable f;
};
struct pa_toral_map {
  pa::ToralMap map;
};
struct pa_trig {
  pa::TrigObservable f;
};
struct pa_sweep {
  std::vector<pa::DeviationReport> reports;
  pa::DeviationReport pooled;
  pa::ExponentTable exponents;
};

namespace {

thread_local std::string last_error;

template <class F>
pa_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return PA_OK;
  } catch (const pa::Error& e) {
    last_error = e.what();
    return static_cast<pa_status>(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("ConfigInvalid: ") + e.what();
    return PA_CONFIG_INVALID;
  } catch (const std::exception& e) {
    last_error = std::string("Internal: ") + e.what();
    return PA_INTERNAL;
  } catch (...) {
    last_error = "Internal: unknown exception";
    return PA_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw pa::Error(pa::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pa::IetCombinatorics combinatorics(const int* top, const int* bottom, std::size_t d) {
  require(top && bottom && d >= 2, "combinatorics needs two rows of length >= 2");
  pa::IetCombinatorics c{{top, top + d}, {bottom, bottom + d}};
  c.validate();
  return c;
}

pa::IntegerMatrix matrix2(const int64_t L[4]) {
  require(L != nullptr, "null matrix");
  return pa::IntegerMatrix{{L[0], L[1]}, {L[2], L[3]}};
}

pa::FlowPoint start_point(const pa::PseudoAnosovModel& m, int64_t x_num, double y_frac) {
  require(x_num >= 0 && x_num < (int64_t{1} << 30), "x numerator must lie in [0, 2^30)");
  require(y_frac >= 0.0 && y_frac < 1.0, "height fraction must lie in [0, 1)");
  pa::FlowPoint p = pa::base_point(m, m.field->rational(pa::Rational(pa::BigInt(x_num), pa::BigInt(1) << 30)));
  p.y = m.heights[p.cell] * pa::field_time(m, y_frac);
  return p;
}

pa::UnstableCurve curve(const pa::PseudoAnosovModel& m, int64_t x_num, double y_frac, double T) {
  require(T >= 0.0, "negative curve length");
  return {start_point(m, x_num, y_frac), pa::field_time(m, T)};
}

const pa::DeviationReport& report(const pa_sweep* s, int start) {
  require(s != nullptr, "null sweep");
  if (start < 0) return s->pooled;
  require(static_cast<std::size_t>(start) < s->reports.size(), "start index out of range");
  return s->reports[start];
}

void finish_sweep(pa_sweep& s) {
  s.pooled = pa::pooled_envelope(s.reports);
}

}  // namespace

extern "C" {

const char* pa_version(void) { return "1.0.0"; }
const char* pa_last_error(void) { return last_error.c_str(); }
void pa_string_free(char* s) { std::free(s); }

pa_status pa_spectrum_json(const int64_t* entries, size_t dim, char** out_json) {
  return guarded([&] {
    require(entries && dim > 0 && out_json, "null argument");
    pa::IntegerMatrix m(dim);
    for (size_t i = 0; i < dim; ++i)
      for (size_t j = 0; j < dim; ++j) m(i, j) = entries[i * dim + j];
    const pa::SpectralSplit s = pa::spectral_split(m);
    nlohmann::json j = s.to_json();
    j["exponents"] = pa::deviation_exponents(s).to_json();
    *out_json = dup_string(j.dump());
  });
}

pa_status pa_model_from_loop(const int* top, const int* bottom, size_t d, const char* loop, const char* name, pa_model** out) {
  return guarded([&] {
    require(loop && out, "null argument");
    *out = new pa_model{pa::pa_from_loop(combinatorics(top, bottom, d), loop, name ? name : "")};
  });
}

pa_status pa_search_loop(const int* top, const int* bottom, size_t d, int max_length, char** out_loop) {
  return guarded([&] {
    require(out_loop != nullptr, "null argument");
    pa::LoopSearchOptions opt;
    opt.max_length = max_length;
    const auto loop = pa::search_loop(combinatorics(top, bottom, d), opt);
    if (!loop) throw pa::Error(pa::ErrorCode::LoopNotClosed, "no admissible loop up to length " + std::to_string(max_length));
    *out_loop = dup_string(*loop);
  });
}

void pa_model_free(pa_model* m) { delete m; }
size_t pa_model_dim(const pa_model* m) { return m ? static_cast<size_t>(m->model.d()) : 0; }
double pa_model_lambda(const pa_model* m) { return m ? m->model.lambda_d() : 0.0; }

pa_status pa_model_json(const pa_model* m, char** out_json) {
  return guarded([&] {
    require(m && out_json, "null argument");
    *out_json = dup_string(m->model.to_json().dump());
  });
}

pa_status pa_model_fixed_point(const pa_model* m, int* ok) {
  return guarded([&] {
    require(m && ok, "null argument");
    *ok = pa::renormalization_fixed_point(m->model) ? 1 : 0;
  });
}

pa_status pa_model_return_bounds(const pa_model* m, double* c, double* C) {
  return guarded([&] {
    require(m && c && C, "null argument");
    *c = m->model.c_min;
    *C = m->model.c_max;
  });
}

pa_status pa_observable_random(size_t d, uint64_t seed, pa_observable** out) {
  return guarded([&] {
    require(out && d > 0, "invalid argument");
    *out = new pa_observable{pa::CellObservable::random(static_cast<int>(d), seed)};
  });
}

pa_status pa_observable_constant(size_t d, double value, pa_observable** out) {
  return guarded([&] {
    require(out && d > 0, "invalid argument");
    *out = new pa_observable{pa::CellObservable::constant(static_cast<int>(d), value)};
  });
}

pa_status pa_observable_from_json(const char* json, pa_observable** out) {
  return guarded([&] {
    require(json && out, "null argument");
    *out = new pa_observable{pa::CellObservable::from_json(nlohmann::json::parse(json))};
  });
}

pa_status pa_observable_json(const pa_observable* f, char** out_json) {
  return guarded([&] {
    require(f && out_json, "null argument");
    *out_json = dup_string(f->f.to_json().dump());
  });
}

void pa_observable_free(pa_observable* f) { delete f; }

pa_status pa_observable_mean(const pa_model* m, const pa_observable* f, double* out) {
  return guarded([&] {
    require(m && f && out, "null argument");
    *out = pa::mean(m->model, f->f);
  });
}

pa_status pa_observable_genericity(const pa_model* m, const pa_observable* f, double* out) {
  return guarded([&] {
    require(m && f && out, "null argument");
    *out = pa::secondary_pairing(m->model, f->f);
  });
}

pa_status pa_make_suspension_preset(const char* name, const int* top, const int* bottom, size_t d, const char* loop,
                                    uint64_t seed, char** out_json) {
  return guarded([&] {
    require(name && loop && out_json, "null argument");
    *out_json = dup_string(pa::make_suspension_preset(name, combinatorics(top, bottom, d), loop, seed).to_json().dump(2));
  });
}

pa_status pa_make_toral_preset(const char* name, const int64_t L[4], const char* perturbation_json, double epsilon,
                               uint64_t seed, char** out_json) {
  return guarded([&] {
    require(name && out_json, "null argument");
    const pa::TrigVectorField psi =
        perturbation_json ? pa::TrigVectorField::from_json(nlohmann::json::parse(perturbation_json)) : pa::TrigVectorField{};
    *out_json = dup_string(pa::make_toral_preset(name, matrix2(L), psi, epsilon, seed).to_json().dump(2));
  });
}

pa_status pa_load_preset(const char* dir, const char* name, int* kind, pa_model** model, pa_observable** observable,
                         pa_toral_map** map, pa_trig** trig) {
  if (model) *model = nullptr;
  if (observable) *observable = nullptr;
  if (map) *map = nullptr;
  if (trig) *trig = nullptr;
  return guarded([&] {
    require(dir && name, "null argument");
    const pa::Preset p = pa::load_named_preset(dir, name);
    if (const auto* s = std::get_if<pa::SuspensionPreset>(&p)) {
      if (kind) *kind = 0;
      std::unique_ptr<pa_model> mm;
      if (model) mm.reset(new pa_model{s->model()});
      if (observable) *observable = new pa_observable{s->observable};
      if (model) *model = mm.release();
    } else {
      const auto& t = std::get<pa::ToralPreset>(p);
      if (kind) *kind = 1;
      std::unique_ptr<pa_toral_map> mm;
      if (map) mm.reset(new pa_toral_map{t.map()});
      if (trig) *trig = new pa_trig{t.observable};
      if (map) *map = mm.release();
    }
  });
}

pa_status pa_birkhoff(const pa_model* m, const pa_observable* f, int64_t x_num, double y_frac, double T, double* out) {
  return guarded([&] {
    require(m && f && out, "null argument");
    require(T >= 0.0, "negative time");
    *out = pa::birkhoff_integral(m->model, f->f, start_point(m->model, x_num, y_frac), pa::field_time(m->model, T));
  });
}

pa_status pa_sweep_run(const pa_model* m, const pa_observable* f, size_t starts, uint64_t seed, double t_min, double t_max,
                       double ratio, int workers, pa_sweep** out) {
  return guarded([&] {
    require(m && f && out && starts > 0, "invalid argument");
    const auto grid = pa::geometric_grid(t_min, t_max, ratio);
    auto s = std::make_unique<pa_sweep>();
    s->reports = pa::deviation_sweep(m->model, f->f, pa::seeded_starts(m->model, static_cast<int>(starts), seed), grid, workers);
    s->exponents = pa::deviation_exponents(m->model.split);
    finish_sweep(*s);
    *out = s.release();
  });
}

pa_status pa_sweep_run_linear(const int64_t L[4], const pa_trig* f, size_t starts, uint64_t seed, double t_min, double t_max,
                              double ratio, pa_sweep** out) {
  return guarded([&] {
    require(f && out && starts > 0, "invalid argument");
    const pa::IntegerMatrix lm = matrix2(L);
    const auto grid = pa::geometric_grid(t_min, t_max, ratio);
    auto s = std::make_unique<pa_sweep>();
    for (const auto& x : pa::seeded_torus_starts(static_cast<int>(starts), seed))
      s->reports.push_back(pa::deviation_series(lm, f->f, x, grid));
    s->exponents = pa::deviation_exponents(pa::spectral_split(lm));
    finish_sweep(*s);
    *out = s.release();
  });
}

void pa_sweep_free(pa_sweep* s) { delete s; }
size_t pa_sweep_starts(const pa_sweep* s) { return s ? s->reports.size() : 0; }
size_t pa_sweep_samples(const pa_sweep* s) { return s ? s->pooled.samples.size() : 0; }

pa_status pa_sweep_series(const pa_sweep* s, int start, double* T, double* S, double* E, double* envelope) {
  return guarded([&] {
    const pa::DeviationReport& r = report(s, start);
    for (size_t i = 0; i < r.samples.size(); ++i) {
      if (T) T[i] = r.samples[i].T;
      if (S) S[i] = r.samples[i].S;
      if (E) E[i] = r.samples[i].E;
      if (envelope) envelope[i] = r.envelope[i];
    }
  });
}

pa_status pa_sweep_fit(const pa_sweep* s, int start, double t_min, double t_max, double* slope, double* stderr_slope) {
  return guarded([&] {
    require(slope != nullptr, "null argument");
    const pa::PowerFit f = pa::fit_power_law(report(s, start), t_min, t_max);
    *slope = f.slope;
    if (stderr_slope) *stderr_slope = f.stderr_slope;
  });
}

pa_status pa_sweep_peel(pa_sweep* s, int start, const char* options_json, char** out_json) {
  return guarded([&] {
    require(s && out_json, "null argument");
    require(start >= 0, "peeling needs a single start");
    pa::PeelOptions opt;
    if (options_json) {
      const auto j = nlohmann::json::parse(options_json);
      opt.smoothing_decades = j.value("smoothing_decades", opt.smoothing_decades);
      opt.window_decades = j.value("window_decades", opt.window_decades);
      opt.floor_fraction = j.value("floor_fraction", opt.floor_fraction);
      opt.min_windows = j.value("min_windows", opt.min_windows);
      opt.growth_factor = j.value("growth_factor", opt.growth_factor);
      opt.t_min = j.value("t_min", opt.t_min);
    }
    require(static_cast<std::size_t>(start) < s->reports.size(), "start index out of range");
    pa::DeviationReport& r = s->reports[start];
    pa::peel_expansion(r, s->exponents, opt);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& t : r.peeled) j.push_back(t.to_json());
    *out_json = dup_string(j.dump());
  });
}

pa_status pa_sweep_coefficients(const pa_sweep* s, int start, size_t term, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    require(start >= 0, "peeling needs a single start");
    const pa::DeviationReport& r = report(s, start);
    require(term < r.peeled.size(), "term not peeled");
    std::copy(r.peeled[term].coeff.begin(), r.peeled[term].coeff.end(), out);
  });
}

pa_status pa_sweep_json(const pa_sweep* s, char** out_json) {
  return guarded([&] {
    require(s && out_json, "null argument");
    nlohmann::json j;
    j["pooled"] = s->pooled.to_json();
    j["starts"] = nlohmann::json::array();
    for (const auto& r : s->reports) j["starts"].push_back(r.to_json());
    j["exponents"] = s->exponents.to_json();
    *out_json = dup_string(j.dump());
  });
}

pa_status pa_decompose(const pa_model* m, int64_t x_num, double y_frac, double T, char** out_json) {
  return guarded([&] {
    require(m && out_json, "null argument");
    const pa::ReturnDecomposition dec = pa::decompose_closest_returns(m->model, curve(m->model, x_num, y_frac, T));
    const pa::DecompositionCheck chk = pa::check_decomposition(m->model, dec);
    nlohmann::json j = dec.to_json();
    j["check"] = {{"multiplicity_ok", chk.multiplicity_ok}, {"lengths_ok", chk.lengths_ok},
                  {"remainder_ok", chk.remainder_ok},     {"additive", chk.additive},
                  {"worst_multiplicity", chk.worst_multiplicity}, {"multiplicity_bound", chk.multiplicity_bound}};
    *out_json = dup_string(j.dump());
  });
}

pa_status pa_functional(const pa_model* m, int64_t x_num, double y_frac, double T, int N, double* out, size_t cap,
                        size_t* len, double* tail) {
  return guarded([&] {
    require(m && out && len, "null argument");
    const pa::FunctionalValue v = pa::bufetov_beta(m->model, curve(m->model, x_num, y_frac, T), N);
    *len = static_cast<size_t>(v.value.size());
    require(cap >= *len, "output buffer too small");
    for (Eigen::Index i = 0; i < v.value.size(); ++i) out[i] = v.value[i];
    if (tail) *tail = v.tail_bound;
  });
}

pa_status pa_functional_check(const pa_model* m, int64_t x_num, double y_frac, double T1, double T2, int N,
                              double* additivity, double* scaling, double* tail, double* beta, size_t cap, size_t* len) {
  return guarded([&] {
    require(m && additivity && scaling && tail, "null argument");
    require(T1 >= 0.0 && T2 >= 0.0, "negative curve length");
    const pa::FunctionalCheck c = pa::functional_check(m->model, start_point(m->model, x_num, y_frac),
                                                       pa::field_time(m->model, T1), pa::field_time(m->model, T2), N);
    *additivity = c.additivity;
    *scaling = c.scaling;
    *tail = c.first.tail_bound;
    if (len) *len = static_cast<size_t>(c.first.value.size());
    if (beta) {
      require(cap >= static_cast<size_t>(c.first.value.size()), "output buffer too small");
      for (Eigen::Index i = 0; i < c.first.value.size(); ++i) beta[i] = c.first.value[i];
    }
  });
}

pa_status pa_c_plus_bound(const pa_model* m, double* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = pa::c_plus_bound(m->model);
  });
}

pa_status pa_asymptotic_gap(const pa_model* m, int64_t x_num, double y_frac, double T, int N, double* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = pa::asymptotic_gap(m->model, curve(m->model, x_num, y_frac, T), pa::form_battery(m->model), N);
  });
}

pa_status pa_toral_map_new(const int64_t L[4], const char* perturbation_json, double epsilon, pa_toral_map** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const pa::TrigVectorField psi =
        perturbation_json ? pa::TrigVectorField::from_json(nlohmann::json::parse(perturbation_json)) : pa::TrigVectorField{};
    *out = new pa_toral_map{pa::make_toral_map(matrix2(L), psi, epsilon)};
  });
}

void pa_toral_map_free(pa_toral_map* m) { delete m; }

pa_status pa_toral_map_json(const pa_toral_map* m, char** out_json) {
  return guarded([&] {
    require(m && out_json, "null argument");
    *out_json = dup_string(m->map.to_json().dump());
  });
}

pa_status pa_current_pairings(const pa_toral_map* m, int N, int grid, double out[10], double* tail) {
  return guarded([&] {
    require(m && out, "null argument");
    const pa::CurrentHandle b = pa::build_unstable_current(m->map, pa::unstable_class(m->map), N);
    const auto battery = pa::toral_form_battery();
    for (std::size_t i = 0; i < battery.size(); ++i) out[i] = pa::current_pairing(m->map, b, battery[i], grid);
    if (tail) *tail = b.tail_bound;
  });
}

pa_status pa_equivariance_decay(const pa_toral_map* m, int max_depth, int grid, char** out_json) {
  return guarded([&] {
    require(m && out_json, "null argument");
    const pa::EquivarianceDecay d = pa::equivariance_decay(m->map, pa::unstable_class(m->map), max_depth, grid);
    const nlohmann::json j = {{"residuals", d.residuals},
                              {"quadrature_error", d.quadrature_error},
                              {"resolved", d.resolved},
                              {"roundoff_floor", d.roundoff_floor},
                              {"fitted", d.fitted},
                              {"ratio", d.ratio},
                              {"expanding_modulus", m->map.lambda}};
    *out_json = dup_string(j.dump());
  });
}

pa_status pa_trig_random(int max_freq, int terms, uint64_t seed, pa_trig** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new pa_trig{pa::TrigObservable::random_zero_mean(max_freq, terms, seed)};
  });
}

pa_status pa_trig_from_json(const char* json, pa_trig** out) {
  return guarded([&] {
    require(json && out, "null argument");
    *out = new pa_trig{pa::TrigObservable::from_json(nlohmann::json::parse(json))};
  });
}

pa_status pa_trig_json(const pa_trig* f, char** out_json) {
  return guarded([&] {
    require(f && out_json, "null argument");
    *out_json = dup_string(f->f.to_json().dump());
  });
}

void pa_trig_free(pa_trig* f) { delete f; }

pa_status pa_correlation_json(const int64_t L[4], const pa_trig* f, const pa_trig* g, int n_max, char** out_json) {
  return guarded([&] {
    require(f && g && out_json, "null argument");
    *out_json = dup_string(pa::correlation_expansion_check(matrix2(L), f->f, g->f, n_max).to_json().dump());
  });
}

}  // extern "C"
