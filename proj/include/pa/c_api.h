#ifndef PA_C_API_H
#define PA_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(PA_BUILDING_LIBRARY)
#define PA_API __attribute__((visibility("default")))
#else
#define PA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pa_status {
  PA_OK = 0,
  PA_INVALID_ARGUMENT = 1,
  PA_NOT_UNIMODULAR = 2,
  PA_TOP_EIGENVALUE_NOT_SIMPLE = 3,
  PA_NOT_HYPERBOLIC = 4,
  PA_PERTURBATION_TOO_LARGE = 5,
  PA_NO_CONVERGENCE = 6,
  PA_RESOLUTION_INSUFFICIENT = 7,
  PA_TIE_BREAK_UNDEFINED = 8,
  PA_WRONG_SIDE = 9,
  PA_LOOP_NOT_CLOSED = 10,
  PA_NOT_PRIMITIVE = 11,
  PA_PERRON_ROOT_NOT_SIMPLE = 12,
  PA_HIT_SINGULARITY = 13,
  PA_DEGENERATE_WINDOW = 14,
  PA_EXPONENT_COLLISION = 15,
  PA_CONFIG_INVALID = 16,
  PA_PRESET_MISSING = 17,
  PA_INVARIANT_VIOLATION = 18,
  PA_INTERNAL = 99
} pa_status;

typedef struct pa_model pa_model;              /* linear pseudo-Anosov suspension */
typedef struct pa_observable pa_observable;    /* cell observable on a suspension */
typedef struct pa_toral_map pa_toral_map;      /* perturbed hyperbolic toral map */
typedef struct pa_trig pa_trig;                /* trigonometric observable on the torus */
typedef struct pa_sweep pa_sweep;              /* deviation series over several starts */

PA_API const char* pa_version(void);
/* Message of the last failed call on this thread; empty after success. */
PA_API const char* pa_last_error(void);
/* Frees strings returned through char** outputs. */
PA_API void pa_string_free(char* s);

/* Spectral split and deviation exponents of a dim x dim row-major integer matrix, as JSON. */
PA_API pa_status pa_spectrum_json(const int64_t* entries, size_t dim, char** out_json);

/* Models. top and bottom list labels 0..d-1; loop is a word in 't' / 'b'. */
PA_API pa_status pa_model_from_loop(const int* top, const int* bottom, size_t d, const char* loop, const char* name,
                                    pa_model** out);
/* Shortest closed Rauzy loop with a secondary expanding eigenvalue; writes it into a new string. */
PA_API pa_status pa_search_loop(const int* top, const int* bottom, size_t d, int max_length, char** out_loop);
PA_API void pa_model_free(pa_model* m);
PA_API size_t pa_model_dim(const pa_model* m);
PA_API double pa_model_lambda(const pa_model* m);
PA_API pa_status pa_model_json(const pa_model* m, char** out_json);
/* Sets *ok to 1 when the loop maps the lengths exactly to lengths / lambda. */
PA_API pa_status pa_model_fixed_point(const pa_model* m, int* ok);
/* Shortest and longest first-return times. */
PA_API pa_status pa_model_return_bounds(const pa_model* m, double* c, double* C);

/* Observables. */
PA_API pa_status pa_observable_random(size_t d, uint64_t seed, pa_observable** out);
PA_API pa_status pa_observable_constant(size_t d, double value, pa_observable** out);
PA_API pa_status pa_observable_from_json(const char* json, pa_observable** out);
PA_API pa_status pa_observable_json(const pa_observable* f, char** out_json);
PA_API void pa_observable_free(pa_observable* f);
PA_API pa_status pa_observable_mean(const pa_model* m, const pa_observable* f, double* out);
/* Normalized pairing with the secondary expanding eigenvectors; 0 without secondary exponents. */
PA_API pa_status pa_observable_genericity(const pa_model* m, const pa_observable* f, double* out);

/* Presets: JSON of a suspension preset drawn from seed upward until generic. */
PA_API pa_status pa_make_suspension_preset(const char* name, const int* top, const int* bottom, size_t d, const char* loop,
                                           uint64_t seed, char** out_json);
PA_API pa_status pa_make_toral_preset(const char* name, const int64_t L[4], const char* perturbation_json, double epsilon,
                                      uint64_t seed, char** out_json);
/* Loads <dir>/<name>.json; sets *kind to 0 for suspensions and 1 for toral presets and
   fills the matching outputs (the others are set to NULL; any output may be NULL). */
PA_API pa_status pa_load_preset(const char* dir, const char* name, int* kind, pa_model** model, pa_observable** observable,
                                pa_toral_map** map, pa_trig** trig);

/* Start points: base position x = num / 2^30 and height fraction y in [0, 1) of the cell. */
PA_API pa_status pa_birkhoff(const pa_model* m, const pa_observable* f, int64_t x_num, double y_frac, double T,
                             double* out);

/* Deviation sweeps over `starts` seeded base points on the geometric grid. */
PA_API pa_status pa_sweep_run(const pa_model* m, const pa_observable* f, size_t starts, uint64_t seed, double t_min,
                              double t_max, double ratio, int workers, pa_sweep** out);
/* Straight-line flow along the expanding direction of a 2x2 hyperbolic matrix. */
PA_API pa_status pa_sweep_run_linear(const int64_t L[4], const pa_trig* f, size_t starts, uint64_t seed, double t_min,
                                     double t_max, double ratio, pa_sweep** out);
PA_API void pa_sweep_free(pa_sweep* s);
PA_API size_t pa_sweep_starts(const pa_sweep* s);
PA_API size_t pa_sweep_samples(const pa_sweep* s);
/* Arrays of length pa_sweep_samples; start = -1 selects the pooled envelope. Any output may be NULL. */
PA_API pa_status pa_sweep_series(const pa_sweep* s, int start, double* T, double* S, double* E, double* envelope);
PA_API pa_status pa_sweep_fit(const pa_sweep* s, int start, double t_min, double t_max, double* slope, double* stderr_slope);
/* Peels the secondary exponents of the model for one start; JSON of the peeled terms. The
   coefficient table of term k (in order) is returned by pa_sweep_coefficients. */
PA_API pa_status pa_sweep_peel(pa_sweep* s, int start, const char* options_json, char** out_json);
PA_API pa_status pa_sweep_coefficients(const pa_sweep* s, int start, size_t term, double* out);
PA_API pa_status pa_sweep_json(const pa_sweep* s, char** out_json);

/* Closest-return decomposition of the orbit piece of length T from the start point, as JSON with the check. */
PA_API pa_status pa_decompose(const pa_model* m, int64_t x_num, double y_frac, double T, char** out_json);
/* Truncated functional at depth N, in unstable coordinates (out has room for cap values). */
PA_API pa_status pa_functional(const pa_model* m, int64_t x_num, double y_frac, double T, int N, double* out, size_t cap,
                               size_t* len, double* tail);
/* Additivity residual over consecutive pieces of lengths T1, T2 and scaling residual under one
   renormalization step; beta receives the functional of the first piece. */
PA_API pa_status pa_functional_check(const pa_model* m, int64_t x_num, double y_frac, double T1, double T2, int N,
                                     double* additivity, double* scaling, double* tail, double* beta, size_t cap, size_t* len);
PA_API pa_status pa_c_plus_bound(const pa_model* m, double* out);
PA_API pa_status pa_asymptotic_gap(const pa_model* m, int64_t x_num, double y_frac, double T, int N, double* out);

/* Toral maps: perturbation_json is {"x": [...], "y": [...]} Fourier terms, may be NULL. */
PA_API pa_status pa_toral_map_new(const int64_t L[4], const char* perturbation_json, double epsilon, pa_toral_map** out);
PA_API void pa_toral_map_free(pa_toral_map* m);
PA_API pa_status pa_toral_map_json(const pa_toral_map* m, char** out_json);
/* Pairings of the depth-N unstable current with the 10-form battery; tail is the reported bound. */
PA_API pa_status pa_current_pairings(const pa_toral_map* m, int N, int grid, double out[10], double* tail);
/* One-step equivariance residuals for depths 1..max_depth on grid and 2*grid, with the fitted ratio:
   {"residuals", "quadrature_error", "resolved", "roundoff_floor", "fitted", "ratio", "expanding_modulus"}. */
PA_API pa_status pa_equivariance_decay(const pa_toral_map* m, int max_depth, int grid, char** out_json);

PA_API pa_status pa_trig_random(int max_freq, int terms, uint64_t seed, pa_trig** out);
PA_API pa_status pa_trig_from_json(const char* json, pa_trig** out);
PA_API pa_status pa_trig_json(const pa_trig* f, char** out_json);
PA_API void pa_trig_free(pa_trig* f);
/* Correlation report of f o L^n against g for n = 0..n_max, as JSON. */
PA_API pa_status pa_correlation_json(const int64_t L[4], const pa_trig* f, const pa_trig* g, int n_max, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
