/* shrinkerlab: a numerical laboratory for self-shrinking solitons of mean
 * curvature flow on discrete curves, rotationally symmetric profiles, and
 * analytic sphere-line products.
 *
 * C API over the C++ core: opaque surface handles, integer status codes, and
 * JSON report strings.  Every char** output is heap-allocated and must be
 * released with shl_string_free; surfaces are released with shl_surface_free.
 * On failure the return value is nonzero and shl_last_error() describes the
 * problem (thread-local).
 */
#ifndef SHRINKERLAB_H
#define SHRINKERLAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct shl_surface shl_surface;

enum shl_status {
  SHL_OK = 0,
  SHL_ERR_INVALID_ARGUMENT = 1,
  SHL_ERR_NUMERIC = 2,
  SHL_ERR_IO = 3,
  SHL_ERR_VERIFICATION = 4
};

const char* shl_version(void);
const char* shl_last_error(void);
void shl_string_free(char* s);
void shl_surface_free(shl_surface* s);

/* ---- constructors ------------------------------------------------------ */
int shl_surface_circle(double radius, int nodes, shl_surface** out);
int shl_surface_ellipse(double a, double b, int nodes, shl_surface** out);
int shl_surface_line_segment(double half_length, int nodes, shl_surface** out);
int shl_surface_sphere_profile(double radius, int nodes, shl_surface** out);
int shl_surface_cylinder_profile(double radius, double half_length, int nodes,
                                 shl_surface** out);
int shl_surface_dumbbell_profile(double bell_radius, double neck_radius,
                                 double neck_half_length, int nodes, shl_surface** out);
int shl_surface_round_product(int ambient_dim, int sphere_dim, double radius,
                              shl_surface** out);
int shl_surface_from_json(const char* json_text, shl_surface** out);
int shl_surface_to_json(const shl_surface* s, char** out_json);
int shl_surface_node_count(const shl_surface* s, int* out);

/* ---- transforms -------------------------------------------------------- */
int shl_surface_dilate(const shl_surface* s, double alpha, shl_surface** out);
/* v has length 2 (curves) or 3 (profiles; x and y must be 0). */
int shl_surface_translate(const shl_surface* s, const double* v, int dim,
                          shl_surface** out);
/* x + amplitude * f * n; f has one value per node. */
int shl_surface_normal_graph(const shl_surface* s, const double* f, int n_f,
                             double amplitude, int resample, shl_surface** out);
int shl_surface_resample(const shl_surface* s, int nodes, shl_surface** out);

/* ---- pointwise geometry and functionals -------------------------------- */
int shl_local_geometry(const shl_surface* s, char** out_json);
/* x0 has 3 entries (pad with 0 for curves). */
int shl_f_functional(const shl_surface* s, const double* x0, double t0, char** out_json);
int shl_f_gradient(const shl_surface* s, const double* x0, double t0, char** out_json);
int shl_entropy(const shl_surface* s, char** out_json);
int shl_volume_growth_check(const shl_surface* s, double V, char** out_json);

/* ---- shrinker analysis -------------------------------------------------- */
int shl_residual(const shl_surface* s, char** out_json);
int shl_identity_suite(const shl_surface* s, char** out_json);
int shl_classification(const shl_surface* s, char** out_json);
int shl_spectrum(const shl_surface* s, int count, int azimuthal_mode,
                 int include_eigenfunctions, char** out_json);
int shl_metric_laplacian_spectrum(const shl_surface* s, int count, char** out_json);
int shl_stability(const shl_surface* s, char** out_json);
int shl_dirichlet_mu1(const shl_surface* s, double R, double* out_mu1);
int shl_verify_eigenfunctions(const shl_surface* s, char** out_json);

/* ---- variations and verification ---------------------------------------- */
/* Second variation of the Gaussian density at a verified shrinker along the
 * joint path (normal graph f, x_s = s*y, t_s = 1 + s*h). */
int shl_second_variation(const shl_surface* s, const double* f, int n_f, double h,
                         const double* y, double* out);
/* g(s) = F_{s y, 1 + a s^2} sampled on [0, s_max]; non-increasing at shrinkers. */
int shl_radial_path(const shl_surface* s, const double* y, double a, double s_max,
                    int samples, char** out_json);
int shl_minimal_cone_check(const shl_surface* s, char** out_json);
/* Evolve a verified shrinker by mean curvature over [-1, t_end] and compare
 * against the self-similar dilation. */
int shl_flow_consistency(const shl_surface* s, double t_end, char** out_json);

/* ---- solvers ------------------------------------------------------------ */
/* config_json keys (all optional): window_lo, window_hi, bisection_tol,
 * ode_step, profile_nodes, shoot_from_outer. */
int shl_solve_angenent_torus(const char* config_json, char** out_json);
int shl_shrinker_curve_orbit(double r0, double H0, double step, double max_arclength,
                             char** out_json);

/* ---- flows --------------------------------------------------------------
 * config_json keys (all optional): dt_max, dt_cap, time_budget,
 * area_extinction_frac, max_A_cap_factor, sample_stride, monitor_entropy,
 * rescaled, store_surfaces, probes: [[x,y,z,anchor],...].
 * Generic flow adds: entropy_drop, proximity_tol, max_jumps. */
int shl_flow_run(const shl_surface* s, const char* config_json, char** out_trace_json);
int shl_generic_flow(const shl_surface* s, const char* config_json, char** out_trace_json);
int shl_extract_tangent(const char* trace_json, const double* x_sing, double t_sing,
                        char** out_json);
int shl_monotonicity_audit(const char* trace_json, const char* probes_json,
                           char** out_json);

/* ---- verification battery ------------------------------------------------
 * Runs the invariant suite over the built-in shrinker library (circle, sphere,
 * cylinder, line, plus the torus profile when golden_torus_json is non-NULL).
 * Returns SHL_ERR_VERIFICATION when any defect exceeds its tolerance; the
 * report carries per-identity defects either way.
 * config_json keys: tolerance_scale (default 1), resolution (default 512). */
int shl_verify_library(const char* config_json, const char* golden_torus_json,
                       char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SHRINKERLAB_H */
