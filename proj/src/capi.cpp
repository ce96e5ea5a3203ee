// extern-C surface over the core.  Exceptions are mapped to status codes and a
// thread-local error message; all JSON results are strdup'ed for the caller.
#include "shrinkerlab/shrinkerlab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "flow.hpp"
#include "functionals.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "operators.hpp"
#include "shrinker.hpp"
#include "spectral.hpp"

using namespace shl;

struct shl_surface {
  AnySurface s2;                       // curve or profile
  std::optional<RoundProduct> product; // analytic model when set
};

namespace {

thread_local std::string g_last_error;

int status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return SHL_ERR_INVALID_ARGUMENT;
    case ErrorKind::Numeric: return SHL_ERR_NUMERIC;
    case ErrorKind::Io: return SHL_ERR_IO;
    case ErrorKind::Verification: return SHL_ERR_VERIFICATION;
  }
  return SHL_ERR_NUMERIC;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SHL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SHL_ERR_NUMERIC;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out_json, const json& j) { *out_json = dup_string(dump_sorted(j)); }

const AnySurface& need_discrete(const shl_surface* s) {
  if (!s) fail(ErrorKind::InvalidArgument, "null surface handle");
  if (s->product)
    fail(ErrorKind::InvalidArgument, "operation needs a discrete surface, not a round product");
  return s->s2;
}

LocalGeometry geom_of(const shl_surface* s) { return local_geometry(need_discrete(s)); }

FlowConfig flow_config_from_json(const char* config_json) {
  FlowConfig cfg;
  if (!config_json || !*config_json) return cfg;
  const json j = json::parse(config_json);
  cfg.dt_max = j.value("dt_max", cfg.dt_max);
  cfg.dt_cap = j.value("dt_cap", cfg.dt_cap);
  cfg.time_budget = j.value("time_budget", cfg.time_budget);
  cfg.area_extinction_frac = j.value("area_extinction_frac", cfg.area_extinction_frac);
  cfg.max_A_cap_factor = j.value("max_A_cap_factor", cfg.max_A_cap_factor);
  cfg.sample_stride = j.value("sample_stride", cfg.sample_stride);
  cfg.monitor_entropy = j.value("monitor_entropy", cfg.monitor_entropy);
  cfg.rescaled = j.value("rescaled", cfg.rescaled);
  cfg.store_surfaces = j.value("store_surfaces", cfg.store_surfaces);
  cfg.resample_ratio = j.value("resample_ratio", cfg.resample_ratio);
  if (j.contains("probes")) {
    for (const auto& p : j.at("probes")) {
      cfg.f_probes.push_back({Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                       p.at(2).get<double>()),
                              p.at(3).get<double>()});
    }
  }
  return cfg;
}

FlowTrace trace_from_json(const char* trace_json) {
  if (!trace_json) fail(ErrorKind::InvalidArgument, "null trace");
  const json j = json::parse(trace_json);
  FlowTrace t;
  for (const auto& js : j.at("samples")) {
    FlowSample s;
    s.t = js.at("t").get<double>();
    s.area = js.value("area", 0.0);
    s.max_abs_A = js.value("max_abs_A", 0.0);
    if (js.contains("entropy")) s.entropy = js.at("entropy").get<double>();
    if (js.contains("surface")) {
      const ParsedSurface ps = surface_from_json(js.at("surface"));
      if (ps.curve) s.surface = *ps.curve;
      else if (ps.profile) s.surface = *ps.profile;
    }
    t.samples.push_back(std::move(s));
  }
  if (j.contains("t_sing")) t.t_sing = j.at("t_sing").get<double>();
  if (j.contains("x_sing")) {
    const auto& a = j.at("x_sing");
    t.x_sing = Vector3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  }
  return t;
}

}  // namespace

extern "C" {

const char* shl_version(void) { return "shrinkerlab 0.1.0"; }

const char* shl_last_error(void) { return g_last_error.c_str(); }

void shl_string_free(char* s) { std::free(s); }

void shl_surface_free(shl_surface* s) { delete s; }

int shl_surface_circle(double radius, int nodes, shl_surface** out) {
  return guarded([&] { *out = new shl_surface{make_circle(radius, nodes), {}}; });
}

int shl_surface_ellipse(double a, double b, int nodes, shl_surface** out) {
  return guarded([&] { *out = new shl_surface{make_ellipse(a, b, nodes), {}}; });
}

int shl_surface_line_segment(double half_length, int nodes, shl_surface** out) {
  return guarded([&] { *out = new shl_surface{make_line_segment(half_length, nodes), {}}; });
}

int shl_surface_sphere_profile(double radius, int nodes, shl_surface** out) {
  return guarded([&] { *out = new shl_surface{make_sphere_profile(radius, nodes), {}}; });
}

int shl_surface_cylinder_profile(double radius, double half_length, int nodes,
                                 shl_surface** out) {
  return guarded(
      [&] { *out = new shl_surface{make_cylinder_profile(radius, half_length, nodes), {}}; });
}

int shl_surface_dumbbell_profile(double bell_radius, double neck_radius,
                                 double neck_half_length, int nodes, shl_surface** out) {
  return guarded([&] {
    *out = new shl_surface{
        make_dumbbell_profile(bell_radius, neck_radius, neck_half_length, nodes), {}};
  });
}

int shl_surface_round_product(int ambient_dim, int sphere_dim, double radius,
                              shl_surface** out) {
  return guarded([&] {
    RoundProduct rp{ambient_dim, sphere_dim, radius};
    validate(rp);
    auto* h = new shl_surface{DiscreteCurve{}, rp};
    *out = h;
  });
}

int shl_surface_from_json(const char* json_text, shl_surface** out) {
  return guarded([&] {
    if (!json_text) fail(ErrorKind::InvalidArgument, "null JSON");
    const ParsedSurface ps = surface_from_json(json::parse(json_text));
    if (ps.curve) *out = new shl_surface{*ps.curve, {}};
    else if (ps.profile) *out = new shl_surface{*ps.profile, {}};
    else *out = new shl_surface{DiscreteCurve{}, ps.product};
  });
}

int shl_surface_to_json(const shl_surface* s, char** out_json) {
  return guarded([&] {
    if (!s) fail(ErrorKind::InvalidArgument, "null surface handle");
    emit(out_json, s->product ? to_json(*s->product) : to_json(s->s2));
  });
}

int shl_surface_node_count(const shl_surface* s, int* out) {
  return guarded([&] {
    *out = std::visit([](const auto& v) { return v.size(); }, need_discrete(s));
  });
}

int shl_surface_dilate(const shl_surface* s, double alpha, shl_surface** out) {
  return guarded([&] {
    const AnySurface& any = need_discrete(s);
    *out = new shl_surface{
        std::visit([&](const auto& v) -> AnySurface { return dilate(v, alpha); }, any), {}};
  });
}

int shl_surface_translate(const shl_surface* s, const double* v, int dim,
                          shl_surface** out) {
  return guarded([&] {
    const AnySurface& any = need_discrete(s);
    if (std::holds_alternative<DiscreteCurve>(any)) {
      if (dim < 2) fail(ErrorKind::InvalidArgument, "curve translation needs 2 components");
      *out = new shl_surface{
          translate(std::get<DiscreteCurve>(any), Vector2d(v[0], v[1])), {}};
    } else {
      if (dim == 3 && (v[0] != 0.0 || v[1] != 0.0))
        fail(ErrorKind::InvalidArgument, "profile translations must preserve the axis");
      const double dz = (dim == 3) ? v[2] : v[dim - 1];
      *out = new shl_surface{translate(std::get<ProfileSurface>(any), dz), {}};
    }
  });
}

int shl_surface_normal_graph(const shl_surface* s, const double* f, int n_f,
                             double amplitude, int do_resample, shl_surface** out) {
  return guarded([&] {
    const AnySurface& any = need_discrete(s);
    VectorXd field = Eigen::Map<const VectorXd>(f, n_f);
    *out = new shl_surface{
        std::visit(
            [&](const auto& v) -> AnySurface {
              return normal_graph(v, field, amplitude, do_resample != 0);
            },
            any),
        {}};
  });
}

int shl_surface_resample(const shl_surface* s, int nodes, shl_surface** out) {
  return guarded([&] {
    const AnySurface& any = need_discrete(s);
    *out = new shl_surface{
        std::visit([&](const auto& v) -> AnySurface { return resample(v, nodes); }, any), {}};
  });
}

int shl_local_geometry(const shl_surface* s, char** out_json) {
  return guarded([&] { emit(out_json, to_json(geom_of(s))); });
}

int shl_f_functional(const shl_surface* s, const double* x0, double t0, char** out_json) {
  return guarded([&] {
    const Vector3d c(x0[0], x0[1], x0[2]);
    if (s && s->product) emit(out_json, to_json(f_functional(*s->product, c, t0)));
    else emit(out_json, to_json(f_functional(geom_of(s), c, t0)));
  });
}

int shl_f_gradient(const shl_surface* s, const double* x0, double t0, char** out_json) {
  return guarded([&] {
    emit(out_json, to_json(f_gradient(geom_of(s), Vector3d(x0[0], x0[1], x0[2]), t0)));
  });
}

int shl_entropy(const shl_surface* s, char** out_json) {
  return guarded([&] {
    if (s && s->product) emit(out_json, to_json(entropy(*s->product)));
    else emit(out_json, to_json(entropy(geom_of(s))));
  });
}

int shl_volume_growth_check(const shl_surface* s, double V, char** out_json) {
  return guarded([&] { emit(out_json, to_json(volume_growth_check(geom_of(s), V))); });
}

int shl_residual(const shl_surface* s, char** out_json) {
  return guarded([&] { emit(out_json, to_json(residual(geom_of(s)))); });
}

int shl_identity_suite(const shl_surface* s, char** out_json) {
  return guarded([&] { emit(out_json, to_json(identity_suite(geom_of(s)))); });
}

int shl_classification(const shl_surface* s, char** out_json) {
  return guarded([&] { emit(out_json, to_json(classification_verdict(geom_of(s)))); });
}

int shl_spectrum(const shl_surface* s, int count, int azimuthal_mode,
                 int include_eigenfunctions, char** out_json) {
  return guarded([&] {
    emit(out_json,
         to_json(spectrum(geom_of(s), count, azimuthal_mode), include_eigenfunctions != 0));
  });
}

int shl_metric_laplacian_spectrum(const shl_surface* s, int count, char** out_json) {
  return guarded([&] {
    const VectorXd mu = metric_laplacian_spectrum(geom_of(s), count);
    json j{{"schema", "shrinkerlab/spectrum/1"}, {"eigenvalues", json::array()}};
    for (int i = 0; i < mu.size(); ++i) j["eigenvalues"].push_back(mu[i]);
    emit(out_json, j);
  });
}

int shl_stability(const shl_surface* s, char** out_json) {
  return guarded([&] {
    if (!s) fail(ErrorKind::InvalidArgument, "null surface handle");
    StabilityReport rep;
    if (s->product) rep = f_stability_test(*s->product);
    else if (std::holds_alternative<DiscreteCurve>(s->s2))
      rep = f_stability_test(std::get<DiscreteCurve>(s->s2));
    else rep = f_stability_test(std::get<ProfileSurface>(s->s2));
    emit(out_json, to_json(rep));
  });
}

int shl_dirichlet_mu1(const shl_surface* s, double R, double* out_mu1) {
  return guarded([&] { *out_mu1 = dirichlet_mu1(geom_of(s), R); });
}

int shl_verify_eigenfunctions(const shl_surface* s, char** out_json) {
  return guarded([&] {
    const EigenfunctionDefects d = verify_eigenfunctions(geom_of(s));
    emit(out_json, json{{"schema", "shrinkerlab/eigenfunction_defects/1"},
                        {"H_defect", d.H_defect},
                        {"translation_defects", d.translation_defects}});
  });
}

int shl_second_variation(const shl_surface* s, const double* f, int n_f, double h,
                         const double* y, double* out) {
  return guarded([&] {
    const VectorXd field = Eigen::Map<const VectorXd>(f, n_f);
    *out = second_variation(geom_of(s), field, h, Vector3d(y[0], y[1], y[2]));
  });
}

int shl_radial_path(const shl_surface* s, const double* y, double a, double s_max,
                    int samples, char** out_json) {
  return guarded([&] {
    if (samples < 2) fail(ErrorKind::InvalidArgument, "need at least 2 samples");
    std::vector<double> grid(samples);
    for (int k = 0; k < samples; ++k) grid[k] = s_max * k / (samples - 1);
    const RadialPathReport rep =
        radial_path_monotonicity(geom_of(s), Vector3d(y[0], y[1], y[2]), a, grid);
    emit(out_json, json{{"schema", "shrinkerlab/radial_path/1"},
                        {"s", rep.s},
                        {"values", rep.g_values},
                        {"non_increasing", rep.non_increasing},
                        {"worst_increase", rep.worst_increase}});
  });
}

int shl_minimal_cone_check(const shl_surface* s, char** out_json) {
  return guarded([&] {
    const AnySurface& any = need_discrete(s);
    if (!std::holds_alternative<DiscreteCurve>(any))
      fail(ErrorKind::InvalidArgument, "minimal cone check supports curves");
    const MinimalConeVerdict v = minimal_cone_check(std::get<DiscreteCurve>(any));
    emit(out_json, json{{"schema", "shrinkerlab/minimal_cone/1"},
                        {"is_cone", v.is_cone},
                        {"hyperplane_expected", v.hyperplane_expected},
                        {"dilation_defect", v.dilation_defect},
                        {"distance_to_origin", v.distance_to_origin}});
  });
}

int shl_flow_consistency(const shl_surface* s, double t_end, char** out_json) {
  return guarded([&] {
    emit(out_json, to_json(self_shrinking_flow_consistency(need_discrete(s), t_end)));
  });
}

int shl_solve_angenent_torus(const char* config_json, char** out_json) {
  return guarded([&] {
    TorusSolveConfig cfg;
    if (config_json && *config_json) {
      const json j = json::parse(config_json);
      cfg.window_lo = j.value("window_lo", cfg.window_lo);
      cfg.window_hi = j.value("window_hi", cfg.window_hi);
      cfg.bisection_tol = j.value("bisection_tol", cfg.bisection_tol);
      cfg.ode_step = j.value("ode_step", cfg.ode_step);
      cfg.profile_nodes = j.value("profile_nodes", cfg.profile_nodes);
      cfg.shoot_from_outer = j.value("shoot_from_outer", cfg.shoot_from_outer);
    }
    emit(out_json, to_json(solve_angenent_torus(cfg)));
  });
}

int shl_shrinker_curve_orbit(double r0, double H0, double step, double max_arclength,
                             char** out_json) {
  return guarded([&] {
    CurveOrbitConfig cfg;
    if (step > 0) cfg.step = step;
    if (max_arclength > 0) cfg.max_arclength = max_arclength;
    emit(out_json, to_json(shrinker_curve_ode(r0, H0, cfg)));
  });
}

int shl_flow_run(const shl_surface* s, const char* config_json, char** out_trace_json) {
  return guarded([&] {
    emit(out_trace_json, to_json(run_flow(need_discrete(s), flow_config_from_json(config_json))));
  });
}

int shl_generic_flow(const shl_surface* s, const char* config_json, char** out_trace_json) {
  return guarded([&] {
    GenericFlowConfig cfg;
    cfg.flow = flow_config_from_json(config_json);
    if (config_json && *config_json) {
      const json j = json::parse(config_json);
      cfg.entropy_drop = j.value("entropy_drop", cfg.entropy_drop);
      cfg.proximity_tol = j.value("proximity_tol", cfg.proximity_tol);
      cfg.max_jumps = j.value("max_jumps", cfg.max_jumps);
    }
    emit(out_trace_json, to_json(generic_piecewise_flow(need_discrete(s), cfg)));
  });
}

int shl_extract_tangent(const char* trace_json, const double* x_sing, double t_sing,
                        char** out_json) {
  return guarded([&] {
    const FlowTrace t = trace_from_json(trace_json);
    Vector3d x(0, 0, 0);
    if (x_sing) x = Vector3d(x_sing[0], x_sing[1], x_sing[2]);
    else if (t.x_sing) x = *t.x_sing;
    emit(out_json, to_json(extract_tangent(t, x, t_sing)));
  });
}

int shl_monotonicity_audit(const char* trace_json, const char* probes_json,
                           char** out_json) {
  return guarded([&] {
    const FlowTrace t = trace_from_json(trace_json);
    std::vector<std::pair<Vector3d, double>> probes;
    for (const auto& p : json::parse(probes_json)) {
      probes.push_back({Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                 p.at(2).get<double>()),
                        p.at(3).get<double>()});
    }
    emit(out_json, to_json(monotonicity_audit(t, probes)));
  });
}

int shl_verify_library(const char* config_json, const char* golden_torus_json,
                       char** out_json) {
  return guarded([&] {
    double tol_scale = 1.0;
    int resolution = 512;
    if (config_json && *config_json) {
      const json j = json::parse(config_json);
      tol_scale = j.value("tolerance_scale", tol_scale);
      resolution = j.value("resolution", resolution);
    }
    if (resolution < 8) fail(ErrorKind::InvalidArgument, "resolution too small");

    json checks = json::array();
    bool all_pass = true;
    auto check = [&](const std::string& name, double defect, double tol) {
      const bool pass = defect <= tol * tol_scale;
      all_pass &= pass;
      checks.push_back(json{
          {"name", name}, {"defect", defect}, {"tolerance", tol * tol_scale}, {"pass", pass}});
    };

    struct Member {
      std::string name;
      AnySurface surf;
      double identity_tol;
    };
    std::vector<Member> members;
    members.push_back({"circle", make_circle(std::sqrt(2.0), resolution), 1e-6});
    members.push_back({"sphere", make_sphere_profile(2.0, 4 * resolution), 1e-6});
    members.push_back(
        {"cylinder", make_cylinder_profile(std::sqrt(2.0), 13.0, 4 * resolution), 1e-6});
    if (golden_torus_json && *golden_torus_json) {
      const ParsedSurface ps = surface_from_json(json::parse(golden_torus_json));
      if (!ps.profile) fail(ErrorKind::Io, "golden torus file does not hold a profile");
      members.push_back({"torus", *ps.profile, 1e-4});
    }

    for (const auto& m : members) {
      const LocalGeometry g = local_geometry(m.surf);
      const ShrinkerResidual r = residual(g);
      check(m.name + ".residual_max", r.max_abs, 1e-4);
      check(m.name + ".residual_weighted_l2", r.weighted_l2, 1e-5);
      // permissive gate so the checks below decide pass/fail
      const IdentityReport ids = identity_suite(g, {1e-4, 1e-3});
      check(m.name + ".identity_worst", ids.worst(), m.identity_tol);
      const EigenfunctionDefects d = verify_eigenfunctions(g);
      check(m.name + ".LH_eq_H", d.H_defect, 1e-4);
      double tmax = 0.0;
      for (double v : d.translation_defects) tmax = std::max(tmax, v);
      check(m.name + ".Lvn_eq_half_vn", tmax, 1e-4);
      // eigensolve on a capped resampling; the bound is resolution-robust
      const int cap = 1024;
      const LocalGeometry ge =
          (std::visit([](const auto& v) { return v.size(); }, m.surf) > cap)
              ? local_geometry(std::visit(
                    [&](const auto& v) -> AnySurface { return resample(v, cap); }, m.surf))
              : g;
      const SpectrumReport sp = spectrum(ge, 1, 0);
      check(m.name + ".mu1_below_minus_half", sp.eigenvalues[0] + 0.5, 1e-3);
    }

    // line: residual and spectrum only (identities need a shrinker with mass)
    {
      const DiscreteCurve line = make_line_segment(13.0, 2 * resolution);
      const LocalGeometry g = local_geometry(line);
      const ShrinkerResidual r = residual(g);
      check("line.residual_max", r.max_abs, 1e-8);
      const SpectrumReport sp = spectrum(g, 1, 0);
      check("line.mu1_below_minus_half", sp.eigenvalues[0] + 0.5, 1e-3);
    }

    json rep{{"schema", "shrinkerlab/verify/1"},
             {"pass", all_pass},
             {"resolution", resolution},
             {"tolerance_scale", tol_scale},
             {"checks", checks}};
    emit(out_json, rep);
    if (!all_pass) fail(ErrorKind::Verification, "verification battery found defects");
  });
}

}  // extern "C"
