#include "io.hpp"

#include <algorithm>

namespace shl {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_rows_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

json pts_to_json(const std::vector<Vector2d>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(json::array({p.x(), p.y()}));
  return a;
}

std::vector<Vector2d> pts_from_json(const json& a) {
  std::vector<Vector2d> pts;
  for (const auto& e : a) pts.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  return pts;
}

json x0_to_json(const Vector3d& x) { return json::array({x.x(), x.y(), x.z()}); }

double polygon_signed_area(const std::vector<Vector2d>& pts) {
  double a = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i)
    a += pts[i].x() * pts[(i + 1) % n].y() - pts[(i + 1) % n].x() * pts[i].y();
  return 0.5 * a;
}

}  // namespace

json to_json(const DiscreteCurve& c) {
  return json{{"schema", "shrinkerlab/surface/1"},
              {"type", "curve"},
              {"nodes", pts_to_json(c.pts)},
              {"flags", {{"closed", c.closed}, {"immersed", c.immersed}}}};
}

json to_json(const ProfileSurface& p) {
  const char* topo = p.topology == ProfileTopology::SphereLike    ? "sphere-like"
                     : p.topology == ProfileTopology::TorusLike   ? "torus-like"
                                                                  : "cylinder-like";
  return json{{"schema", "shrinkerlab/surface/1"},
              {"type", "profile"},
              {"nodes", pts_to_json(p.rz)},
              {"flags", {{"topology", topo}}}};
}

json to_json(const RoundProduct& rp) {
  return json{{"schema", "shrinkerlab/surface/1"},
              {"type", "round_product"},
              {"ambient_dim", rp.ambient_dim},
              {"sphere_dim", rp.sphere_dim},
              {"radius", rp.radius}};
}

json to_json(const AnySurface& s) {
  return std::visit([](const auto& v) { return to_json(v); }, s);
}

ParsedSurface surface_from_json(const json& j) {
  ParsedSurface out;
  const std::string type = j.at("type").get<std::string>();
  if (type == "curve") {
    DiscreteCurve c;
    c.pts = pts_from_json(j.at("nodes"));
    if (j.contains("flags")) {
      const auto& f = j.at("flags");
      c.closed = f.value("closed", true);
      c.immersed = f.value("immersed", false);
    }
    if (c.closed && polygon_signed_area(c.pts) < 0)
      std::reverse(c.pts.begin(), c.pts.end());
    validate(c);
    out.curve = std::move(c);
  } else if (type == "profile") {
    ProfileSurface p;
    p.rz = pts_from_json(j.at("nodes"));
    const std::string topo = j.at("flags").at("topology").get<std::string>();
    if (topo == "sphere-like") p.topology = ProfileTopology::SphereLike;
    else if (topo == "torus-like") p.topology = ProfileTopology::TorusLike;
    else if (topo == "cylinder-like") p.topology = ProfileTopology::CylinderLike;
    else fail(ErrorKind::Io, "unknown profile topology: " + topo);
    if (p.topology == ProfileTopology::TorusLike && polygon_signed_area(p.rz) < 0)
      std::reverse(p.rz.begin(), p.rz.end());
    if (p.topology != ProfileTopology::TorusLike && p.rz.front().y() > p.rz.back().y())
      std::reverse(p.rz.begin(), p.rz.end());  // meridians run from low z to high z
    validate(p);
    out.profile = std::move(p);
  } else if (type == "round_product") {
    RoundProduct rp;
    rp.ambient_dim = j.at("ambient_dim").get<int>();
    rp.sphere_dim = j.at("sphere_dim").get<int>();
    rp.radius = j.value("radius", 0.0);
    validate(rp);
    out.product = rp;
  } else {
    fail(ErrorKind::Io, "unknown surface type: " + type);
  }
  return out;
}

json to_json(const LocalGeometry& g) {
  json j{{"schema", "shrinkerlab/local_geometry/1"},
         {"dim", g.dim},
         {"ambient", g.ambient},
         {"axisymmetric", g.axisymmetric},
         {"position", mat_rows_to_json(g.position)},
         {"normal", mat_rows_to_json(g.normal)},
         {"mean_curvature", vec_to_json(g.mean_curvature)},
         {"second_fund2", vec_to_json(g.second_fund2)},
         {"measure", vec_to_json(g.measure)}};
  if (g.axisymmetric) {
    j["kappa_profile"] = vec_to_json(g.kappa_profile);
    j["kappa_rot"] = vec_to_json(g.kappa_rot);
  }
  return j;
}

json to_json(const FEvaluation& f) {
  return json{{"schema", "shrinkerlab/f_evaluation/1"},
              {"value", f.value},
              {"x0", x0_to_json(f.x0)},
              {"t0", f.t0},
              {"truncation_radius",
               std::isfinite(f.truncation_radius) ? json(f.truncation_radius) : json()},
              {"tail_bound", f.tail_bound},
              {"tail_flagged", f.tail_flagged},
              {"n_nodes", f.n_nodes}};
}

json to_json(const FGradient& g) {
  return json{{"dx0", x0_to_json(g.dx0)}, {"dt0", g.dt0}};
}

json to_json(const EntropyResult& e) {
  json trace = json::array();
  for (const auto& it : e.optimizer_trace)
    trace.push_back(json{{"x0", x0_to_json(it.x0)}, {"t0", it.t0}, {"value", it.value}});
  return json{{"schema", "shrinkerlab/entropy/1"},
              {"lambda", e.lambda},
              {"x0", x0_to_json(e.x0)},
              {"t0", e.t0},
              {"multistart_count", e.multistart_count},
              {"iterations", e.iterations},
              {"converged", e.converged},
              {"optimizer_trace", trace}};
}

json to_json(const ShrinkerResidual& r) {
  return json{{"schema", "shrinkerlab/residual/1"},
              {"max_abs", r.max_abs},
              {"weighted_l2", r.weighted_l2},
              {"per_node", vec_to_json(r.per_node)}};
}

json to_json(const IdentityReport& r) {
  return json{{"schema", "shrinkerlab/identities/1"},
              {"radial", r.radial},
              {"mass_first", r.mass_first},
              {"mass_third", r.mass_third},
              {"quartic", r.quartic},
              {"direction_max", r.direction_max},
              {"variance", r.variance},
              {"worst", r.worst()}};
}

json to_json(const SpectrumReport& s, bool include_eigenfunctions) {
  json j{{"schema", "shrinkerlab/spectrum/1"},
         {"eigenvalues", vec_to_json(s.eigenvalues)},
         {"boundary", s.bc == BoundaryCondition::Periodic  ? "periodic"
                      : s.bc == BoundaryCondition::Natural ? "natural"
                                                           : "dirichlet"},
         {"azimuthal_mode", s.azimuthal_mode}};
  if (include_eigenfunctions) j["eigenfunctions"] = mat_rows_to_json(s.eigenfunctions);
  return j;
}

json to_json(const StabilityReport& s) {
  json j{{"schema", "shrinkerlab/stability/1"},
         {"mu1", s.mu1},
         {"mu1_dirichlet", s.mu1_dirichlet},
         {"H_eigen_defect", s.H_eigen_defect},
         {"translation_eigen_defects", s.translation_eigen_defects},
         {"reduced_min", s.reduced_min},
         {"f_stability", s.f_stability_verdict},
         {"entropy_stability", s.entropy_stability_verdict},
         {"classification", s.classification},
         {"routes_consistent", s.routes_consistent},
         {"notes", s.notes}};
  if (s.witness) {
    j["witness"] = json{{"kind", s.witness->kind},
                        {"best_h", s.witness->best_h},
                        {"best_y", x0_to_json(s.witness->best_y)},
                        {"second_variation", s.witness->second_variation},
                        {"f", vec_to_json(s.witness->f)}};
  }
  return j;
}

json to_json(const ClassificationNote& n) {
  json j{{"schema", "shrinkerlab/classification/1"},
         {"verdict", n.verdict},
         {"model_distance", n.model_distance},
         {"h_min", n.h_min},
         {"h_max", n.h_max}};
  if (n.mu1) j["mu1"] = *n.mu1;
  return j;
}

json to_json(const ShootingResult& s) {
  return json{{"schema", "shrinkerlab/shooting/1"},
              {"profile", to_json(s.profile)},
              {"parameter", s.parameter},
              {"closure_defect", s.closure_defect},
              {"residual_max", s.residual_max},
              {"residual_l2", s.residual_l2},
              {"min_r", s.min_r},
              {"max_r", s.max_r},
              {"bisection_steps", s.bisection_steps}};
}

json to_json(const CurveOrbit& o) {
  json pts = json::array();
  for (const auto& p : o.points) pts.push_back(json::array({p.x(), p.y()}));
  return json{{"schema", "shrinkerlab/curve_orbit/1"},
              {"points", pts},
              {"conserved_E", o.E0},
              {"E_drift", o.E_drift},
              {"closure_defect", o.closure_defect},
              {"closure_arclength", o.closure_arclength},
              {"max_radius", o.max_radius},
              {"classification", o.classification}};
}

json to_json(const FlowSample& s) {
  json j{{"t", s.t}, {"area", s.area}, {"max_abs_A", s.max_abs_A}};
  if (std::isfinite(s.entropy)) j["entropy"] = s.entropy;
  if (!s.f_probe_values.empty()) j["f_probes"] = s.f_probe_values;
  if (s.surface) j["surface"] = to_json(*s.surface);
  return j;
}

json to_json(const JumpRecord& r) {
  json j{{"time", r.time},
         {"entropy_before", r.entropy_before},
         {"entropy_after", r.entropy_after},
         {"drop", r.drop},
         {"area_before", r.area_before},
         {"area_after", r.area_after},
         {"dilation", r.dilation},
         {"note", r.note}};
  if (r.before) j["before"] = to_json(*r.before);
  if (r.replacement) j["replacement"] = to_json(*r.replacement);
  return j;
}

json to_json(const FlowTrace& t) {
  json samples = json::array();
  for (const auto& s : t.samples) samples.push_back(to_json(s));
  json jumps = json::array();
  for (const auto& j : t.jumps) jumps.push_back(to_json(j));
  const char* term = nullptr;
  switch (t.termination) {
    case FlowTermination::TimeBudget: term = "time-budget"; break;
    case FlowTermination::Extinction: term = "extinction"; break;
    case FlowTermination::Singularity: term = "singularity"; break;
    case FlowTermination::EmbeddingLost: term = "embedding-lost"; break;
  }
  json j{{"schema", "shrinkerlab/flow_trace/1"},
         {"samples", samples},
         {"jumps", jumps},
         {"termination", term},
         {"end_time", t.end_time},
         {"verdict", t.verdict},
         {"message", t.message}};
  if (t.t_sing) j["t_sing"] = *t.t_sing;
  if (t.x_sing) j["x_sing"] = x0_to_json(*t.x_sing);
  return j;
}

json to_json(const TangentCandidate& t) {
  json j{{"schema", "shrinkerlab/tangent/1"},
         {"scales", t.scales},
         {"classifications", t.classifications},
         {"distances", t.distances},
         {"classification", t.classification},
         {"scales_disagree", t.scales_disagree},
         {"rescaled_diameter", t.rescaled_diameter},
         {"diameter_bounded", t.diameter_bounded}};
  if (t.finest) j["finest"] = to_json(*t.finest);
  return j;
}

json to_json(const MonotonicityReport& m) {
  json probes = json::array();
  for (const auto& p : m.probes)
    probes.push_back(json{{"x0", x0_to_json(p.x0)},
                          {"anchor", p.anchor},
                          {"values", p.values},
                          {"worst_increase", p.worst_increase}});
  return json{{"schema", "shrinkerlab/monotonicity/1"}, {"pass", m.pass}, {"probes", probes}};
}

json to_json(const VolumeGrowthReport& v) {
  return json{{"schema", "shrinkerlab/volume_growth/1"},
              {"pass", v.pass},
              {"worst_ratio", v.worst_ratio},
              {"witness",
               {{"center", x0_to_json(v.worst.center)},
                {"radius", v.worst.radius},
                {"volume", v.worst.volume},
                {"bound", v.worst.bound}}}};
}

json to_json(const FlowConsistencyReport& r) {
  return json{{"schema", "shrinkerlab/flow_consistency/1"},
              {"pass", r.pass},
              {"max_hausdorff", r.max_hausdorff},
              {"max_radius_law_error", r.max_radius_law_error}};
}

std::string dump_sorted(const json& j) { return j.dump(2); }

}  // namespace shl
