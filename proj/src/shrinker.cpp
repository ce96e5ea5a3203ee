#include "shrinker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace

ShrinkerResidual residual(const LocalGeometry& g) {
  ShrinkerResidual out;
  out.per_node = shrinker_defect(g);
  out.max_abs = out.per_node.cwiseAbs().maxCoeff();
  out.weighted_l2 = shrinker_defect_weighted_l2(g);
  return out;
}

bool is_verified_shrinker(const LocalGeometry& g, const ShrinkerTolerance& tol) {
  const ShrinkerResidual r = residual(g);
  return r.weighted_l2 < tol.weighted_l2 && r.max_abs < tol.max_abs;
}

// ---------------------------------------------------------------------------
// Shrinking-curve orbits

CurveOrbit shrinker_curve_ode(double r0, double H0, const CurveOrbitConfig& cfg) {
  if (r0 <= 0) fail(ErrorKind::InvalidArgument, "start radius must be positive");
  struct State {
    double x, y, theta, H;
  };
  const double E0 = H0 * H0 * std::exp(-r0 * r0 / 2.0);
  if (E0 < 1e-14)
    fail(ErrorKind::InvalidArgument,
         "conserved quantity vanishes: straight-line branch (rejected)");

  auto rhs = [](const State& s) {
    const double ct = std::cos(s.theta), st = std::sin(s.theta);
    return State{ct, st, s.H, 0.5 * s.H * (s.x * ct + s.y * st)};
  };
  auto step = [&](State s, double h) {
    const State k1 = rhs(s);
    const State s2{s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y, s.theta + 0.5 * h * k1.theta,
                   s.H + 0.5 * h * k1.H};
    const State k2 = rhs(s2);
    const State s3{s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y, s.theta + 0.5 * h * k2.theta,
                   s.H + 0.5 * h * k2.H};
    const State k3 = rhs(s3);
    const State s4{s.x + h * k3.x, s.y + h * k3.y, s.theta + h * k3.theta, s.H + h * k3.H};
    const State k4 = rhs(s4);
    return State{s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
                 s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
                 s.theta + h / 6.0 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta),
                 s.H + h / 6.0 * (k1.H + 2 * k2.H + 2 * k3.H + k4.H)};
  };

  CurveOrbit orbit;
  orbit.E0 = E0;
  State s{r0, 0.0, 0.5 * kPi, H0};
  const long steps = static_cast<long>(cfg.max_arclength / cfg.step);
  const long keep_stride = std::max<long>(steps / 4000, 1);
  double arc = 0.0;
  for (long k = 0; k < steps; ++k) {
    if (k % keep_stride == 0) {
      orbit.points.emplace_back(s.x, s.y);
      orbit.H.push_back(s.H);
    }
    const State prev = s;
    s = step(s, cfg.step);
    arc += cfg.step;
    const double r = std::hypot(s.x, s.y);
    orbit.max_radius = std::max(orbit.max_radius, r);
    const double E = s.H * s.H * std::exp(-r * r / 2.0);
    orbit.E_drift = std::max(orbit.E_drift, std::abs(E - E0) / E0);
    if (r > cfg.escape_radius) {
      orbit.classification = "escaped";
      return orbit;
    }
    // Poincare section through the start: crossings of {y = 0, x > 0} from
    // below; bisect the step onto the section and measure the return defect.
    if (arc > 1.0 && prev.y < 0.0 && s.y >= 0.0 && s.x > 0.0) {
      State lo = prev;
      double h = cfg.step;
      for (int it = 0; it < 60; ++it) {
        h *= 0.5;
        const State mid = step(lo, h);
        if (mid.y < 0.0) lo = mid;
      }
      const double defect =
          std::abs(lo.x - r0) + std::abs(lo.y) + std::abs(wrap_angle(lo.theta - 0.5 * kPi));
      if (defect < orbit.closure_defect) {
        orbit.closure_defect = defect;
        orbit.closure_arclength = arc;
      }
    }
  }
  orbit.classification = orbit.closure_defect < cfg.closure_tol ? "closed" : "non-closing";
  return orbit;
}

// ---------------------------------------------------------------------------
// Rotational shrinker shooting

namespace {

struct MeridianState {
  double r, z, psi;
};

MeridianState meridian_rhs(const MeridianState& s) {
  const double sp = std::sin(s.psi), cp = std::cos(s.psi);
  return {cp, sp, 0.5 * (s.r * sp - s.z * cp) - sp / s.r};
}

MeridianState meridian_step(const MeridianState& s, double h) {
  const MeridianState k1 = meridian_rhs(s);
  const MeridianState s2{s.r + 0.5 * h * k1.r, s.z + 0.5 * h * k1.z, s.psi + 0.5 * h * k1.psi};
  const MeridianState k2 = meridian_rhs(s2);
  const MeridianState s3{s.r + 0.5 * h * k2.r, s.z + 0.5 * h * k2.z, s.psi + 0.5 * h * k2.psi};
  const MeridianState k3 = meridian_rhs(s3);
  const MeridianState s4{s.r + h * k3.r, s.z + h * k3.z, s.psi + h * k3.psi};
  const MeridianState k4 = meridian_rhs(s4);
  return {s.r + h / 6.0 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r),
          s.z + h / 6.0 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z),
          s.psi + h / 6.0 * (k1.psi + 2 * k2.psi + 2 * k3.psi + k4.psi)};
}

struct HalfShot {
  bool valid = false;
  double defect = 0.0;      // cos(psi) at the symmetry-plane return
  double half_length = 0.0; // arclength of the half meridian
  std::vector<Vector2d> points;
};

// Integrate from (r0, 0) with vertical tangent until the meridian returns to
// the z = 0 plane from above.  `record_stride` > 0 keeps every stride-th node.
HalfShot shoot_half(double r0, double step, long record_stride = 1) {
  HalfShot shot;
  MeridianState s{r0, 0.0, 0.5 * kPi};
  shot.points.emplace_back(s.r, s.z);
  const long max_steps = static_cast<long>(40.0 / step);
  double arc = 0.0;
  for (long k = 0; k < max_steps; ++k) {
    const MeridianState next = meridian_step(s, step);
    if (next.r <= 1e-9 || next.r > 50.0) return shot;  // hit the axis or escaped
    if (s.z > 0.0 && next.z <= 0.0) {
      // bisect the crossing
      MeridianState lo = s;
      double h = step;
      for (int it = 0; it < 60; ++it) {
        h *= 0.5;
        const MeridianState mid = meridian_step(lo, h);
        if (mid.z > 0.0) {
          lo = mid;
          arc += h;
        }
      }
      shot.points.emplace_back(lo.r, 0.0);
      shot.defect = std::cos(lo.psi);
      shot.half_length = arc;
      shot.valid = true;
      return shot;
    }
    s = next;
    arc += step;
    if ((k + 1) % record_stride == 0) shot.points.emplace_back(s.r, s.z);
  }
  return shot;
}

// Re-integrate the converged half meridian with a step that divides its length
// so the profile nodes are ODE points themselves (uniform to round-off), then
// close the loop by the z -> -z reflection.
ProfileSurface assemble_torus(double r0, double half_length, double base_step, int nodes) {
  const int half_nodes = std::max(nodes / 2, 8);
  const long stride =
      std::max<long>(1, std::lround(half_length / base_step / half_nodes));
  const double h = half_length / (stride * half_nodes);
  MeridianState s{r0, 0.0, 0.5 * kPi};
  std::vector<Vector2d> half;
  half.emplace_back(s.r, s.z);
  for (long k = 1; k <= stride * half_nodes; ++k) {
    s = meridian_step(s, h);
    if (k % stride == 0) half.emplace_back(s.r, s.z);
  }
  half.back().y() = 0.0;  // lands on the symmetry plane to round-off
  std::vector<Vector2d> loop = half;
  for (int i = static_cast<int>(half.size()) - 2; i >= 1; --i)
    loop.emplace_back(half[i].x(), -half[i].y());
  ProfileSurface p;
  p.topology = ProfileTopology::TorusLike;
  p.rz = std::move(loop);
  // orient counterclockwise in the (r, z) plane
  double area = 0.0;
  const int n = p.size();
  for (int i = 0; i < n; ++i) {
    const Vector2d& a = p.rz[i];
    const Vector2d& b = p.rz[(i + 1) % n];
    area += a.x() * b.y() - b.x() * a.y();
  }
  if (area < 0) std::reverse(p.rz.begin(), p.rz.end());
  return p;
}

}  // namespace

ShootingResult solve_angenent_torus(const TorusSolveConfig& cfg) {
  // Scan the window for a sign change of the closure defect, then bisect.
  const int scan = 48;
  double lo = 0.0, hi = 0.0;
  double d_lo = 0.0;
  bool have = false;
  double prev_r = 0.0, prev_d = 0.0;
  bool prev_ok = false;
  for (int i = 0; i <= scan; ++i) {
    const double r0 = cfg.window_lo + (cfg.window_hi - cfg.window_lo) * i / scan;
    const HalfShot shot = shoot_half(r0, cfg.ode_step);
    if (shot.valid) {
      if (prev_ok && shot.defect * prev_d < 0) {
        lo = prev_r;
        hi = r0;
        d_lo = prev_d;
        have = true;
        break;
      }
      prev_ok = true;
      prev_r = r0;
      prev_d = shot.defect;
    } else {
      prev_ok = false;
    }
  }
  if (!have)
    fail(ErrorKind::Numeric, "no sign change of the closure defect in the shooting window");

  ShootingResult res;
  HalfShot best;
  double r_star = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > cfg.bisection_tol; ++it) {
    ++res.bisection_steps;
    const double mid = 0.5 * (lo + hi);
    const HalfShot shot = shoot_half(mid, cfg.ode_step);
    if (!shot.valid) fail(ErrorKind::Numeric, "shooting lost the crossing during bisection");
    if (shot.defect * d_lo > 0) {
      lo = mid;
      d_lo = shot.defect;
    } else {
      hi = mid;
    }
    best = shot;
    r_star = mid;
    res.parameter = mid;
    res.closure_defect = shot.defect;
  }
  res.profile = assemble_torus(r_star, best.half_length, cfg.ode_step, cfg.profile_nodes);
  const LocalGeometry g = local_geometry(res.profile);
  const ShrinkerResidual r = residual(g);
  res.residual_max = r.max_abs;
  res.residual_l2 = r.weighted_l2;
  res.min_r = g.radius.minCoeff();
  res.max_r = g.radius.maxCoeff();
  return res;
}

ShootingResult shoot_sphere_profile(double z0, double ode_step, int nodes) {
  // Series start at the pole: psi'(0) = -z0/4.
  const double psi1 = -z0 / 4.0;
  const double s0 = 10.0 * ode_step;
  MeridianState s{s0, z0 + 0.5 * psi1 * s0 * s0, psi1 * s0};
  std::vector<Vector2d> pts;
  pts.emplace_back(s.r, s.z);
  const long max_steps = static_cast<long>(40.0 / ode_step);
  double min_r_seen = s.r;
  for (long k = 0; k < max_steps; ++k) {
    s = meridian_step(s, ode_step);
    if (s.r <= 1e-3 || s.r > 50.0) break;
    pts.emplace_back(s.r, s.z);
    min_r_seen = std::min(min_r_seen, s.r);
  }
  ShootingResult res;
  res.parameter = z0;
  ProfileSurface p;
  p.topology = ProfileTopology::SphereLike;
  if (pts.front().y() > pts.back().y()) std::reverse(pts.begin(), pts.end());
  p.rz = std::move(pts);
  res.profile = resample(p, nodes);
  const LocalGeometry g = local_geometry(res.profile);
  const ShrinkerResidual r = residual(g);
  res.residual_max = r.max_abs;
  res.residual_l2 = r.weighted_l2;
  res.closure_defect = std::abs(res.profile.rz.back().y() + z0);  // symmetric poles
  res.min_r = g.radius.minCoeff();
  res.max_r = g.radius.maxCoeff();
  return res;
}

// ---------------------------------------------------------------------------
// Weighted identities

double IdentityReport::worst() const {
  return std::max({std::abs(radial), mass_first, mass_third, std::abs(quartic),
                   direction_max, std::abs(variance)});
}

IdentityReport identity_suite(const LocalGeometry& g, const ShrinkerTolerance& tol) {
  if (!is_verified_shrinker(g, tol))
    fail(ErrorKind::InvalidArgument, "identity suite requires a verified shrinker");
  IdentityReport rep;
  const int n = g.dim;
  double W = 0.0;
  if (!g.axisymmetric) {
    Vector2d mass1 = Vector2d::Zero(), mass3 = Vector2d::Zero();
    double radial = 0, quartic = 0, variance = 0;
    Vector2d dir_lhs = Vector2d::Zero(), dir_rhs = Vector2d::Zero();
    for (int i = 0; i < g.size(); ++i) {
      const double w = g.gauss_weight(i) * g.measure[i];
      const Vector2d x = g.position.row(i).head<2>();
      const Vector2d nv = g.normal.row(i).head<2>();
      const double x2 = x.squaredNorm();
      const double H = g.mean_curvature[i];
      W += w;
      radial += (x2 - 2.0 * n) * w;
      mass1 += x * w;
      mass3 += x * x2 * w;
      quartic += (x2 * x2 - 2.0 * n * (2.0 * n + 4.0) + 16.0 * H * H) * w;
      variance += (std::pow(x2 / 4.0 - 0.5 * n, 2) - 0.5 * n + H * H) * w;
      for (int a = 0; a < 2; ++a) {
        dir_lhs[a] += x[a] * x[a] * w;
        dir_rhs[a] += 2.0 * (1.0 - nv[a] * nv[a]) * w;
      }
    }
    rep.radial = radial / W;
    rep.mass_first = mass1.norm() / W;
    rep.mass_third = mass3.norm() / W;
    rep.quartic = quartic / W;
    rep.variance = variance / W;
    rep.direction_max = (dir_lhs - dir_rhs).cwiseAbs().maxCoeff() / W;
    return rep;
  }
  // Axisymmetric: azimuthal averages <cos^2> = 1/2 kill the transverse first
  // moments exactly.
  double radial = 0, mass1 = 0, mass3 = 0, quartic = 0, variance = 0;
  double dirz_lhs = 0, dirz_rhs = 0, dirx_lhs = 0, dirx_rhs = 0;
  for (int i = 0; i < g.size(); ++i) {
    const double w = g.gauss_weight(i) * g.measure[i];
    const double r = g.radius[i], z = g.position(i, 2);
    const double nr = g.normal(i, 0), nz = g.normal(i, 2);
    const double x2 = r * r + z * z;
    const double H = g.mean_curvature[i];
    W += w;
    radial += (x2 - 2.0 * n) * w;
    mass1 += z * w;
    mass3 += z * x2 * w;
    quartic += (x2 * x2 - 2.0 * n * (2.0 * n + 4.0) + 16.0 * H * H) * w;
    variance += (std::pow(x2 / 4.0 - 0.5 * n, 2) - 0.5 * n + H * H) * w;
    dirz_lhs += z * z * w;
    dirz_rhs += 2.0 * (1.0 - nz * nz) * w;
    dirx_lhs += 0.5 * r * r * w;
    dirx_rhs += 2.0 * (1.0 - 0.5 * nr * nr) * w;
  }
  rep.radial = radial / W;
  rep.mass_first = std::abs(mass1) / W;
  rep.mass_third = std::abs(mass3) / W;
  rep.quartic = quartic / W;
  rep.variance = variance / W;
  rep.direction_max = std::max(std::abs(dirz_lhs - dirz_rhs), std::abs(dirx_lhs - dirx_rhs)) / W;
  return rep;
}

// ---------------------------------------------------------------------------
// Self-similar flow consistency

FlowConsistencyReport self_shrinking_flow_consistency(const AnySurface& s, double t_end,
                                                      double dt, double tol) {
  const LocalGeometry g0 = local_geometry(s);
  if (!is_verified_shrinker(g0))
    fail(ErrorKind::InvalidArgument, "flow consistency requires a verified shrinker");
  if (t_end <= -1.0 || t_end >= 0.0)
    fail(ErrorKind::InvalidArgument, "need -1 < t_end < 0");
  FlowConsistencyReport rep;
  AnySurface cur = s;
  double t = -1.0;
  int check_counter = 0;
  while (t < t_end) {
    const double step_dt = std::min(dt, t_end - t);
    cur = mcf_step(cur, step_dt, false);
    t += step_dt;
    if (++check_counter % 200 == 0 || t >= t_end) {
      const double scale = std::sqrt(-t);
      const AnySurface ref = std::visit(
          [&](const auto& v) -> AnySurface { return dilate(v, scale); }, s);
      double hd;
      if (std::holds_alternative<DiscreteCurve>(cur)) {
        hd = hausdorff_distance(std::get<DiscreteCurve>(cur), std::get<DiscreteCurve>(ref));
      } else {
        const auto& pc = std::get<ProfileSurface>(cur);
        const auto& pr = std::get<ProfileSurface>(ref);
        if (pc.topology == ProfileTopology::CylinderLike) {
          // compare on the common window: the reference truncation shrinks
          double zmax = 0.0;
          for (const auto& q : pr.rz) zmax = std::max(zmax, std::abs(q.y()));
          auto clip = [&](const std::vector<Vector2d>& pts) {
            std::vector<Vector2d> out;
            for (const auto& q : pts)
              if (std::abs(q.y()) <= 0.75 * zmax) out.push_back(q);
            return out;
          };
          hd = std::max(max_distance_to_polyline(clip(pc.rz), pr.rz, false),
                        max_distance_to_polyline(clip(pr.rz), pc.rz, false));
        } else {
          hd = hausdorff_distance(pc, pr);
        }
      }
      rep.max_hausdorff = std::max(rep.max_hausdorff, hd);
      const LocalGeometry gc = local_geometry(cur);
      for (int i = 0; i < gc.size(); ++i) {
        const double xn = gc.position.row(i).dot(gc.normal.row(i));
        rep.max_radius_law_error =
            std::max(rep.max_radius_law_error,
                     std::abs(gc.mean_curvature[i] + xn / (2.0 * t)));
      }
    }
  }
  rep.pass = rep.max_hausdorff < tol;
  return rep;
}

MinimalConeVerdict minimal_cone_check(const DiscreteCurve& c, double tol) {
  const LocalGeometry g = local_geometry(c);
  const double maxH = g.mean_curvature.cwiseAbs().maxCoeff();
  if (maxH > tol)
    fail(ErrorKind::InvalidArgument, "minimal cone check requires max |H| below tolerance");
  if (shrinker_defect_linf(g) > tol)
    fail(ErrorKind::InvalidArgument, "minimal cone check requires vanishing shrinker defect");
  MinimalConeVerdict out;
  // Dilation invariance on the overlapping window.
  double rmax = 0.0;
  for (const auto& p : c.pts) rmax = std::max(rmax, p.norm());
  std::vector<Vector2d> inner, dilated;
  for (const auto& p : c.pts) {
    if (p.norm() < 0.45 * rmax) dilated.push_back(2.0 * p);
    if (p.norm() < 0.9 * rmax) inner.push_back(p);
  }
  double worst = 0.0;
  for (const auto& q : dilated) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < c.pts.size(); ++i) {
      const Vector2d a = c.pts[i], b = c.pts[i + 1];
      const Vector2d ab = b - a;
      const double tt = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (q - (a + tt * ab)).norm());
    }
    worst = std::max(worst, best);
  }
  out.dilation_defect = worst;
  out.is_cone = worst < 1e-8 * std::max(rmax, 1.0);
  double dist0 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < c.pts.size(); ++i) {
    const Vector2d a = c.pts[i], b = c.pts[i + 1];
    const Vector2d ab = b - a;
    const double tt = std::clamp((-a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    dist0 = std::min(dist0, (a + tt * ab).norm());
  }
  out.distance_to_origin = dist0;
  out.hyperplane_expected = out.is_cone && dist0 < 1e-8 * std::max(rmax, 1.0);
  return out;
}

}  // namespace shl
