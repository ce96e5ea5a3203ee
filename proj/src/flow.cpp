#include "flow.hpp"

#include "operators.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kPi = std::numbers::pi;

// Cyclic tridiagonal solve via Sherman-Morrison; rows are
// a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i] with wraparound corners.
Eigen::VectorXd solve_tridiag(std::vector<double> a, std::vector<double> b,
                              std::vector<double> c, Eigen::VectorXd d, bool cyclic) {
  const int n = static_cast<int>(b.size());
  auto thomas = [&](const std::vector<double>& bb, const Eigen::VectorXd& rhs) {
    std::vector<double> cp(n);
    Eigen::VectorXd x(n), dp(n);
    cp[0] = c[0] / bb[0];
    dp[0] = rhs[0] / bb[0];
    for (int i = 1; i < n; ++i) {
      const double m = bb[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / m;
      dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
  };
  if (!cyclic) return thomas(b, d);
  const double alpha = a[0], beta = c[n - 1];
  const double gamma = -b[0];
  std::vector<double> bmod = b;
  bmod[0] = b[0] - gamma;
  bmod[n - 1] = b[n - 1] - beta * alpha / gamma;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u[0] = gamma;
  u[n - 1] = beta;
  const Eigen::VectorXd y = thomas(bmod, d);
  const Eigen::VectorXd z = thomas(bmod, u);
  const double vy = y[0] + alpha / gamma * y[n - 1];
  const double vz = z[0] + alpha / gamma * z[n - 1];
  return y - (vy / (1.0 + vz)) * z;
}

struct StepSystem {
  std::vector<double> a, b, c;  // shared structure; per-coordinate diagonal tweaks
  Eigen::VectorXd rhs_r, rhs_z; // or x, y for curves
  bool cyclic;
};

}  // namespace

LocalGeometry local_geometry(const AnySurface& s) {
  return std::visit([](const auto& v) { return local_geometry(v); }, s);
}

DiscreteCurve mcf_step(const DiscreteCurve& curve, double dt, bool rescaled) {
  const int n = curve.size();
  const bool cyclic = curve.closed;
  const LocalGeometry g = local_geometry(curve);
  std::vector<double> h(cyclic ? n : n - 1);
  for (size_t i = 0; i < h.size(); ++i)
    h[i] = (curve.pts[(i + 1) % n] - curve.pts[i]).norm();
  std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0);
  Eigen::VectorXd dx(n), dy(n);
  for (int i = 0; i < n; ++i) {
    dx[i] = curve.pts[i].x();
    dy[i] = curve.pts[i].y();
    if (rescaled) {
      // dilation term through its normal projection; the tangential part is a
      // reparametrization and would only skew the node distribution
      const double xn = 0.5 * g.position.row(i).dot(g.normal.row(i));
      dx[i] += dt * xn * g.normal(i, 0);
      dy[i] += dt * xn * g.normal(i, 1);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!cyclic && (i == 0 || i == n - 1)) continue;  // truncated ends held
    const double hm = h[(i + n - 1) % n];
    const double hp = h[i];
    const double ds = 0.5 * (hm + hp);
    a[i] = -dt / (hm * ds);
    c[i] = -dt / (hp * ds);
    b[i] = 1.0 - a[i] - c[i];
  }
  const Eigen::VectorXd nx = solve_tridiag(a, b, c, dx, cyclic);
  const Eigen::VectorXd ny = solve_tridiag(a, b, c, dy, cyclic);
  DiscreteCurve out = curve;
  for (int i = 0; i < n; ++i) {
    if (!cyclic && (i == 0 || i == n - 1)) continue;
    out.pts[i] = Vector2d(nx[i], ny[i]);
  }
  return out;
}

ProfileSurface mcf_step(const ProfileSurface& p, double dt, bool rescaled) {
  const LocalGeometry g = local_geometry(p);
  const int n = p.size();
  const bool cyclic = p.topology == ProfileTopology::TorusLike;
  const bool sphere_like = p.topology == ProfileTopology::SphereLike;

  auto at = [&](int i) -> Vector2d {
    if (cyclic) return p.rz[((i % n) + n) % n];
    return p.rz[i];
  };
  std::vector<double> ar(n, 0.0), br(n, 1.0), cr(n, 0.0);
  std::vector<double> az(n, 0.0), bz(n, 1.0), cz(n, 0.0);
  Eigen::VectorXd rr(n), rz(n);
  for (int i = 0; i < n; ++i) {
    // explicit rotational term -(n_r / r) n, plus the normal dilation part of
    // the rescaled flow
    double speed = -g.normal(i, 0) / g.radius[i];
    if (rescaled) speed += 0.5 * g.position.row(i).dot(g.normal.row(i));
    rr[i] = p.rz[i].x() + dt * speed * g.normal(i, 0);
    rz[i] = p.rz[i].y() + dt * speed * g.normal(i, 2);
  }
  for (int i = 0; i < n; ++i) {
    const bool interior = cyclic || (i > 0 && i < n - 1);
    double hm = 0.0, hp = 0.0;
    if (interior) {
      hm = (at(i) - at(i - 1)).norm();
      hp = (at(i + 1) - at(i)).norm();
    } else if (sphere_like) {
      // pole-side ghost: reflection (-r, z); the ghost edge length is 2r
      hp = (i == 0) ? (at(1) - at(0)).norm() : 2.0 * p.rz[n - 1].x();
      hm = (i == 0) ? 2.0 * p.rz[0].x() : (at(n - 1) - at(n - 2)).norm();
    } else {
      // cylinder-like truncation: mirror ghost across the end plane (Neumann
      // in r, fixed z window); exact for straight cylinders
      hp = (i == 0) ? (at(1) - at(0)).norm() : (at(n - 1) - at(n - 2)).norm();
      hm = hp;
    }
    const double ds = 0.5 * (hm + hp);
    const double am = -dt / (hm * ds);
    const double cp = -dt / (hp * ds);
    if (!interior && sphere_like) {
      // The z-row sees zero flux through the pole; the r-row couples to the
      // reflected node -r, which doubles its diagonal contribution.
      if (i == 0) {
        cr[i] = cp;
        br[i] = 1.0 - 2.0 * am - cp;
        cz[i] = cp;
        bz[i] = 1.0 - cp;
      } else {
        ar[i] = am;
        br[i] = 1.0 - am - 2.0 * cp;
        az[i] = am;
        bz[i] = 1.0 - am;
      }
    } else if (!interior) {
      // cylinder-like end: mirrored neighbor doubles the r coupling; z held
      if (i == 0) {
        cr[i] = 2.0 * cp;
        br[i] = 1.0 - 2.0 * cp;
        bz[i] = 1.0;
      } else {
        ar[i] = 2.0 * am;
        br[i] = 1.0 - 2.0 * am;
        bz[i] = 1.0;
      }
    } else {
      ar[i] = az[i] = am;
      cr[i] = cz[i] = cp;
      br[i] = 1.0 - am - cp;
      bz[i] = br[i];
    }
  }
  const Eigen::VectorXd sr = solve_tridiag(ar, br, cr, rr, cyclic);
  const Eigen::VectorXd sz = solve_tridiag(az, bz, cz, rz, cyclic);
  ProfileSurface out = p;
  for (int i = 0; i < n; ++i) {
    const bool held_z = !cyclic && !sphere_like && (i == 0 || i == n - 1);
    out.rz[i] = Vector2d(sr[i], held_z ? p.rz[i].y() : sz[i]);
  }
  return out;
}

AnySurface mcf_step(const AnySurface& s, double dt, bool rescaled) {
  return std::visit([&](const auto& v) -> AnySurface { return mcf_step(v, dt, rescaled); }, s);
}

// ---------------------------------------------------------------------------
// Flow driver

namespace {

double surface_area(const LocalGeometry& g) { return g.measure.sum(); }

double median_edge_length(const AnySurface& s) {
  std::vector<double> h;
  if (std::holds_alternative<DiscreteCurve>(s)) {
    const auto& c = std::get<DiscreteCurve>(s);
    const int n = c.size();
    for (int i = 0; i + (c.closed ? 0 : 1) < n; ++i)
      h.push_back((c.pts[(i + 1) % n] - c.pts[i]).norm());
  } else {
    const auto& p = std::get<ProfileSurface>(s);
    const int n = p.size();
    const bool cyc = p.topology == ProfileTopology::TorusLike;
    for (int i = 0; i + (cyc ? 0 : 1) < n; ++i)
      h.push_back((p.rz[(i + 1) % n] - p.rz[i]).norm());
  }
  std::nth_element(h.begin(), h.begin() + h.size() / 2, h.end());
  return h[h.size() / 2];
}


double max_abs_A(const LocalGeometry& g) {
  return std::sqrt(g.second_fund2.maxCoeff());
}

AnySurface resample_same(const AnySurface& s) {
  return std::visit([](const auto& v) -> AnySurface { return resample(v, v.size()); }, s);
}

double edge_ratio(const AnySurface& s) {
  if (std::holds_alternative<DiscreteCurve>(s)) {
    const auto& c = std::get<DiscreteCurve>(s);
    return max_adjacent_edge_ratio(c.pts, c.closed);
  }
  const auto& p = std::get<ProfileSurface>(s);
  return max_adjacent_edge_ratio(p.rz, p.topology == ProfileTopology::TorusLike);
}

bool embedded_ok(const AnySurface& s) {
  if (std::holds_alternative<DiscreteCurve>(s)) {
    const auto& c = std::get<DiscreteCurve>(s);
    if (!c.closed || c.immersed) return true;
    return is_simple_polygon(c.pts, true);
  }
  const auto& p = std::get<ProfileSurface>(s);
  if (p.topology == ProfileTopology::TorusLike) return is_simple_polygon(p.rz, true);
  for (const auto& q : p.rz)
    if (q.x() <= 0.0) return false;
  return true;
}

Vector3d centroid(const LocalGeometry& g) {
  Vector3d c = Vector3d::Zero();
  double w = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    Vector3d x = Vector3d::Zero();
    x.head(g.ambient) = g.position.row(i).transpose();
    if (g.axisymmetric) x = Vector3d(0, 0, g.position(i, 2));  // axis average
    c += g.measure[i] * x;
    w += g.measure[i];
  }
  return c / w;
}


// Type-I singular-time fit over samples the mesh still resolves.  Curves use
// 1/(2 max|A|^2); sphere-like profiles use the interior neck law
// r_min^2 / 2 = t_sing - t, whose linear root is invariant to the profile
// fraction sampled.
double fit_singular_time(const std::vector<FlowSample>& samples, const AnySurface& state,
                         double t, double mA) {
  if (std::holds_alternative<DiscreteCurve>(state)) {
    // Closed embedded curves lose enclosed area at rate exactly 2 pi.
    const auto& c = std::get<DiscreteCurve>(state);
    if (c.closed && !c.immersed) {
      double area = 0.0;
      const int n = c.size();
      for (int i = 0; i < n; ++i) {
        const Vector2d& a = c.pts[i];
        const Vector2d& b = c.pts[(i + 1) % n];
        area += a.x() * b.y() - b.x() * a.y();
      }
      return t + 0.5 * std::abs(area) / (2.0 * std::numbers::pi);
    }
  }
  std::vector<std::pair<double, double>> pts;
  const bool sphere_like =
      std::holds_alternative<ProfileSurface>(state) &&
      std::get<ProfileSurface>(state).topology == ProfileTopology::SphereLike;
  auto add_sample = [&](double tt, const AnySurface& surf, double maxA) {
    const double h = median_edge_length(surf);
    if (sphere_like) {
      const auto& rz = std::get<ProfileSurface>(surf).rz;
      const int n = static_cast<int>(rz.size());
      double rmin = std::numeric_limits<double>::infinity();
      for (int i = n / 10; i < n - n / 10; ++i) rmin = std::min(rmin, rz[i].x());
      if (rmin >= 3.0 * h) pts.push_back({tt, rmin * rmin / 2.0});
    } else if (maxA * h <= 0.5) {
      pts.push_back({tt, 0.5 / (maxA * maxA)});
    }
  };
  add_sample(t, state, mA);
  for (auto it = samples.rbegin(); it != samples.rend() && pts.size() < 8; ++it)
    if (it->surface) add_sample(it->t, *it->surface, it->max_abs_A);
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (auto& [tt, yy] : pts) {
    st += tt;
    sy += yy;
    stt += tt * tt;
    sty += tt * yy;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * stt - st * st;
  const double slope = (denom != 0) ? (m * sty - st * sy) / denom : 0.0;
  const double fallback = t + 0.5 / (mA * mA);  // round/cylindrical constant
  if (pts.size() >= 2 && slope < 0) {
    const double root = -((sy - slope * st) / m) / slope;
    if (root > t) return root;
  }
  return fallback;
}

Vector3d singular_point_estimate(const LocalGeometry& g) {
  int arg = 0;
  g.second_fund2.maxCoeff(&arg);
  if (g.axisymmetric) {
    // A collapsing neck concentrates on the axis; otherwise fall back to the
    // axis-projected centroid.
    if (g.radius[arg] < 0.25 * diameter(g))
      return Vector3d(0, 0, g.position(arg, 2));
    return centroid(g);
  }
  return centroid(g);
}

}  // namespace

FlowTrace run_flow(const AnySurface& initial, const FlowConfig& cfg) {
  FlowTrace trace;
  AnySurface state = initial;
  LocalGeometry g = local_geometry(state);
  const double area0 = surface_area(g);
  const double diam0 = diameter(g);
  const double cap = cfg.max_A_cap_factor / diam0;

  double t = 0.0;
  long step = 0;
  std::optional<EntropyIterate> warm;
  double maxA_at_sample = max_abs_A(g);

  double prev_inv2 = 0.0, prev_t = 0.0;
  bool have_prev = false;

  auto record = [&](const LocalGeometry& gg) {
    FlowSample s;
    s.t = t;
    s.area = surface_area(gg);
    s.max_abs_A = max_abs_A(gg);
    if (cfg.monitor_entropy) {
      EntropyOptions eo;
      eo.warm_start = warm;
      if (warm) {  // warm-started light monitor after the first full search
        eo.spatial_starts = 1;
        eo.temporal_starts = 2;
      }
      const EntropyResult er = entropy(gg, eo);
      s.entropy = er.lambda;
      warm = EntropyIterate{er.x0, er.t0, er.lambda};
    }
    for (const auto& [x0, anchor] : cfg.f_probes) {
      const double tau = anchor - t;
      s.f_probe_values.push_back(tau > 0 ? f_functional(gg, x0, tau).value
                                         : std::numeric_limits<double>::quiet_NaN());
    }
    if (cfg.store_surfaces) s.surface = state;
    trace.samples.push_back(std::move(s));
  };

  record(g);
  while (t < cfg.time_budget) {
    const double mA = max_abs_A(g);
    const double area = surface_area(g);
    if (area < cfg.area_extinction_frac * area0) {
      trace.termination = FlowTermination::Extinction;
      trace.t_sing = t;  // refined below from the area trend
      trace.x_sing = centroid(g);
      break;
    }
    if (mA > cap) {
      trace.termination = FlowTermination::Singularity;
      trace.t_sing = fit_singular_time(trace.samples, state, t, mA);
      trace.x_sing = singular_point_estimate(g);
      break;
    }
    double dt = std::min({cfg.dt_max, cfg.dt_cap / (mA * mA), cfg.time_budget - t});
    AnySurface next = state;
    bool ok = false;
    std::string step_error;
    try {
      for (int attempt = 0; attempt < 24; ++attempt) {
        next = mcf_step(state, dt, cfg.rescaled);
        const LocalGeometry gn = local_geometry(next);
        if (!gn.position.allFinite())
          fail(ErrorKind::Numeric, "surface degenerated during the step");
        if (max_abs_A(gn) * max_abs_A(gn) * dt <= 4.0 * cfg.dt_cap || dt <= 1e-14) {
          ok = true;
          g = gn;
          break;
        }
        dt *= 0.5;
      }
    } catch (const Error& e) {
      ok = false;
      step_error = e.what();
    }
    if (!ok) {
      trace.message = step_error.empty() ? "step size underflow" : step_error;
      trace.termination = FlowTermination::Singularity;
      trace.t_sing = t;
      trace.x_sing = singular_point_estimate(g);
      break;
    }
    have_prev = true;
    prev_inv2 = 1.0 / (mA * mA);  // paired with the pre-step time
    prev_t = t;
    state = next;
    t += dt;
    ++step;
    if (edge_ratio(state) > cfg.resample_ratio) {
      state = resample_same(state);
      g = local_geometry(state);
    }
    const double mA_now = max_abs_A(g);
    if (step % cfg.sample_stride == 0 || mA_now > 1.15 * maxA_at_sample) {
      if (!embedded_ok(state)) {
        trace.termination = FlowTermination::EmbeddingLost;
        trace.t_sing = t;
        trace.x_sing = singular_point_estimate(g);
        break;
      }
      record(g);
      maxA_at_sample = mA_now;
    }
  }
  if (trace.samples.empty() || trace.samples.back().t < t) record(g);
  trace.end_time = t;
  if (t >= cfg.time_budget) trace.termination = FlowTermination::TimeBudget;
  // Extinction time refinement: the area of a shrinking n-sphere is linear in
  // t^{n/...}; fit the last two samples of area^{2/(n+... } empirically via
  // linear extrapolation of area to zero.
  if (trace.termination == FlowTermination::Extinction && trace.samples.size() >= 2) {
    const auto& s1 = trace.samples[trace.samples.size() - 2];
    const auto& s2 = trace.samples.back();
    const int n = local_geometry(initial).dim;
    const double p = 2.0 / n;  // area^{2/n} is linear in t for round collapse
    const double y1 = std::pow(s1.area, p), y2 = std::pow(s2.area, p);
    if (y1 > y2) trace.t_sing = s2.t + y2 * (s2.t - s1.t) / (y1 - y2);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Tangent candidates

namespace {

AnySurface rescale_about(const AnySurface& s, const Vector3d& x_sing, double scale) {
  if (std::holds_alternative<DiscreteCurve>(s)) {
    DiscreteCurve c = std::get<DiscreteCurve>(s);
    for (auto& p : c.pts) p = (p - Vector2d(x_sing.x(), x_sing.y())) / scale;
    return c;
  }
  ProfileSurface p = std::get<ProfileSurface>(s);
  for (auto& q : p.rz) q = Vector2d(q.x() / scale, (q.y() - x_sing.z()) / scale);
  return p;
}

}  // namespace

ModelFit fit_model(const AnySurface& candidate) {
  ModelFit fit;
  const double r2 = std::sqrt(2.0);
  if (std::holds_alternative<DiscreteCurve>(candidate)) {
    const auto& c = std::get<DiscreteCurve>(candidate);
    double dist_circle = 0.0;
    for (const auto& p : c.pts)
      dist_circle = std::max(dist_circle, std::abs(p.norm() - r2));
    // best-fit line through the origin
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : c.pts) {
      sxx += p.x() * p.x();
      sxy += p.x() * p.y();
      syy += p.y() * p.y();
    }
    const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
    const double lam_min = 0.5 * (tr - std::sqrt(std::max(tr * tr - 4 * det, 0.0)));
    const double dist_line = std::sqrt(std::max(lam_min, 0.0) / c.pts.size());
    if (dist_circle < 0.05 * r2) {
      fit.label = "circle";
      fit.distance = dist_circle;
    } else if (dist_line < 0.05 * r2) {
      fit.label = "line";
      fit.distance = dist_line;
    } else {
      fit.label = "other";
      fit.distance = std::min(dist_circle, dist_line);
    }
    return fit;
  }
  const auto& p = std::get<ProfileSurface>(candidate);
  double dist_sphere = 0.0;
  for (const auto& q : p.rz) dist_sphere = std::max(dist_sphere, std::abs(q.norm() - 2.0));
  // straight cylinder about the axis, fitted within the ball |x| < 4
  double dist_cyl = std::numeric_limits<double>::infinity();
  int in_ball = 0;
  for (const auto& q : p.rz) {
    if (q.norm() < 4.0) {
      const double d = std::abs(q.x() - r2);
      dist_cyl = (in_ball == 0) ? d : std::max(dist_cyl, d);
      ++in_ball;
    }
  }
  // Collapsing tube: the meridian loop is a round circle far from the axis,
  // the cylinder tangent seen on a meridian section.  Its radius approaches
  // sqrt(2) only logarithmically in the remaining time, so the gate is the
  // circularity of the loop; the radius defect is reported as the distance.
  double dist_tube = std::numeric_limits<double>::infinity();
  bool tube = false;
  bool round_tube = false;
  if (p.topology == ProfileTopology::TorusLike) {
    Vector2d c = Vector2d::Zero();
    for (const auto& q : p.rz) c += q;
    c /= p.size();
    double rho = 0.0;
    for (const auto& q : p.rz) rho += (q - c).norm();
    rho /= p.size();
    double worst = 0.0;
    for (const auto& q : p.rz) worst = std::max(worst, std::abs((q - c).norm() - rho));
    if (c.x() > 3.0 * rho && std::abs(rho - r2) < 0.35 * r2) {
      tube = true;
      round_tube = worst < 0.1 * rho;
      dist_tube = std::abs(rho - r2);
    }
  }
  if (dist_sphere < 0.1 * 2.0) {
    fit.label = "sphere";
    fit.distance = dist_sphere;
  } else if (in_ball >= 8 && dist_cyl < 0.08 * r2) {
    fit.label = "cylinder";
    fit.distance = dist_cyl;
  } else if (tube && round_tube) {
    fit.label = "cylinder";
    fit.distance = dist_tube;
  } else if (tube) {
    // off-axis loop collapse that has not yet rounded out; neck-type
    fit.label = "tube-pinch";
    fit.distance = dist_tube;
  } else {
    fit.label = "other";
    fit.distance = std::min({dist_sphere, in_ball >= 8 ? dist_cyl : 1e300, dist_tube});
  }
  return fit;
}


TangentCandidate extract_tangent(const FlowTrace& trace, const Vector3d& x_sing,
                                 double t_sing, int max_scales) {
  TangentCandidate out;
  // The singular-time estimate is extrapolated across the gap to the last
  // recorded sample; classification scales must dominate that uncertainty.
  double t_newest = -std::numeric_limits<double>::infinity();
  for (const auto& s : trace.samples)
    if (s.surface && s.t < t_sing) t_newest = std::max(t_newest, s.t);
  const double s_floor = 50.0 * (t_sing - t_newest);
  std::vector<const FlowSample*> usable;
  for (const auto& s : trace.samples) {
    if (!s.surface || s.t >= t_sing) continue;
    // keep only scales the discretization resolves after parabolic rescaling
    const double sj = t_sing - s.t;
    if (sj < s_floor) continue;
    if (median_edge_length(*s.surface) / std::sqrt(sj) <= 0.35) usable.push_back(&s);
  }
  if (usable.size() < 2)
    fail(ErrorKind::InvalidArgument, "not enough pre-singular samples for tangent extraction");
  const double s_last = t_sing - usable.back()->t;
  for (int j = 0; j < max_scales; ++j) {
    const double target = s_last * std::pow(2.0, j);
    const FlowSample* pick = usable.back();
    double best = std::numeric_limits<double>::infinity();
    for (const FlowSample* s : usable) {
      const double gap = std::abs((t_sing - s->t) - target);
      if (gap < best) {
        best = gap;
        pick = s;
      }
    }
    const double sj = t_sing - pick->t;
    const AnySurface cand = rescale_about(*pick->surface, x_sing, std::sqrt(sj));
    const ModelFit fit = fit_model(cand);
    out.scales.push_back(sj);
    out.classifications.push_back(fit.label);
    out.distances.push_back(fit.distance);
    if (j == 0) {
      out.classification = fit.label;
      out.finest = cand;
      out.rescaled_diameter = diameter(local_geometry(cand));
      out.diameter_bounded = out.rescaled_diameter < 8.0;
    }
  }
  for (const auto& c : out.classifications)
    if (c != out.classification) out.scales_disagree = true;
  return out;
}

// ---------------------------------------------------------------------------
// Generic piecewise flow

namespace {

struct JumpAttempt {
  bool done = false;
  AnySurface replacement;
  JumpRecord record;
  std::string note;
};

// Replacement step: rescale the current surface by its entropy argmax, perturb
// along the lowest eigenfunction until the entropy drops by epsilon, map back,
// and dilate to match area exactly.
JumpAttempt try_replacement(const AnySurface& state, const EntropyResult& ent,
                            const GenericFlowConfig& cfg) {
  JumpAttempt out;
  if (!std::holds_alternative<ProfileSurface>(state)) {
    out.note = "curve branch never jumps (circle and line are the only curve models)";
    return out;
  }
  const auto& prof = std::get<ProfileSurface>(state);
  const double tau = ent.t0;
  const double cz = ent.x0.z();
  ProfileSurface cand = dilate(translate(prof, -cz), 1.0 / std::sqrt(tau));
  const LocalGeometry gc = local_geometry(cand);

  const ModelFit fit = fit_model(AnySurface(cand));
  if (fit.label != "other") {
    out.note = "candidate matches model '" + fit.label + "'; no replacement";
    return out;
  }
  // Replacements need the candidate uniformly near a shrinker; a localized
  // match (a neck in front of distant weight-suppressed pieces) is not one.
  if (shrinker_defect_linf(gc) > 0.5) {
    out.note = "candidate is only locally near a shrinker; no replacement";
    return out;
  }

  Spectrum spec;
  try {
    spec = eigen_lowest(assemble_L(gc, {}), 1);
  } catch (const Error& e) {
    out.note = std::string("replacement aborted: ") + e.what();
    return out;
  }
  const VectorXd u1 = spec.eigenfunctions.col(0);
  const double maxA = std::sqrt(gc.second_fund2.maxCoeff());
  const double lambda0 = entropy(gc).lambda;
  const double a0 = cfg.witness_amplitude / std::max(maxA * u1.cwiseAbs().maxCoeff(), 1e-12);
  for (int k = 0; k < 12 && !out.done; ++k) {
    for (double sign : {-1.0, +1.0}) {  // inward first: tube collapse, not hole closure
      const double amp = sign * a0 * std::pow(2.0, -k);
      ProfileSurface gamma;
      try {
        gamma = normal_graph(cand, u1, amp, true);
      } catch (const Error&) {
        continue;
      }
      double lam;
      try {
        lam = entropy(local_geometry(gamma)).lambda;
      } catch (const Error&) {
        continue;
      }
      if (lam <= lambda0 - 1.1 * cfg.entropy_drop) {
        // map back and fix the area by an exact dilation about the center
        ProfileSurface back = translate(dilate(gamma, std::sqrt(tau)), cz);
        const double area_before = local_geometry(prof).measure.sum();
        const double area_back = local_geometry(back).measure.sum();
        const double alpha = std::sqrt(area_before / area_back);
        ProfileSurface fixed = translate(dilate(translate(back, -cz), alpha), cz);
        out.record.dilation = alpha;
        out.record.area_before = area_before;
        out.record.area_after = local_geometry(fixed).measure.sum();
        out.record.entropy_before = ent.lambda;
        out.record.entropy_after = entropy(local_geometry(fixed)).lambda;
        out.record.drop = out.record.entropy_before - out.record.entropy_after;
        out.record.note = "replacement along lowest eigenfunction, amplitude " +
                          std::to_string(amp);
        out.record.before = state;
        out.record.replacement = AnySurface(fixed);
        out.replacement = fixed;
        out.done = true;
        break;
      }
    }
  }
  if (!out.done) out.note = "line search failed to decrease entropy within amplitude bounds";
  return out;
}

}  // namespace

FlowTrace generic_piecewise_flow(const AnySurface& initial, const GenericFlowConfig& cfg) {
  FlowTrace total;
  AnySurface state = initial;
  double t_offset = 0.0;
  int jumps = 0;
  bool armed = true;

  for (int leg = 0; leg < cfg.max_jumps + 1; ++leg) {
    FlowConfig fc = cfg.flow;
    fc.monitor_entropy = true;
    fc.store_surfaces = true;
    fc.time_budget = cfg.flow.time_budget - t_offset;
    if (fc.time_budget <= 0) break;

    // Run the leg manually so the jump detector can interrupt it.
    FlowTrace leg_trace;
    {
      AnySurface cur = state;
      LocalGeometry g = local_geometry(cur);
      const double area0 = surface_area(g);
      const double diam0 = diameter(g);
      const double cap = fc.max_A_cap_factor / diam0;
      double t = 0.0;
      long step = 0;
      std::optional<EntropyIterate> warm;
      double maxA_at_sample = max_abs_A(g);
      bool jumped = false;

      auto sample_and_check = [&]() -> bool {
        FlowSample s;
        s.t = t_offset + t;
        s.area = surface_area(g);
        s.max_abs_A = max_abs_A(g);
        EntropyOptions eo;
        eo.warm_start = warm;
        if (warm) {
          eo.spatial_starts = 1;
          eo.temporal_starts = 2;
        }
        EntropyResult er;
        try {
          er = entropy(g, eo);
        } catch (const Error&) {
          s.surface = cur;
          leg_trace.samples.push_back(s);
          return false;
        }
        s.entropy = er.lambda;
        warm = EntropyIterate{er.x0, er.t0, er.lambda};
        s.surface = cur;
        leg_trace.samples.push_back(s);

        // Proximity to a shrinker slice: rescale about the entropy argmax.
        if (std::holds_alternative<ProfileSurface>(cur)) {
          const auto& prof = std::get<ProfileSurface>(cur);
          ProfileSurface cand =
              dilate(translate(prof, -er.x0.z()), 1.0 / std::sqrt(er.t0));
          const double res = shrinker_defect_weighted_l2(local_geometry(cand));
          if (res < cfg.proximity_tol && armed && jumps < cfg.max_jumps) {
            const JumpAttempt attempt = try_replacement(cur, er, cfg);
            if (attempt.done) {
              JumpRecord rec = attempt.record;
              rec.time = t_offset + t;
              total.jumps.push_back(rec);
              state = attempt.replacement;
              armed = false;
              ++jumps;
              jumped = true;
              return true;
            }
            if (!attempt.note.empty() && leg_trace.message.empty())
              leg_trace.message = attempt.note;
          } else if (res > 2.0 * cfg.proximity_tol) {
            armed = true;
          }
        }
        return false;
      };

      sample_and_check();
      while (!jumped && t < fc.time_budget) {
        const double mA = max_abs_A(g);
        if (surface_area(g) < fc.area_extinction_frac * area0) {
          leg_trace.termination = FlowTermination::Extinction;
          leg_trace.t_sing = t_offset + t;
          leg_trace.x_sing = centroid(g);
          break;
        }
        if (mA > cap) {
          leg_trace.termination = FlowTermination::Singularity;
          std::vector<FlowSample> all = total.samples;
          for (const auto& smp : leg_trace.samples) all.push_back(smp);
          leg_trace.t_sing = fit_singular_time(all, cur, t_offset + t, mA);
          leg_trace.x_sing = singular_point_estimate(g);
          break;
        }
        double dt = std::min({fc.dt_max, fc.dt_cap / (mA * mA), fc.time_budget - t});
        try {
          AnySurface next = mcf_step(cur, dt, false);
          const LocalGeometry gn = local_geometry(next);
          if (!gn.position.allFinite())
            fail(ErrorKind::Numeric, "surface degenerated during the step");
          cur = next;
          g = gn;
        } catch (const Error& e) {
          leg_trace.termination = FlowTermination::Singularity;
          leg_trace.t_sing = t_offset + t;
          leg_trace.x_sing = singular_point_estimate(g);
          leg_trace.message = e.what();
          break;
        }
        t += dt;
        ++step;
        if (edge_ratio(cur) > fc.resample_ratio) {
          cur = resample_same(cur);
          g = local_geometry(cur);
        }
        const double mA_now = max_abs_A(g);
        if (step % fc.sample_stride == 0 || mA_now > 1.15 * maxA_at_sample) {
          if (!embedded_ok(cur)) {
            leg_trace.termination = FlowTermination::EmbeddingLost;
            leg_trace.t_sing = t_offset + t;
            leg_trace.x_sing = singular_point_estimate(g);
            break;
          }
          maxA_at_sample = mA_now;
          if (sample_and_check()) break;
        }
      }
      if (!jumped && t >= fc.time_budget)
        leg_trace.termination = FlowTermination::TimeBudget;
      leg_trace.end_time = t_offset + t;
      t_offset += t;

      for (auto& s : leg_trace.samples) total.samples.push_back(std::move(s));
      total.termination = leg_trace.termination;
      total.end_time = leg_trace.end_time;
      total.t_sing = leg_trace.t_sing;
      total.x_sing = leg_trace.x_sing;
      if (!leg_trace.message.empty()) total.message = leg_trace.message;

      if (jumped) continue;  // next leg from the replacement
    }

    // Leg terminated without a jump: classify and stop.
    if (total.termination == FlowTermination::Extinction) {
      total.verdict = "round extinction";
    } else if (total.termination == FlowTermination::Singularity ||
               total.termination == FlowTermination::EmbeddingLost) {
      try {
        const TangentCandidate tc =
            extract_tangent(total, *total.x_sing, *total.t_sing, 4);
        if (tc.classification == "sphere" || tc.classification == "circle")
          total.verdict = "round extinction";
        else if (tc.classification == "cylinder")
          total.verdict = "non-compact singularity (cylinder tangent)";
        else if (tc.classification == "tube-pinch")
          total.verdict = "non-compact singularity (tube pinch)";
        else if (tc.classification == "line")
          total.verdict = "non-compact singularity (planar tangent)";
        else
          total.verdict = "unclassified singularity";
      } catch (const Error&) {
        total.verdict = "unclassified singularity";
      }
    } else {
      total.verdict = "time budget reached";
    }
    return total;
  }
  total.verdict = "jump cap reached";
  return total;
}

// ---------------------------------------------------------------------------
// Density monotonicity

MonotonicityReport density_trace(const FlowTrace& trace, const Vector3d& x0, double t0,
                                 double step_tol) {
  return monotonicity_audit(trace, {{x0, t0}}, step_tol);
}

MonotonicityReport monotonicity_audit(const FlowTrace& trace,
                                      const std::vector<std::pair<Vector3d, double>>& probes,
                                      double step_tol) {
  MonotonicityReport rep;
  for (const auto& [x0, anchor] : probes) {
    MonotonicityReport::Probe pr;
    pr.x0 = x0;
    pr.anchor = anchor;
    for (const auto& s : trace.samples) {
      if (!s.surface) continue;
      const double tau = anchor - s.t;
      if (tau <= 0)
        fail(ErrorKind::InvalidArgument, "probe anchor must lie beyond the trace end");
      pr.values.push_back(f_functional(local_geometry(*s.surface), x0, tau).value);
    }
    for (size_t i = 1; i < pr.values.size(); ++i)
      pr.worst_increase = std::max(pr.worst_increase, pr.values[i] - pr.values[i - 1]);
    if (pr.worst_increase > step_tol) rep.pass = false;
    rep.probes.push_back(std::move(pr));
  }
  return rep;
}

}  // namespace shl
