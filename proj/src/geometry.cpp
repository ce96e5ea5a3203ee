#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kPi = std::numbers::pi;

double signed_area(const std::vector<Vector2d>& pts) {
  double a = 0.0;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    const Vector2d& p = pts[i];
    const Vector2d& q = pts[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double cross2(const Vector2d& a, const Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool segments_intersect(const Vector2d& a, const Vector2d& b, const Vector2d& c,
                        const Vector2d& d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
  const Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Catmull-Rom evaluation through four control points with chordal knots.
Vector2d catmull_rom(const Vector2d& p0, const Vector2d& p1, const Vector2d& p2,
                     const Vector2d& p3, double u) {
  auto knot = [](double t, const Vector2d& a, const Vector2d& b) {
    return t + std::max((b - a).norm(), 1e-300);
  };
  const double t0 = 0.0;
  const double t1 = knot(t0, p0, p1);
  const double t2 = knot(t1, p1, p2);
  const double t3 = knot(t2, p2, p3);
  const double t = t1 + u * (t2 - t1);
  auto lerp = [](const Vector2d& a, const Vector2d& b, double ta, double tb, double t) {
    return Vector2d(((tb - t) * a + (t - ta) * b) / (tb - ta));
  };
  const Vector2d a1 = lerp(p0, p1, t0, t1, t);
  const Vector2d a2 = lerp(p1, p2, t1, t2, t);
  const Vector2d a3 = lerp(p2, p3, t2, t3, t);
  const Vector2d b1 = lerp(a1, a2, t0, t2, t);
  const Vector2d b2 = lerp(a2, a3, t1, t3, t);
  return lerp(b1, b2, t1, t2, t);
}

// Resample an open polyline to the given arclength targets.
std::vector<Vector2d> resample_polyline(const std::vector<Vector2d>& pts,
                                        const std::vector<double>& targets) {
  const int n = static_cast<int>(pts.size());
  std::vector<double> s(n, 0.0);
  for (int i = 1; i < n; ++i) s[i] = s[i - 1] + (pts[i] - pts[i - 1]).norm();
  std::vector<Vector2d> out;
  out.reserve(targets.size());
  int seg = 0;
  for (double target : targets) {
    const double t = std::clamp(target, 0.0, s[n - 1]);
    while (seg < n - 2 && s[seg + 1] < t) ++seg;
    const double u = (s[seg + 1] > s[seg]) ? (t - s[seg]) / (s[seg + 1] - s[seg]) : 0.0;
    // linear phantom controls at the open ends keep the chordal knots distinct
    const Vector2d p0 =
        (seg > 0) ? pts[seg - 1] : Vector2d(2.0 * pts[0] - pts[1]);
    const Vector2d p3 =
        (seg + 2 < n) ? pts[seg + 2] : Vector2d(2.0 * pts[n - 1] - pts[n - 2]);
    out.push_back(catmull_rom(p0, pts[seg], pts[seg + 1], p3, u));
  }
  return out;
}

std::vector<Vector2d> resample_closed(const std::vector<Vector2d>& pts, int nodes) {
  const int n = static_cast<int>(pts.size());
  std::vector<double> s(n + 1, 0.0);
  for (int i = 0; i < n; ++i) s[i + 1] = s[i] + (pts[(i + 1) % n] - pts[i]).norm();
  const double total = s[n];
  std::vector<Vector2d> out;
  out.reserve(nodes);
  int seg = 0;
  for (int k = 0; k < nodes; ++k) {
    const double t = total * k / nodes;
    while (seg < n - 1 && s[seg + 1] < t) ++seg;
    const double u = (s[seg + 1] > s[seg]) ? (t - s[seg]) / (s[seg + 1] - s[seg]) : 0.0;
    auto at = [&](int i) { return pts[((i % n) + n) % n]; };
    out.push_back(catmull_rom(at(seg - 1), at(seg), at(seg + 1), at(seg + 2), u));
  }
  return out;
}

}  // namespace

double LocalGeometry::weighted_area() const {
  double a = 0.0;
  for (int i = 0; i < size(); ++i) a += gauss_weight(i) * measure[i];
  return a;
}

// ---------------------------------------------------------------------------
// Constructors

DiscreteCurve make_circle(double radius, int nodes, const Vector2d& center) {
  if (radius <= 0) fail(ErrorKind::InvalidArgument, "circle radius must be positive");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  DiscreteCurve c;
  c.pts.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = 2.0 * kPi * k / nodes;
    c.pts.emplace_back(center.x() + radius * std::cos(t), center.y() + radius * std::sin(t));
  }
  return c;
}

DiscreteCurve make_ellipse(double a, double b, int nodes) {
  if (a <= 0 || b <= 0) fail(ErrorKind::InvalidArgument, "ellipse semi-axes must be positive");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  DiscreteCurve c;
  const int dense = 16 * nodes;
  c.pts.reserve(dense);
  for (int k = 0; k < dense; ++k) {
    const double t = 2.0 * kPi * k / dense;
    c.pts.emplace_back(a * std::cos(t), b * std::sin(t));
  }
  c.pts = resample_closed(c.pts, nodes);
  return c;
}

DiscreteCurve make_line_segment(double half_length, int nodes, double angle) {
  if (half_length <= 0) fail(ErrorKind::InvalidArgument, "half_length must be positive");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  DiscreteCurve c;
  c.closed = false;
  const Vector2d dir(std::cos(angle), std::sin(angle));
  for (int k = 0; k < nodes; ++k) {
    const double s = -half_length + 2.0 * half_length * k / (nodes - 1);
    c.pts.push_back(s * dir);
  }
  return c;
}

ProfileSurface make_sphere_profile(double radius, int nodes, double center_z) {
  if (radius <= 0) fail(ErrorKind::InvalidArgument, "sphere radius must be positive");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  ProfileSurface p;
  p.topology = ProfileTopology::SphereLike;
  p.rz.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double phi = kPi * (k + 0.5) / nodes;
    p.rz.emplace_back(radius * std::sin(phi), center_z - radius * std::cos(phi));
  }
  return p;
}

ProfileSurface make_cylinder_profile(double radius, double half_length, int nodes) {
  if (radius <= 0 || half_length <= 0)
    fail(ErrorKind::InvalidArgument, "cylinder radius and half_length must be positive");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  ProfileSurface p;
  p.topology = ProfileTopology::CylinderLike;
  p.rz.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double z = -half_length + 2.0 * half_length * k / (nodes - 1);
    p.rz.emplace_back(radius, z);
  }
  return p;
}

ProfileSurface make_dumbbell_profile(double bell_radius, double neck_radius,
                                     double neck_half_length, int nodes) {
  if (neck_radius <= 0 || neck_radius >= bell_radius)
    fail(ErrorKind::InvalidArgument, "need 0 < neck_radius < bell_radius");
  if (neck_half_length <= 0) fail(ErrorKind::InvalidArgument, "neck_half_length must be positive");
  if (nodes < 32) fail(ErrorKind::InvalidArgument, "need at least 32 nodes");
  // Straight cylindrical neck over |z| <= neck_half_length, C^1 cosine
  // shoulders up to the bell equators, hemispherical bells.  The flat
  // midsection collapses uniformly, which keeps the neck cylindrical all the
  // way to the pinch.
  const double b = bell_radius;
  const double rn = neck_radius;
  const double zn = neck_half_length;
  const double blend = b;
  const double zc = zn + blend;  // bell equator
  std::vector<Vector2d> pts;
  const int dense = 16 * nodes;
  const int nb = dense / 4;
  for (int k = 0; k <= nb; ++k) {  // left bell, pole to equator
    const double th = 0.5 * kPi * k / nb;
    pts.emplace_back(b * std::sin(th), -zc - b * std::cos(th));
  }
  const int nn = dense / 2;
  for (int k = 1; k < nn; ++k) {  // shoulder, neck, shoulder
    const double z = -zc + 2.0 * zc * k / nn;
    double r = rn;
    if (std::abs(z) > zn) {
      const double u = (std::abs(z) - zn) / blend;  // 0 at neck, 1 at equator
      r = rn + (b - rn) * (1.0 - std::cos(kPi * u)) / 2.0;
    }
    pts.emplace_back(r, z);
  }
  for (int k = 0; k <= nb; ++k) {  // right bell, equator to pole
    const double th = 0.5 * kPi * (1.0 - static_cast<double>(k) / nb);
    pts.emplace_back(b * std::sin(th), zc + b * std::cos(th));
  }
  ProfileSurface p;
  p.topology = ProfileTopology::SphereLike;
  p.rz = std::move(pts);
  return resample(p, nodes);
}

ProfileSurface make_torus_profile(double center_r, double tube_r, int nodes) {
  if (tube_r <= 0 || tube_r >= center_r)
    fail(ErrorKind::InvalidArgument, "need 0 < tube_r < center_r");
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  ProfileSurface p;
  p.topology = ProfileTopology::TorusLike;
  p.rz.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = 2.0 * kPi * k / nodes;
    p.rz.emplace_back(center_r + tube_r * std::cos(t), tube_r * std::sin(t));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Validation

bool is_simple_polygon(const std::vector<Vector2d>& pts, bool closed) {
  const int n = static_cast<int>(pts.size());
  const int segs = closed ? n : n - 1;
  for (int i = 0; i < segs; ++i) {
    const Vector2d& a = pts[i];
    const Vector2d& b = pts[(i + 1) % n];
    for (int j = i + 2; j < segs; ++j) {
      if (closed && i == 0 && j == segs - 1) continue;  // adjacent across the wrap
      if (segments_intersect(a, b, pts[j], pts[(j + 1) % n])) return false;
    }
  }
  return true;
}

void validate(const DiscreteCurve& c) {
  if (c.size() < 8) fail(ErrorKind::InvalidArgument, "curve needs at least 8 nodes");
  double scale = 0.0;
  for (const auto& p : c.pts) scale = std::max(scale, p.norm());
  const int n = c.size();
  const int edges = c.closed ? n : n - 1;
  for (int i = 0; i < edges; ++i) {
    if ((c.pts[(i + 1) % n] - c.pts[i]).norm() <= 1e-14 * std::max(scale, 1.0))
      fail(ErrorKind::InvalidArgument, "degenerate edge at node " + std::to_string(i));
  }
  if (c.closed && signed_area(c.pts) <= 0.0)
    fail(ErrorKind::InvalidArgument, "closed curve must be oriented counterclockwise");
  if (c.closed && !c.immersed && !is_simple_polygon(c.pts, true))
    fail(ErrorKind::InvalidArgument, "closed curve is self-intersecting (set immersed to allow)");
}

void validate(const ProfileSurface& p) {
  if (p.size() < 8) fail(ErrorKind::InvalidArgument, "profile needs at least 8 nodes");
  const int n = p.size();
  for (int i = 0; i < n; ++i) {
    if (p.rz[i].x() <= 0.0)
      fail(ErrorKind::InvalidArgument, "profile radius must be positive at node " +
                                           std::to_string(i) + " (poles are implicit)");
  }
  const int edges = (p.topology == ProfileTopology::TorusLike) ? n : n - 1;
  for (int i = 0; i < edges; ++i) {
    if ((p.rz[(i + 1) % n] - p.rz[i]).norm() <= 1e-14)
      fail(ErrorKind::InvalidArgument, "degenerate edge at node " + std::to_string(i));
  }
  if (p.topology == ProfileTopology::TorusLike) {
    if (signed_area(p.rz) <= 0.0)
      fail(ErrorKind::InvalidArgument, "torus profile must be oriented counterclockwise");
    if (!is_simple_polygon(p.rz, true))
      fail(ErrorKind::InvalidArgument, "torus profile is self-intersecting");
  } else if (p.topology == ProfileTopology::SphereLike) {
    if (p.rz.front().y() >= p.rz.back().y())
      fail(ErrorKind::InvalidArgument, "sphere-like profile must run from low z to high z");
  }
}

void validate(const RoundProduct& rp) {
  if (rp.ambient_dim < 2) fail(ErrorKind::InvalidArgument, "ambient_dim must be >= 2");
  if (rp.sphere_dim < 0 || rp.sphere_dim > rp.n())
    fail(ErrorKind::InvalidArgument, "need 0 <= sphere_dim <= ambient_dim-1");
  if (rp.sphere_dim > 0 && rp.radius <= 0)
    fail(ErrorKind::InvalidArgument, "radius must be positive");
}

// ---------------------------------------------------------------------------
// Local geometry

LocalGeometry local_geometry(const DiscreteCurve& c) {
  validate(c);
  const int n = c.size();
  LocalGeometry g;
  g.dim = 1;
  g.ambient = 2;
  g.axisymmetric = false;
  g.periodic = c.closed;
  g.complete = c.closed;
  g.position.resize(n, 2);
  g.normal.resize(n, 2);
  g.tangent.resize(n, 2);
  g.mean_curvature.resize(n);
  g.second_fund2.resize(n);
  g.arc_measure.resize(n);
  g.measure.resize(n);

  const int edges = c.closed ? n : n - 1;
  std::vector<double> h(edges);
  std::vector<Vector2d> te(edges);
  for (int i = 0; i < edges; ++i) {
    const Vector2d e = c.pts[(i + 1) % n] - c.pts[i];
    h[i] = e.norm();
    te[i] = e / h[i];
  }
  for (int i = 0; i < n; ++i) {
    g.position.row(i) = c.pts[i];
    double ds;
    Vector2d tan, k;
    if (c.closed) {
      const int im = (i + n - 1) % n;
      ds = 0.5 * (h[im] + h[i]);
      tan = (c.pts[(i + 1) % n] - c.pts[im]).normalized();
      k = (te[i] - te[im]) / ds;
    } else if (i == 0) {
      ds = 0.5 * h[0];
      tan = te[0];
      k = (te[1] - te[0]) / (0.5 * (h[0] + h[1]));
    } else if (i == n - 1) {
      ds = 0.5 * h[n - 2];
      tan = te[n - 2];
      k = (te[n - 2] - te[n - 3]) / (0.5 * (h[n - 3] + h[n - 2]));
    } else {
      ds = 0.5 * (h[i - 1] + h[i]);
      tan = (c.pts[i + 1] - c.pts[i - 1]).normalized();
      k = (te[i] - te[i - 1]) / ds;
    }
    const Vector2d nrm(tan.y(), -tan.x());
    const double H = -k.dot(nrm);
    g.tangent.row(i) = tan;
    g.normal.row(i) = nrm;
    g.mean_curvature[i] = H;
    g.second_fund2[i] = H * H;
    g.arc_measure[i] = ds;
    g.measure[i] = ds;
  }
  return g;
}

LocalGeometry local_geometry(const ProfileSurface& p) {
  validate(p);
  const int n = p.size();
  const bool periodic = p.topology == ProfileTopology::TorusLike;
  const bool sphere_like = p.topology == ProfileTopology::SphereLike;
  LocalGeometry g;
  g.dim = 2;
  g.ambient = 3;
  g.axisymmetric = true;
  g.periodic = periodic;
  g.complete = p.topology != ProfileTopology::CylinderLike;
  g.position.resize(n, 3);
  g.normal.resize(n, 3);
  g.tangent.resize(n, 3);
  g.mean_curvature.resize(n);
  g.second_fund2.resize(n);
  g.arc_measure.resize(n);
  g.measure.resize(n);
  g.radius.resize(n);
  g.kappa_profile.resize(n);
  g.kappa_rot.resize(n);

  // Node access with the sphere-like reflection through the poles.
  auto at = [&](int i) -> Vector2d {
    if (periodic) return p.rz[((i % n) + n) % n];
    if (i < 0) {
      if (sphere_like) return Vector2d(-p.rz[-1 - i].x(), p.rz[-1 - i].y());
      return p.rz[0];
    }
    if (i >= n) {
      if (sphere_like) return Vector2d(-p.rz[2 * n - 1 - i].x(), p.rz[2 * n - 1 - i].y());
      return p.rz[n - 1];
    }
    return p.rz[i];
  };
  const bool ghost_ends = periodic || sphere_like;

  for (int i = 0; i < n; ++i) {
    Vector2d tan, k;
    double ds;
    if (ghost_ends || (i > 0 && i < n - 1)) {
      const Vector2d em = at(i) - at(i - 1);
      const Vector2d ep = at(i + 1) - at(i);
      const double hm = em.norm(), hp = ep.norm();
      ds = 0.5 * (hm + hp);
      tan = (at(i + 1) - at(i - 1)).normalized();
      k = (ep / hp - em / hm) / ds;
    } else if (i == 0) {  // cylinder-like end: one-sided
      const Vector2d e0 = at(1) - at(0);
      const Vector2d e1 = at(2) - at(1);
      ds = 0.5 * e0.norm();
      tan = e0.normalized();
      k = (e1.normalized() - e0.normalized()) / (0.5 * (e0.norm() + e1.norm()));
    } else {  // i == n-1
      const Vector2d e0 = at(n - 1) - at(n - 2);
      const Vector2d e1 = at(n - 2) - at(n - 3);
      ds = 0.5 * e0.norm();
      tan = e0.normalized();
      k = (e0.normalized() - e1.normalized()) / (0.5 * (e0.norm() + e1.norm()));
    }
    const Vector2d n2(tan.y(), -tan.x());
    const double r = p.rz[i].x();
    const double z = p.rz[i].y();
    const double kap_prof = -k.dot(n2);  // meridian contribution to H
    const double kap_rot = n2.x() / r;   // rotational contribution to H
    g.position.row(i) = Vector3d(r, 0.0, z);
    g.normal.row(i) = Vector3d(n2.x(), 0.0, n2.y());
    g.tangent.row(i) = Vector3d(tan.x(), 0.0, tan.y());
    g.mean_curvature[i] = kap_prof + kap_rot;
    g.second_fund2[i] = kap_prof * kap_prof + kap_rot * kap_rot;
    g.kappa_profile[i] = -kap_prof;
    g.kappa_rot[i] = -kap_rot;
    g.arc_measure[i] = ds;
    g.radius[i] = r;
    g.measure[i] = 2.0 * kPi * r * ds;
  }
  return g;
}

RoundProductGeometry round_product_geometry(const RoundProduct& rp) {
  validate(rp);
  RoundProductGeometry g;
  const int k = rp.sphere_dim;
  if (k == 0) {
    g.mean_curvature = 0.0;
    g.second_fund2 = 0.0;
    g.shrinker_radius = 0.0;
    g.weighted_volume_density = 1.0;
    return g;
  }
  g.mean_curvature = k / rp.radius;
  g.second_fund2 = k / (rp.radius * rp.radius);
  g.shrinker_radius = std::sqrt(2.0 * k);
  // F_{0,1} via the product reduction: the flat directions integrate to one and
  // the sphere factor contributes its Gaussian-weighted area.
  const double R = rp.radius;
  auto sphere_area = [](int dim, double r) {
    // |S^dim(r)| = 2 pi^{(dim+1)/2} / Gamma((dim+1)/2) * r^dim
    return 2.0 * std::pow(kPi, 0.5 * (dim + 1)) / std::tgamma(0.5 * (dim + 1)) *
           std::pow(r, dim);
  };
  g.weighted_volume_density =
      std::pow(4.0 * kPi, -0.5 * k) * sphere_area(k, R) * std::exp(-R * R / 4.0);
  return g;
}

// ---------------------------------------------------------------------------
// Perturbations and transforms

DiscreteCurve normal_graph(const DiscreteCurve& c, const VectorXd& f, double amplitude,
                           bool do_resample) {
  const LocalGeometry g = local_geometry(c);
  if (f.size() != c.size()) fail(ErrorKind::InvalidArgument, "field size mismatch");
  const double maxA = g.second_fund2.cwiseSqrt().maxCoeff();
  for (int i = 0; i < c.size(); ++i) {
    if (std::abs(amplitude * f[i]) * maxA >= 0.5)
      fail(ErrorKind::InvalidArgument,
           "normal graph amplitude too large at node " + std::to_string(i));
  }
  DiscreteCurve out = c;
  for (int i = 0; i < c.size(); ++i)
    out.pts[i] += amplitude * f[i] * Vector2d(g.normal(i, 0), g.normal(i, 1));
  if (do_resample) out = resample(out, c.size());
  return out;
}

ProfileSurface normal_graph(const ProfileSurface& p, const VectorXd& f, double amplitude,
                            bool do_resample) {
  const LocalGeometry g = local_geometry(p);
  if (f.size() != p.size()) fail(ErrorKind::InvalidArgument, "field size mismatch");
  const double maxA = g.second_fund2.cwiseSqrt().maxCoeff();
  for (int i = 0; i < p.size(); ++i) {
    if (std::abs(amplitude * f[i]) * maxA >= 0.5)
      fail(ErrorKind::InvalidArgument,
           "normal graph amplitude too large at node " + std::to_string(i));
  }
  ProfileSurface out = p;
  for (int i = 0; i < p.size(); ++i) {
    out.rz[i] += amplitude * f[i] * Vector2d(g.normal(i, 0), g.normal(i, 2));
    if (out.rz[i].x() <= 0.0)
      fail(ErrorKind::InvalidArgument,
           "normal graph pushes profile through the axis at node " + std::to_string(i));
  }
  if (do_resample) out = resample(out, p.size());
  return out;
}

namespace {

// Laplace-Beltrami of a node field. Curves: f'' in arclength. Profiles:
// (1/r)(r f')' for axisymmetric fields.  Sphere-like poles take the even
// reflection (no flux).
VectorXd beltrami(const LocalGeometry& g, const VectorXd& f) {
  const int n = g.size();
  VectorXd out(n);
  const bool axi = g.axisymmetric;
  auto pos = [&](int i) {
    Vector2d p;
    if (axi)
      p = Vector2d(g.position(((i % n) + n) % n, 0), g.position(((i % n) + n) % n, 2));
    else
      p = g.position.row(((i % n) + n) % n).head<2>();
    return p;
  };
  for (int i = 0; i < n; ++i) {
    int im = i - 1, ip = i + 1;
    double fm, fp, fc = f[i];
    double hm, hp, rm = 1.0, rp_ = 1.0, rc = 1.0;
    if (g.periodic) {
      im = (i + n - 1) % n;
      ip = (i + 1) % n;
      fm = f[im];
      fp = f[ip];
      hm = (pos(i) - pos(im)).norm();
      hp = (pos(ip) - pos(i)).norm();
      if (axi) {
        rm = 0.5 * (g.radius[i] + g.radius[im]);
        rp_ = 0.5 * (g.radius[i] + g.radius[ip]);
        rc = g.radius[i];
      }
    } else {
      // even reflection at the ends: natural no-flux boundary
      const bool at_lo = (i == 0), at_hi = (i == n - 1);
      fm = at_lo ? f[0] : f[i - 1];
      fp = at_hi ? f[n - 1] : f[i + 1];
      const Vector2d plo = at_lo ? pos(0) : pos(i - 1);
      const Vector2d phi = at_hi ? pos(n - 1) : pos(i + 1);
      hm = at_lo ? 1.0 : (pos(i) - plo).norm();
      hp = at_hi ? 1.0 : (phi - pos(i)).norm();
      if (axi) {
        rm = at_lo ? 0.0 : 0.5 * (g.radius[i] + g.radius[i - 1]);
        rp_ = at_hi ? 0.0 : 0.5 * (g.radius[i] + g.radius[i + 1]);
        rc = g.radius[i];
      } else {
        if (at_lo) rm = 0.0;
        if (at_hi) rp_ = 0.0;
      }
    }
    const double flux_p = rp_ * (fp - fc) / hp;
    const double flux_m = rm * (fc - fm) / hm;
    out[i] = (flux_p - flux_m) / (rc * g.arc_measure[i]);
  }
  return out;
}

VectorXd dfds(const LocalGeometry& g, const VectorXd& f) {
  const int n = g.size();
  VectorXd out(n);
  auto pos = [&](int i) {
    const int j = ((i % n) + n) % n;
    return g.axisymmetric ? Vector2d(g.position(j, 0), g.position(j, 2))
                          : Vector2d(g.position.row(j).head<2>());
  };
  for (int i = 0; i < n; ++i) {
    if (g.periodic) {
      const int im = (i + n - 1) % n, ip = (i + 1) % n;
      out[i] = (f[ip] - f[im]) / ((pos(i) - pos(im)).norm() + (pos(ip) - pos(i)).norm());
    } else if (i == 0) {
      out[i] = (f[1] - f[0]) / (pos(1) - pos(0)).norm();
    } else if (i == n - 1) {
      out[i] = (f[n - 1] - f[n - 2]) / (pos(n - 1) - pos(n - 2)).norm();
    } else {
      out[i] = (f[i + 1] - f[i - 1]) / ((pos(i) - pos(i - 1)).norm() + (pos(i + 1) - pos(i)).norm());
    }
  }
  return out;
}

GraphLinearization linearize(const LocalGeometry& g, const VectorXd& f) {
  GraphLinearization lin;
  const VectorXd lap = beltrami(g, f);
  lin.dH = -lap - g.second_fund2.cwiseProduct(f);
  const VectorXd fp = dfds(g, f);
  lin.dn.resize(g.size(), g.ambient);
  for (int i = 0; i < g.size(); ++i) lin.dn.row(i) = -fp[i] * g.tangent.row(i);
  return lin;
}

}  // namespace

GraphLinearization linearized_H_and_normal(const DiscreteCurve& c, const VectorXd& f) {
  if (!f.allFinite()) fail(ErrorKind::InvalidArgument, "field contains non-finite values");
  return linearize(local_geometry(c), f);
}

GraphLinearization linearized_H_and_normal(const ProfileSurface& p, const VectorXd& f) {
  if (!f.allFinite()) fail(ErrorKind::InvalidArgument, "field contains non-finite values");
  return linearize(local_geometry(p), f);
}

DiscreteCurve dilate(const DiscreteCurve& c, double alpha) {
  if (alpha <= 0) fail(ErrorKind::InvalidArgument, "dilation factor must be positive");
  DiscreteCurve out = c;
  for (auto& p : out.pts) p *= alpha;
  return out;
}

DiscreteCurve translate(const DiscreteCurve& c, const Vector2d& v) {
  DiscreteCurve out = c;
  for (auto& p : out.pts) p += v;
  return out;
}

ProfileSurface dilate(const ProfileSurface& p, double alpha) {
  if (alpha <= 0) fail(ErrorKind::InvalidArgument, "dilation factor must be positive");
  ProfileSurface out = p;
  for (auto& q : out.rz) q *= alpha;
  return out;
}

ProfileSurface translate(const ProfileSurface& p, double dz) {
  ProfileSurface out = p;
  for (auto& q : out.rz) q.y() += dz;
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

DiscreteCurve resample(const DiscreteCurve& c, int nodes) {
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  DiscreteCurve out = c;
  if (c.closed) {
    out.pts = resample_closed(c.pts, nodes);
  } else {
    double total = 0.0;
    for (size_t i = 1; i < c.pts.size(); ++i) total += (c.pts[i] - c.pts[i - 1]).norm();
    std::vector<double> targets(nodes);
    for (int k = 0; k < nodes; ++k) targets[k] = total * k / (nodes - 1);
    out.pts = resample_polyline(c.pts, targets);
  }
  return out;
}

ProfileSurface resample(const ProfileSurface& p, int nodes) {
  if (nodes < 8) fail(ErrorKind::InvalidArgument, "need at least 8 nodes");
  ProfileSurface out = p;
  if (p.topology == ProfileTopology::TorusLike) {
    out.rz = resample_closed(p.rz, nodes);
    return out;
  }
  if (p.topology == ProfileTopology::CylinderLike) {
    double total = 0.0;
    for (size_t i = 1; i < p.rz.size(); ++i) total += (p.rz[i] - p.rz[i - 1]).norm();
    std::vector<double> targets(nodes);
    for (int k = 0; k < nodes; ++k) targets[k] = total * k / (nodes - 1);
    out.rz = resample_polyline(p.rz, targets);
    return out;
  }
  // Sphere-like: extend through both poles by reflection, locate the poles on
  // the interpolated meridian, then resample cell-centered pole to pole.
  const int n = p.size();
  std::vector<Vector2d> ext;
  ext.reserve(n + 4);
  auto mirror = [](const Vector2d& q) { return Vector2d(-q.x(), q.y()); };
  ext.push_back(mirror(p.rz[1]));
  ext.push_back(mirror(p.rz[0]));
  for (const auto& q : p.rz) ext.push_back(q);
  ext.push_back(mirror(p.rz[n - 1]));
  ext.push_back(mirror(p.rz[n - 2]));
  // Arclength positions of the poles: midway along the reflected edges.
  std::vector<double> s(ext.size(), 0.0);
  for (size_t i = 1; i < ext.size(); ++i) s[i] = s[i - 1] + (ext[i] - ext[i - 1]).norm();
  const double s_south = 0.5 * (s[1] + s[2]);
  const double s_north = 0.5 * (s[ext.size() - 3] + s[ext.size() - 2]);
  const double span = s_north - s_south;
  std::vector<double> targets(nodes);
  for (int k = 0; k < nodes; ++k) targets[k] = s_south + span * (k + 0.5) / nodes;
  out.rz = resample_polyline(ext, targets);
  for (auto& q : out.rz) q.x() = std::max(q.x(), 1e-12);
  return out;
}

double max_adjacent_edge_ratio(const std::vector<Vector2d>& pts, bool closed) {
  const int n = static_cast<int>(pts.size());
  const int edges = closed ? n : n - 1;
  double worst = 1.0;
  const int pairs = closed ? edges : edges - 1;
  for (int i = 0; i < pairs; ++i) {
    const double a = (pts[(i + 1) % n] - pts[i]).norm();
    const double b = (pts[(i + 2) % n] - pts[(i + 1) % n]).norm();
    if (a > 0 && b > 0) worst = std::max(worst, std::max(a / b, b / a));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Distances

double max_distance_to_polyline(const std::vector<Vector2d>& pts,
                                const std::vector<Vector2d>& poly, bool poly_closed) {
  const int m = static_cast<int>(poly.size());
  const int segs = poly_closed ? m : m - 1;
  double worst = 0.0;
  for (const auto& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < segs; ++j)
      best = std::min(best, point_segment_distance(p, poly[j], poly[(j + 1) % m]));
    worst = std::max(worst, best);
  }
  return worst;
}

double hausdorff_distance(const std::vector<Vector2d>& a, const std::vector<Vector2d>& b,
                          bool a_closed, bool b_closed) {
  return std::max(max_distance_to_polyline(a, b, b_closed),
                  max_distance_to_polyline(b, a, a_closed));
}

double hausdorff_distance(const DiscreteCurve& a, const DiscreteCurve& b) {
  return hausdorff_distance(a.pts, b.pts, a.closed, b.closed);
}

double hausdorff_distance(const ProfileSurface& a, const ProfileSurface& b) {
  return hausdorff_distance(a.rz, b.rz, a.topology == ProfileTopology::TorusLike,
                            b.topology == ProfileTopology::TorusLike);
}

double diameter(const LocalGeometry& g) {
  double d = 0.0;
  // For axisymmetric surfaces account for the rotated copies: the farthest
  // pair may sit on opposite meridians.
  for (int i = 0; i < g.size(); ++i) {
    for (int j = i; j < g.size(); ++j) {
      if (g.axisymmetric) {
        const double ri = g.position(i, 0), zi = g.position(i, 2);
        const double rj = g.position(j, 0), zj = g.position(j, 2);
        const double dz = zi - zj;
        d = std::max(d, std::sqrt((ri + rj) * (ri + rj) + dz * dz));
      } else {
        d = std::max(d, (g.position.row(i) - g.position.row(j)).norm());
      }
    }
  }
  return d;
}

}  // namespace shl
