#include "functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool constant_radius(const LocalGeometry& g, double* r_out) {
  if (!g.axisymmetric) return false;
  const double r = g.radius.mean();
  if ((g.radius.array() - r).abs().maxCoeff() > 1e-9 * r) return false;
  *r_out = r;
  return true;
}

// Azimuthally reduced Gaussian data for one profile node against a center with
// cylindrical coordinates (rho0, z0).
struct AxiNode {
  double w;     // phi-averaged weight times dmu
  double m2w;   // phi-average of |x-x0|^2 times weight, times dmu
  double drho;  // d
  double dz;
};

AxiNode axi_node(double r, double z, double dmu, double rho0, double z0, double t0) {
  const double a = r * rho0 / (2.0 * t0);
  // on-axis centers dominate the axisymmetric searches; skip the Bessel calls
  const double i0 = (a == 0.0) ? 1.0 : bessel_i0_scaled(a);
  const double i1 = (a == 0.0) ? 0.0 : bessel_i1_scaled(a);
  const double dr = r - rho0, dz = z - z0;
  const double base = dmu * std::exp(-(dr * dr + dz * dz) / (4.0 * t0));
  AxiNode out;
  out.w = base * i0;
  out.m2w = base * ((r * r + rho0 * rho0 + dz * dz) * i0 - 2.0 * r * rho0 * i1);
  out.drho = base * (r * i1 - rho0 * i0) / (2.0 * t0);
  out.dz = out.w * dz / (2.0 * t0);
  return out;
}

double prefactor(int n, double t0) { return std::pow(4.0 * kPi * t0, -0.5 * n); }

// Upper bound on the truncation tail of a Gaussian integral over a surface
// with volume growth vol(B_rho) <= V rho^n, summed over unit-in-sqrt(t0)
// annuli beyond the represented distance D from x0.
double tail_estimate(int n, double V, double D, double t0) {
  double tail = 0.0;
  const double step = std::sqrt(t0);
  for (int k = 0; k < 400; ++k) {
    const double d0 = D + k * step;
    const double d1 = D + (k + 1) * step;
    const double term = std::exp(-d0 * d0 / (4.0 * t0)) *
                        (std::pow(d1, n) - std::pow(d0, n));
    tail += term;
    if (term < 1e-300) break;
  }
  return prefactor(n, t0) * V * tail;
}

double growth_constant(const LocalGeometry& g, const Vector3d& x0) {
  // Crude volume-growth constant from the represented part, with headroom.
  double D = 0.0;
  for (int i = 0; i < g.size(); ++i)
    D = std::max(D, (g.position.row(i).transpose() - x0).norm());
  double V = 0.0;
  for (double frac : {0.25, 0.5, 1.0}) {
    const double rho = frac * D;
    if (rho <= 0) continue;
    double vol = 0.0;
    for (int i = 0; i < g.size(); ++i)
      if ((g.position.row(i).transpose() - x0).norm() < rho) vol += g.measure[i];
    V = std::max(V, vol / std::pow(rho, g.dim));
  }
  return 2.0 * V;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scaled Bessel functions

double bessel_i0_scaled(double x) {
  if (x < 0) fail(ErrorKind::InvalidArgument, "bessel argument must be >= 0");
  if (x < 80.0) return std::exp(-x) * std::cyl_bessel_i(0.0, x);
  const double ix = 1.0 / (8.0 * x);
  const double series = 1.0 + ix * (1.0 + ix * (4.5 + ix * (37.5 + ix * 459.375)));
  return series / std::sqrt(kTwoPi * x);
}

double bessel_i1_scaled(double x) {
  if (x < 0) fail(ErrorKind::InvalidArgument, "bessel argument must be >= 0");
  if (x < 80.0) return std::exp(-x) * std::cyl_bessel_i(1.0, x);
  const double ix = 1.0 / (8.0 * x);
  const double series = 1.0 + ix * (-3.0 + ix * (-7.5 + ix * (-52.5 + ix * -590.625)));
  return series / std::sqrt(kTwoPi * x);
}

// ---------------------------------------------------------------------------
// F functional

FEvaluation f_functional(const LocalGeometry& g, const Vector3d& x0, double t0) {
  if (t0 <= 0) fail(ErrorKind::InvalidArgument, "t0 must be positive");
  FEvaluation out;
  out.x0 = x0;
  out.t0 = t0;
  out.n_nodes = g.size();

  if (!g.axisymmetric) {
    const Vector2d c = x0.head<2>();
    double sum = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const Vector2d p = g.position.row(i).head<2>();
      sum += g.measure[i] * std::exp(-(p - c).squaredNorm() / (4.0 * t0));
    }
    out.value = prefactor(g.dim, t0) * sum;
  } else {
    double r_const = 0.0;
    if (!g.complete && constant_radius(g, &r_const)) {
      // Exact product reduction: the flat direction integrates to one.
      const double rho0 = std::hypot(x0.x(), x0.y());
      const double dr = r_const - rho0;
      out.value = std::pow(4.0 * kPi * t0, -0.5) * kTwoPi * r_const *
                  std::exp(-dr * dr / (4.0 * t0)) *
                  bessel_i0_scaled(r_const * rho0 / (2.0 * t0));
      out.tail_bound = 0.0;
      return out;
    }
    const double rho0 = std::hypot(x0.x(), x0.y());
    const double z0 = x0.z();
    double sum = 0.0;
    for (int i = 0; i < g.size(); ++i)
      sum += axi_node(g.radius[i], g.position(i, 2), g.measure[i], rho0, z0, t0).w;
    out.value = prefactor(g.dim, t0) * sum;
  }

  if (!g.complete) {
    double D = 0.0;
    for (int i = 0; i < g.size(); ++i)
      D = std::max(D, (g.position.row(i).transpose() - x0).norm());
    out.truncation_radius = D;
    out.tail_bound = tail_estimate(g.dim, growth_constant(g, x0), D, t0);
    out.tail_flagged = out.tail_bound > 1e-8 * std::max(out.value, 1e-300);
  }
  return out;
}

FEvaluation f_functional(const RoundProduct& rp, const Vector3d& x0, double t0) {
  return product_reduce_f(rp, x0, t0);
}

FEvaluation product_reduce_f(const RoundProduct& rp, const Vector3d& x0, double t0) {
  validate(rp);
  if (t0 <= 0) fail(ErrorKind::InvalidArgument, "t0 must be positive");
  FEvaluation out;
  out.x0 = x0;
  out.t0 = t0;
  const int k = rp.sphere_dim;
  if (k == 0) {
    // Hyperplane spanned by the first n coordinates.
    const double d = (rp.ambient_dim <= 3) ? x0[rp.ambient_dim - 1] : 0.0;
    out.value = std::exp(-d * d / (4.0 * t0));
    return out;
  }
  // Distance from the projection of x0 onto the sphere ambient R^{k+1}.
  double d2 = 0.0;
  for (int i = 0; i <= k && i < 3; ++i) d2 += x0[i] * x0[i];
  const double d = std::sqrt(d2);
  const double R = rp.radius;
  if (d == 0.0) {
    auto sphere_area = [](int dim, double r) {
      return 2.0 * std::pow(kPi, 0.5 * (dim + 1)) / std::tgamma(0.5 * (dim + 1)) *
             std::pow(r, dim);
    };
    out.value = prefactor(k, t0) * sphere_area(k, R) * std::exp(-R * R / (4.0 * t0));
    return out;
  }
  if (k == 1) {
    const double dr = R - d;
    out.value = prefactor(1, t0) * kTwoPi * R * std::exp(-dr * dr / (4.0 * t0)) *
                bessel_i0_scaled(R * d / (2.0 * t0));
  } else if (k == 2) {
    const double em = std::exp(-(R - d) * (R - d) / (4.0 * t0));
    const double ep = std::exp(-(R + d) * (R + d) / (4.0 * t0));
    out.value = prefactor(2, t0) * kTwoPi * R * R * (2.0 * t0 / (R * d)) * (em - ep);
  } else {
    fail(ErrorKind::InvalidArgument, "off-center product reduction supports k <= 2");
  }
  return out;
}

FGradient f_gradient(const LocalGeometry& g, const Vector3d& x0, double t0) {
  if (t0 <= 0) fail(ErrorKind::InvalidArgument, "t0 must be positive");
  FGradient out;
  const double pf = prefactor(g.dim, t0);
  if (!g.axisymmetric) {
    const Vector2d c = x0.head<2>();
    Vector2d grad = Vector2d::Zero();
    double dt = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const Vector2d p = g.position.row(i).head<2>();
      const double w = g.measure[i] * std::exp(-(p - c).squaredNorm() / (4.0 * t0));
      grad += w * (p - c) / (2.0 * t0);
      dt += w * ((p - c).squaredNorm() / (4.0 * t0 * t0) - g.dim / (2.0 * t0));
    }
    out.dx0.head<2>() = pf * grad;
    out.dt0 = pf * dt;
    return out;
  }
  const double rho0 = std::hypot(x0.x(), x0.y());
  const double z0 = x0.z();
  double drho = 0.0, dz = 0.0, dt = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const AxiNode nd = axi_node(g.radius[i], g.position(i, 2), g.measure[i], rho0, z0, t0);
    drho += nd.drho;
    dz += nd.dz;
    dt += nd.m2w / (4.0 * t0 * t0) - g.dim * nd.w / (2.0 * t0);
  }
  Vector3d dir = Vector3d::Zero();
  if (rho0 > 0) dir = Vector3d(x0.x() / rho0, x0.y() / rho0, 0.0);
  out.dx0 = pf * (drho * dir + dz * Vector3d::UnitZ());
  out.dt0 = pf * dt;
  return out;
}

// ---------------------------------------------------------------------------
// Entropy

namespace {

// Reduced coordinates for the ascent: curves (x, y, log t0); axisymmetric
// surfaces (rho0, z0, log t0) with F even in rho0.
struct Objective {
  const LocalGeometry* g;
  bool axi;
  double length_scale;

  Vector3d to_x0(const Eigen::Vector3d& u) const {
    if (axi) return Vector3d(std::abs(u[0]) * length_scale, 0.0, u[1] * length_scale);
    return Vector3d(u[0] * length_scale, u[1] * length_scale, 0.0);
  }
  double to_t0(const Eigen::Vector3d& u) const { return std::exp(u[2]); }

  double eval(const Eigen::Vector3d& u, Eigen::Vector3d* grad) const {
    const Vector3d x0 = to_x0(u);
    const double t0 = to_t0(u);
    const double value = f_functional(*g, x0, t0).value;
    if (grad) {
      const FGradient fg = f_gradient(*g, x0, t0);
      if (axi) {
        const double drho = fg.dx0.head<2>().norm() *
                            ((x0.head<2>().squaredNorm() > 0)
                                 ? ((fg.dx0.head<2>().dot(x0.head<2>()) >= 0) ? 1.0 : -1.0)
                                 : 0.0);
        (*grad)[0] = (u[0] >= 0 ? 1.0 : -1.0) * drho * length_scale;
        (*grad)[1] = fg.dx0.z() * length_scale;
      } else {
        (*grad)[0] = fg.dx0.x() * length_scale;
        (*grad)[1] = fg.dx0.y() * length_scale;
      }
      (*grad)[2] = fg.dt0 * t0;
    }
    return value;
  }
};

struct AscentResult {
  Eigen::Vector3d u;
  double value;
  int iterations;
  bool converged;
  std::vector<EntropyIterate> trace;
};

AscentResult ascend(const Objective& obj, Eigen::Vector3d u, const EntropyOptions& opt) {
  AscentResult res;
  res.converged = false;
  Eigen::Vector3d grad;
  double value = obj.eval(u, &grad);
  double alpha = 0.25;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (opt.record_trace)
      res.trace.push_back({obj.to_x0(u), obj.to_t0(u), value});
    const double gn = grad.norm();
    if (gn < opt.grad_tol) {
      res.converged = true;
      break;
    }
    bool stepped = false;
    double a = alpha;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::Vector3d trial = u + a * grad;
      Eigen::Vector3d tgrad;
      const double tval = obj.eval(trial, &tgrad);
      if (tval > value + 1e-4 * a * gn * gn) {
        u = trial;
        value = tval;
        grad = tgrad;
        alpha = std::min(a * 1.6, 1e6);
        stepped = true;
        break;
      }
      a *= 0.5;
    }
    if (!stepped) {
      res.converged = grad.norm() < 1e2 * opt.grad_tol;
      break;
    }
  }
  res.u = u;
  res.value = value;
  res.iterations = it;
  return res;
}

}  // namespace

EntropyResult entropy(const LocalGeometry& g, const EntropyOptions& opt) {
  double r_const = 0.0;
  const bool product_cyl = !g.complete && constant_radius(g, &r_const);
  if (!g.complete && !product_cyl)
    fail(ErrorKind::InvalidArgument,
         "entropy supports closed surfaces and constant-radius cylinders only");

  // Bounding box and diameter-based t0 window, extended downward by the
  // curvature scale so localized features (necks) stay inside the search.
  double diam = diameter(g);
  double t0_lo = opt.t0_window_lo * diam * diam;
  const double maxA2 = g.second_fund2.maxCoeff();
  if (maxA2 > 0) t0_lo = std::min(t0_lo, 0.1 / maxA2);
  const double lo = std::log(t0_lo);
  const double hi = std::log(opt.t0_window_hi * diam * diam);

  Objective obj{&g, g.axisymmetric, diam};

  std::vector<Eigen::Vector3d> starts;
  const bool light = opt.spatial_starts <= 1;  // warm-started monitor mode
  if (g.axisymmetric) {
    const double rmax = g.radius.maxCoeff() / diam;
    double zlo = g.position.col(2).minCoeff() / diam;
    double zhi = g.position.col(2).maxCoeff() / diam;
    if (product_cyl) zlo = zhi = 0.0;
    if (light) {
      starts.push_back({0.0, 0.5 * (zlo + zhi), 0.0});
    } else {
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          starts.push_back({rmax * a / 2.0, zlo + (zhi - zlo) * b / 2.0, 0.0});
    }
  } else {
    const double xlo = g.position.col(0).minCoeff() / diam;
    const double xhi = g.position.col(0).maxCoeff() / diam;
    const double ylo = g.position.col(1).minCoeff() / diam;
    const double yhi = g.position.col(1).maxCoeff() / diam;
    if (light) {
      starts.push_back({0.5 * (xlo + xhi), 0.5 * (ylo + yhi), 0.0});
    } else {
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          starts.push_back({xlo + (xhi - xlo) * a / 2.0, ylo + (yhi - ylo) * b / 2.0, 0.0});
    }
  }

  // extra start at the maximum-curvature node: localized peaks live there
  if (opt.spatial_starts > 1) {
    int arg = 0;
    g.second_fund2.maxCoeff(&arg);
    if (g.axisymmetric)
      starts.push_back({g.radius[arg] / diam, g.position(arg, 2) / diam, 0.0});
    else
      starts.push_back({g.position(arg, 0) / diam, g.position(arg, 1) / diam, 0.0});
  }

  EntropyResult best;
  best.lambda = -1.0;
  int count = 0;
  auto consider = [&](Eigen::Vector3d u0) {
    ++count;
    const AscentResult res = ascend(obj, u0, opt);
    const double t0 = obj.to_t0(res.u);
    const bool better =
        res.value > best.lambda + 1e-12 ||
        (std::abs(res.value - best.lambda) <= 1e-12 && t0 > best.t0);
    if (better) {
      best.lambda = res.value;
      best.x0 = obj.to_x0(res.u);
      best.t0 = t0;
      best.iterations = res.iterations;
      best.converged = res.converged;
      best.optimizer_trace = res.trace;
    }
  };
  for (const auto& s : starts)
    for (int c = 0; c < opt.temporal_starts; ++c) {
      Eigen::Vector3d u = s;
      u[2] = lo + (hi - lo) * c / std::max(opt.temporal_starts - 1, 1);
      consider(u);
    }
  if (opt.warm_start) {
    Eigen::Vector3d u;
    if (g.axisymmetric)
      u = {std::hypot(opt.warm_start->x0.x(), opt.warm_start->x0.y()) / diam,
           opt.warm_start->x0.z() / diam, std::log(opt.warm_start->t0)};
    else
      u = {opt.warm_start->x0.x() / diam, opt.warm_start->x0.y() / diam,
           std::log(opt.warm_start->t0)};
    consider(u);
  }
  best.multistart_count = count;
  return best;
}

EntropyResult entropy(const RoundProduct& rp, const EntropyOptions&) {
  validate(rp);
  EntropyResult res;
  res.multistart_count = 0;
  const int k = rp.sphere_dim;
  if (k == 0) {
    res.lambda = 1.0;
    res.t0 = 1.0;
    return res;
  }
  // The maximum sits at the sphere center with t0 = R^2 / (2k).
  auto sphere_area = [](int dim) {
    return 2.0 * std::pow(kPi, 0.5 * (dim + 1)) / std::tgamma(0.5 * (dim + 1));
  };
  res.lambda = sphere_area(k) * std::pow(k / (2.0 * kPi), 0.5 * k) * std::exp(-0.5 * k);
  res.t0 = rp.radius * rp.radius / (2.0 * k);
  return res;
}

// ---------------------------------------------------------------------------
// Volume growth, radial paths, residual helpers

VolumeGrowthReport volume_growth_check(const LocalGeometry& g, double V) {
  VolumeGrowthReport rep;
  std::vector<Vector3d> centers;
  centers.push_back(Vector3d::Zero());
  const int stride = std::max(g.size() / 8, 1);
  for (int i = 0; i < g.size(); i += stride) {
    if (g.axisymmetric)
      centers.emplace_back(0.0, 0.0, g.position(i, 2));  // axis points
    else
      centers.push_back(g.position.row(i));
  }
  const double D = std::max(diameter(g), 1e-12);
  std::vector<double> radii;
  for (int k = 0; k < 8; ++k) radii.push_back(D * std::pow(2.0, k - 5));
  for (const auto& c : centers) {
    for (double rho : radii) {
      double vol = 0.0;
      for (int i = 0; i < g.size(); ++i)
        if ((g.position.row(i).transpose() - c).norm() < rho) vol += g.measure[i];
      const double bound = V * std::pow(rho, g.dim);
      const double ratio = vol / bound;
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst = {c, rho, vol, bound};
      }
    }
  }
  rep.pass = rep.worst_ratio <= 1.0;
  return rep;
}

RadialPathReport radial_path_monotonicity(const LocalGeometry& g, const Vector3d& y,
                                          double a, const std::vector<double>& s_grid,
                                          double residual_tol) {
  if (shrinker_defect_linf(g) > residual_tol)
    fail(ErrorKind::InvalidArgument,
         "radial path monotonicity requires a verified shrinker input");
  RadialPathReport rep;
  for (double s : s_grid) {
    const double t0 = 1.0 + a * s * s;
    if (t0 <= 0) fail(ErrorKind::InvalidArgument, "path leaves t0 > 0");
    rep.s.push_back(s);
    rep.g_values.push_back(f_functional(g, s * y, t0).value);
  }
  for (size_t i = 1; i < rep.g_values.size(); ++i) {
    const double inc = rep.g_values[i] - rep.g_values[i - 1];
    if (rep.s[i] > 0 && inc > rep.worst_increase) rep.worst_increase = inc;
  }
  rep.non_increasing = rep.worst_increase <= 1e-10;
  return rep;
}

VectorXd shrinker_defect(const LocalGeometry& g) {
  VectorXd d(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double xn = g.position.row(i).dot(g.normal.row(i));
    d[i] = g.mean_curvature[i] - 0.5 * xn;
  }
  return d;
}

double shrinker_defect_linf(const LocalGeometry& g) {
  return shrinker_defect(g).cwiseAbs().maxCoeff();
}

double shrinker_defect_weighted_l2(const LocalGeometry& g) {
  const VectorXd d = shrinker_defect(g);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double w = g.gauss_weight(i) * g.measure[i];
    num += w * d[i] * d[i];
    den += w;
  }
  return std::sqrt(num / den);
}

}  // namespace shl
