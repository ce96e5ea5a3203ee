#include "spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace shl {

namespace {

constexpr double kPi = std::numbers::pi;

double F_prefactor(int n) { return std::pow(4.0 * kPi, -0.5 * n); }

VectorXd gauss_node_weights(const LocalGeometry& g) {
  VectorXd w(g.size());
  for (int i = 0; i < g.size(); ++i) w[i] = g.gauss_weight(i) * g.measure[i];
  return w;
}

void require_shrinker(const LocalGeometry& g, double tol, const char* what) {
  const double r = shrinker_defect_linf(g);
  if (r > tol)
    fail(ErrorKind::InvalidArgument,
         std::string(what) + " requires a verified shrinker (max residual " +
             std::to_string(r) + ")");
}

// Weighted inner product pieces entering the (h, y) elimination.  For
// axisymmetric surfaces only the axial translation couples to axisymmetric f;
// the transverse rows vanish after the azimuthal integral.
struct EliminationData {
  VectorXd WH;            // w_i H_i
  double HWH = 0.0;       // <H, H>_w
  Eigen::MatrixXd N;      // rows: w_i n_i^alpha (coupling rows only)
  Eigen::MatrixXd Q;      // int n (x) n e^w dmu over coupled directions
};

EliminationData elimination_data(const LocalGeometry& g) {
  EliminationData d;
  const VectorXd w = gauss_node_weights(g);
  d.WH = w.cwiseProduct(g.mean_curvature);
  d.HWH = g.mean_curvature.dot(d.WH);
  if (!g.axisymmetric) {
    d.N.resize(2, g.size());
    for (int i = 0; i < g.size(); ++i) {
      d.N(0, i) = w[i] * g.normal(i, 0);
      d.N(1, i) = w[i] * g.normal(i, 1);
    }
    d.Q = Eigen::MatrixXd::Zero(2, 2);
    for (int i = 0; i < g.size(); ++i) {
      const Vector2d n = g.normal.row(i).head<2>();
      d.Q += w[i] * n * n.transpose();
    }
  } else {
    d.N.resize(1, g.size());
    for (int i = 0; i < g.size(); ++i) d.N(0, i) = w[i] * g.normal(i, 2);
    d.Q = Eigen::MatrixXd::Zero(1, 1);
    for (int i = 0; i < g.size(); ++i)
      d.Q(0, 0) += w[i] * g.normal(i, 2) * g.normal(i, 2);
  }
  return d;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& Q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  const double cutoff = 1e-10 * std::max(es.eigenvalues().maxCoeff(), 0.0);
  Eigen::VectorXd inv = es.eigenvalues();
  for (int i = 0; i < inv.size(); ++i) inv[i] = (inv[i] > cutoff) ? 1.0 / inv[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

SpectrumReport spectrum(const LocalGeometry& g, int count, int azimuthal_mode) {
  OperatorOptions opt;
  opt.azimuthal_mode = azimuthal_mode;
  const WeightedOperator op = assemble_L(g, opt);
  const Spectrum s = eigen_lowest(op, count);
  SpectrumReport rep;
  rep.eigenvalues = s.eigenvalues;
  rep.eigenfunctions = s.eigenfunctions;
  rep.bc = op.bc;
  rep.azimuthal_mode = azimuthal_mode;
  return rep;
}

VectorXd metric_laplacian_spectrum(const LocalGeometry& g, int count) {
  OperatorOptions opt;
  opt.gaussian_weight = false;
  opt.include_A2 = false;
  opt.zeroth_shift_override = 0.0;
  const WeightedOperator op = assemble_L(g, opt);
  return eigen_lowest(op, count).eigenvalues;
}

EigenfunctionDefects verify_eigenfunctions(const LocalGeometry& g, double residual_tol) {
  require_shrinker(g, residual_tol, "verify_eigenfunctions");
  EigenfunctionDefects out;
  const WeightedOperator op = assemble_L(g, {});
  auto norm_w = [&](const VectorXd& v) { return std::sqrt(op.inner(v, v)); };
  const VectorXd H = g.mean_curvature;
  out.H_defect = norm_w(op.apply(H) - H) / norm_w(H);
  if (!g.axisymmetric) {
    for (int axis = 0; axis < 2; ++axis) {
      const VectorXd vn = g.normal.col(axis);
      out.translation_defects.push_back(norm_w(op.apply(vn) - 0.5 * vn) / norm_w(vn));
    }
  } else {
    OperatorOptions m1;
    m1.azimuthal_mode = 1;
    const WeightedOperator op1 = assemble_L(g, m1);
    const VectorXd nr = g.normal.col(0);
    const double transverse = norm_w(op1.apply(nr) - 0.5 * nr) / norm_w(nr);
    out.translation_defects.push_back(transverse);
    out.translation_defects.push_back(transverse);
    const VectorXd nz = g.normal.col(2);
    if (norm_w(nz) > 1e-12 * std::sqrt(op.node_weight.sum()))
      out.translation_defects.push_back(norm_w(op.apply(nz) - 0.5 * nz) / norm_w(nz));
    else
      out.translation_defects.push_back(0.0);  // <e_z, n> vanishes identically
  }
  return out;
}

double second_variation(const LocalGeometry& g, const VectorXd& f, double h,
                        const Vector3d& y, double residual_tol) {
  require_shrinker(g, residual_tol, "second_variation");
  if (f.size() != g.size()) fail(ErrorKind::InvalidArgument, "field size mismatch");
  const WeightedOperator op = assemble_L(g, {});
  const VectorXd w = gauss_node_weights(g);
  double acc = op.form(f);
  for (int i = 0; i < g.size(); ++i) {
    const double H = g.mean_curvature[i];
    double fyn, yn2;
    if (!g.axisymmetric) {
      const double yn = y.head<2>().dot(g.normal.row(i).head<2>());
      fyn = f[i] * yn;
      yn2 = yn * yn;
    } else {
      const double nr = g.normal(i, 0), nz = g.normal(i, 2);
      fyn = f[i] * y.z() * nz;
      yn2 = (y.x() * y.x() + y.y() * y.y()) * nr * nr / 2.0 + y.z() * y.z() * nz * nz;
    }
    acc += w[i] * (2.0 * f[i] * h * H - h * h * H * H + fyn - 0.5 * yn2);
  }
  return F_prefactor(g.dim) * acc;
}

double general_second_variation(const LocalGeometry& g, const Vector3d& x0, double t0,
                                const VectorXd& f, double h, const Vector3d& y,
                                const VectorXd& fp, double hp, const Vector3d& yp) {
  if (t0 <= 0) fail(ErrorKind::InvalidArgument, "t0 must be positive");
  if (f.size() != g.size() || fp.size() != g.size())
    fail(ErrorKind::InvalidArgument, "field size mismatch");
  if (g.axisymmetric && x0.head<2>().norm() > 1e-14)
    fail(ErrorKind::InvalidArgument, "profile variations need x0 on the symmetry axis");
  OperatorOptions opt;
  opt.center = x0;
  opt.t0 = t0;
  const WeightedOperator op = assemble_L(g, opt);
  const int n = g.dim;
  double acc = op.form(f);
  for (int i = 0; i < g.size(); ++i) {
    const double wt = op.node_weight[i];
    const double H = g.mean_curvature[i];
    double q, m2, A0, fyn, hxy, xyp, B2C2;
    if (!g.axisymmetric) {
      const Vector2d dx = g.position.row(i).head<2>().transpose() - x0.head<2>();
      const Vector2d nrm = g.normal.row(i).head<2>();
      q = dx.dot(nrm);
      m2 = dx.squaredNorm();
      const double xy = dx.dot(y.head<2>());
      A0 = f[i] * (H - q / (2 * t0)) + h * (m2 / (4 * t0 * t0) - n / (2.0 * t0)) +
           xy / (2 * t0);
      fyn = f[i] * y.head<2>().dot(nrm) / t0;
      hxy = -h * xy / (t0 * t0);
      xyp = dx.dot(yp.head<2>()) / (2 * t0);
      B2C2 = 0.0;
    } else {
      const double r = g.radius[i];
      const double dz = g.position(i, 2) - x0.z();
      const double nr = g.normal(i, 0), nz = g.normal(i, 2);
      q = r * nr + dz * nz;
      m2 = r * r + dz * dz;
      const double xy_axial = dz * y.z();
      A0 = f[i] * (H - q / (2 * t0)) + h * (m2 / (4 * t0 * t0) - n / (2.0 * t0)) +
           xy_axial / (2 * t0);
      const double B = r * y.x() / (2 * t0);
      const double C = r * y.y() / (2 * t0);
      B2C2 = B * B + C * C;
      fyn = f[i] * y.z() * nz / t0;
      hxy = -h * xy_axial / (t0 * t0);
      xyp = dz * yp.z() / (2 * t0);
    }
    double term = f[i] * h * q / (t0 * t0) - h * h * (m2 - n * t0) / (2 * t0 * t0 * t0);
    term += fyn - y.squaredNorm() / (2 * t0) + hxy;
    term += A0 * A0 + 0.5 * B2C2;
    term += fp[i] * (H - q / (2 * t0)) + hp * (m2 / (4 * t0 * t0) - n / (2.0 * t0)) + xyp;
    acc += wt * term;
  }
  return std::pow(4.0 * kPi * t0, -0.5 * n) * acc;
}

// ---------------------------------------------------------------------------
// Reduced stability form

ReducedForm reduced_stability_form(const LocalGeometry& g) {
  const WeightedOperator op = assemble_L(g, {});
  Eigen::MatrixXd A = op.dense_A();

  const EliminationData d = elimination_data(g);
  Eigen::MatrixXd M = A;
  if (d.HWH > 1e-16 * op.node_weight.sum())
    M += d.WH * d.WH.transpose() / d.HWH;
  const Eigen::MatrixXd Qinv = pseudo_inverse(d.Q);
  M += 0.5 * d.N.transpose() * Qinv * d.N;

  ReducedForm rf;
  rf.M = M;
  rf.W = op.node_weight;
  const VectorXd sqw = op.node_weight.cwiseSqrt();
  Eigen::MatrixXd Ms = sqw.cwiseInverse().asDiagonal() * M * sqw.cwiseInverse().asDiagonal();
  Ms = 0.5 * (Ms + Ms.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ms);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numeric, "reduced-form eigensolve failed");
  rf.min_eigenvalue = es.eigenvalues()[0];
  VectorXd f = es.eigenvectors().col(0).cwiseQuotient(sqw);
  f /= std::sqrt(f.dot(op.node_weight.cwiseProduct(f)));
  rf.minimizer = f;
  return rf;
}

// ---------------------------------------------------------------------------
// Stability verdicts

namespace {

struct OptimalHY {
  double h;
  Vector3d y;
};

OptimalHY optimal_h_y(const LocalGeometry& g, const VectorXd& f) {
  const EliminationData d = elimination_data(g);
  OptimalHY out{0.0, Vector3d::Zero()};
  if (d.HWH > 1e-16 * gauss_node_weights(g).sum()) out.h = d.WH.dot(f) / d.HWH;
  const Eigen::VectorXd b = d.N * f;
  const Eigen::VectorXd yred = pseudo_inverse(d.Q) * b;
  if (!g.axisymmetric) {
    out.y.head<2>() = yred;
  } else {
    out.y.z() = yred[0];
  }
  return out;
}

ClassificationNote classify(const LocalGeometry& g, double residual_tol) {
  require_shrinker(g, residual_tol, "classification");
  ClassificationNote note;
  note.h_min = g.mean_curvature.minCoeff();
  note.h_max = g.mean_curvature.maxCoeff();
  const double scale = std::max(std::abs(note.h_min), std::abs(note.h_max));
  const double flat_tol = 1e-6;
  if (scale < flat_tol) {
    note.verdict = (g.dim == 1) ? "line" : "plane";
    note.model_distance = 0.0;
    return note;
  }
  if (note.h_min > -1e-6 * scale) {
    // Mean convex: must match a sphere-line product.
    if (!g.axisymmetric) {
      double dist = 0.0;
      for (int i = 0; i < g.size(); ++i)
        dist = std::max(dist, std::abs(g.position.row(i).norm() - std::sqrt(2.0)));
      note.model_distance = dist;
      note.verdict = (dist < 0.05 * std::sqrt(2.0)) ? "circle" : "other";
    } else {
      double dist_sphere = 0.0, dist_cyl = 0.0;
      for (int i = 0; i < g.size(); ++i) {
        dist_sphere = std::max(dist_sphere, std::abs(g.position.row(i).norm() - 2.0));
        dist_cyl = std::max(dist_cyl, std::abs(g.radius[i] - std::sqrt(2.0)));
      }
      if (g.complete && dist_sphere < 0.1) {
        note.verdict = "sphere";
        note.model_distance = dist_sphere;
      } else if (!g.complete && dist_cyl < 0.05 * std::sqrt(2.0)) {
        note.verdict = "cylinder";
        note.model_distance = dist_cyl;
      } else {
        note.verdict = "other";
        note.model_distance = std::min(dist_sphere, dist_cyl);
      }
    }
    return note;
  }
  note.verdict = "H-sign-changing";
  note.mu1 = eigen_lowest(assemble_L(g, {}), 1).eigenvalues[0];
  return note;
}

StabilityReport stability_from_geometry(const LocalGeometry& g, double residual_tol) {
  require_shrinker(g, residual_tol, "f_stability_test");
  StabilityReport rep;

  const EigenfunctionDefects defects = verify_eigenfunctions(g, residual_tol);
  rep.H_eigen_defect = defects.H_defect;
  rep.translation_eigen_defects = defects.translation_defects;

  // Route (a): eliminate (h, y) in closed form, then minimize over f.
  const ReducedForm rf = reduced_stability_form(g);
  rep.reduced_min = rf.min_eigenvalue;
  const bool stable_a = rf.min_eigenvalue >= -1e-6;

  // Route (b): spectral shortcut.  mu1 < -1 certifies instability; otherwise
  // the shortcut is inconclusive (never a stability certificate).
  const Spectrum spec = eigen_lowest(assemble_L(g, {}), 1);
  rep.mu1 = spec.eigenvalues[0];
  rep.mu1_dirichlet = !g.complete;
  const bool fired_b = g.complete && rep.mu1 < -1.0 - 1e-3;

  rep.routes_consistent = !(fired_b && stable_a);
  rep.f_stable = stable_a && rep.routes_consistent;
  rep.f_stability_verdict = rep.f_stable ? "stable" : "unstable";

  if (!rep.f_stable) {
    StabilityWitness w;
    if (fired_b) {
      w.f = spec.eigenfunctions.col(0);
      w.kind = "lowest-eigenfunction";
    } else {
      w.f = rf.minimizer;
      w.kind = "reduced-minimizer";
    }
    const OptimalHY hy = optimal_h_y(g, w.f);
    w.best_h = hy.h;
    w.best_y = hy.y;
    w.second_variation = second_variation(g, w.f, w.best_h, w.best_y, residual_tol);
    rep.witness = w;
  }

  const ClassificationNote note = classify(g, residual_tol);
  rep.classification = note.verdict;
  const bool splits_line =
      note.verdict == "cylinder" || note.verdict == "plane" || note.verdict == "line";
  if (splits_line) {
    rep.entropy_stability_verdict =
        "not-derived (splits off a line; the F/entropy equivalence does not apply)";
  } else if (rep.f_stable) {
    rep.entropy_stability_verdict = "stable (via F-stability equivalence)";
  } else {
    rep.entropy_stability_verdict =
        "unstable (via F-instability equivalence, compactly supported witness)";
  }
  return rep;
}

}  // namespace

// Dense eigensolves cap the resolution; the verdict gate is the looser
// classification tolerance, so resampled inputs stay verified.
constexpr int kStabilityNodeCap = 1536;

StabilityReport f_stability_test(const DiscreteCurve& c) {
  const DiscreteCurve use = (c.size() > kStabilityNodeCap) ? resample(c, kStabilityNodeCap) : c;
  return stability_from_geometry(local_geometry(use), 1e-3);
}

StabilityReport f_stability_test(const ProfileSurface& p) {
  const ProfileSurface use = (p.size() > kStabilityNodeCap) ? resample(p, kStabilityNodeCap) : p;
  return stability_from_geometry(local_geometry(use), 1e-3);
}

StabilityReport f_stability_test(const RoundProduct& rp) {
  validate(rp);
  const int k = rp.sphere_dim;
  const int nn = rp.n();
  if (k == 0) {
    StabilityReport rep;
    rep.mu1 = -0.5;
    rep.reduced_min = 0.0;
    rep.f_stable = true;
    rep.f_stability_verdict = "stable";
    rep.classification = (nn == 1) ? "line" : "plane";
    rep.entropy_stability_verdict =
        "not-derived (splits off a line; the F/entropy equivalence does not apply)";
    rep.notes = "analytic hyperplane model";
    return rep;
  }
  const double want = std::sqrt(2.0 * k);
  if (std::abs(rp.radius - want) > 1e-8)
    fail(ErrorKind::InvalidArgument, "round product is not a shrinker (radius != sqrt(2k))");
  if (k == nn) {
    if (nn == 1) return f_stability_test(make_circle(want, 1024));
    if (nn == 2) return f_stability_test(make_sphere_profile(want, 1024));
    fail(ErrorKind::InvalidArgument, "discrete stability supports ambient dimension <= 3");
  }
  if (nn == 2 && k == 1) {
    // Truncated cylinder; the explicit witness is a cutoff times the axial
    // coordinate, which is odd, so the optimal (h, y) vanish.
    const ProfileSurface cyl = make_cylinder_profile(want, 12.0, 1024);
    const LocalGeometry g = local_geometry(cyl);
    StabilityReport rep = stability_from_geometry(g, 1e-3);
    StabilityWitness w;
    VectorXd f(g.size());
    for (int i = 0; i < g.size(); ++i) {
      const double z = g.position(i, 2);
      const double az = std::abs(z);
      double chi = 1.0;
      if (az > 10.0) chi = 0.0;
      else if (az > 6.0) {
        const double u = (az - 6.0) / 4.0;
        chi = 0.5 * (1.0 + std::cos(kPi * u));
      }
      f[i] = chi * z;
    }
    w.f = f;
    const OptimalHY hy = optimal_h_y(g, f);
    w.best_h = hy.h;
    w.best_y = hy.y;
    w.second_variation = second_variation(g, f, w.best_h, w.best_y, 1e-3);
    w.kind = "cutoff*x1";
    rep.witness = w;
    rep.f_stable = rep.f_stable && w.second_variation >= 0;
    rep.f_stability_verdict = rep.f_stable ? "stable" : "unstable";
    rep.classification = "cylinder";
    rep.entropy_stability_verdict =
        "not-derived (splits off a line; the F/entropy equivalence does not apply)";
    return rep;
  }
  fail(ErrorKind::InvalidArgument, "unsupported round product for discrete stability");
}

double dirichlet_mu1(const LocalGeometry& g, double R) {
  const WeightedOperator op = dirichlet_restriction(g, R, {});
  return eigen_lowest(op, 1).eigenvalues[0];
}

ClassificationNote classification_verdict(const LocalGeometry& g, double residual_tol) {
  return classify(g, residual_tol);
}

}  // namespace shl
