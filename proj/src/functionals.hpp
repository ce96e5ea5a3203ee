// Gaussian-weighted functionals: F_{x0,t0}, its (x0,t0) gradient, the entropy
// sup over centers and scales, closed forms for sphere-line products, volume
// growth checks, and monotone radial paths.
#pragma once

#include "geometry.hpp"

namespace shl {

struct FEvaluation {
  double value = 0.0;
  Vector3d x0 = Vector3d::Zero();  // padded with 0 for curves
  double t0 = 1.0;
  double truncation_radius = std::numeric_limits<double>::infinity();
  double tail_bound = 0.0;
  int n_nodes = 0;
  bool tail_flagged = false;  // tail_bound > 1e-8 * value
};

struct FGradient {
  Vector3d dx0 = Vector3d::Zero();
  double dt0 = 0.0;
};

struct EntropyIterate {
  Vector3d x0;
  double t0;
  double value;
};

struct EntropyResult {
  double lambda = 0.0;
  Vector3d x0 = Vector3d::Zero();
  double t0 = 1.0;
  int multistart_count = 0;
  int iterations = 0;  // iterations of the winning start
  bool converged = true;
  std::vector<EntropyIterate> optimizer_trace;  // winning start
};

struct EntropyOptions {
  int spatial_starts = 9;   // 3x3 grid over the bounding box
  int temporal_starts = 5;  // log-uniform over the t0 window
  double grad_tol = 1e-8;
  int max_iterations = 500;
  // t0 window as multiples of diam^2; from the decay of F for extreme scales.
  double t0_window_lo = 1e-3;
  double t0_window_hi = 10.0;
  bool record_trace = false;
  std::optional<EntropyIterate> warm_start;  // extra start, e.g. from a flow monitor
};

// Trapezoidal node quadrature of (4 pi t0)^{-n/2} exp(-|x-x0|^2/(4 t0)) dmu.
// Axisymmetric surfaces integrate the azimuth in closed form (scaled Bessel).
FEvaluation f_functional(const LocalGeometry& g, const Vector3d& x0, double t0);
FEvaluation f_functional(const RoundProduct& rp, const Vector3d& x0, double t0);

FGradient f_gradient(const LocalGeometry& g, const Vector3d& x0, double t0);

EntropyResult entropy(const LocalGeometry& g, const EntropyOptions& opt = {});
EntropyResult entropy(const RoundProduct& rp, const EntropyOptions& opt = {});

// Closed form for S^k x R^{n-k}; the flat directions each integrate to one.
FEvaluation product_reduce_f(const RoundProduct& rp, const Vector3d& x0, double t0);

struct VolumeGrowthWitness {
  Vector3d center;
  double radius;
  double volume;
  double bound;
};

struct VolumeGrowthReport {
  bool pass = true;
  double worst_ratio = 0.0;  // max volume / (V r^n)
  VolumeGrowthWitness worst;
};

VolumeGrowthReport volume_growth_check(const LocalGeometry& g, double V);

struct RadialPathReport {
  std::vector<double> s;
  std::vector<double> g_values;
  bool non_increasing = true;
  double worst_increase = 0.0;
};

// g(s) = F_{s y, 1 + a s^2}; on a verified shrinker this is non-increasing for
// s > 0.  Rejects inputs whose shrinker residual exceeds the tolerance.
RadialPathReport radial_path_monotonicity(const LocalGeometry& g, const Vector3d& y,
                                          double a, const std::vector<double>& s_grid,
                                          double residual_tol = 1e-4);

// Shrinker defect helpers shared across modules: H - <x,n>/2 per node.
VectorXd shrinker_defect(const LocalGeometry& g);
double shrinker_defect_linf(const LocalGeometry& g);
double shrinker_defect_weighted_l2(const LocalGeometry& g);

// Scaled modified Bessel functions exp(-x) I_nu(x) for the azimuthal closed
// forms; stable for large arguments.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

}  // namespace shl
