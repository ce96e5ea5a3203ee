// Self-shrinker machinery: the defect H - <x,n>/2, arclength integration of
// shrinking curves with their conserved quantity, shooting for the rotationally
// symmetric torus, weighted integral identities, and consistency of verified
// shrinkers with the self-similar flow.
#pragma once

#include "flow.hpp"
#include "geometry.hpp"

namespace shl {

struct ShrinkerResidual {
  VectorXd per_node;     // H - <x,n>/2
  double max_abs = 0.0;
  double weighted_l2 = 0.0;  // normalized by the weighted area
};

ShrinkerResidual residual(const LocalGeometry& g);

// Acceptance gate used before identity checks and stability runs.
struct ShrinkerTolerance {
  double weighted_l2 = 1e-5;
  double max_abs = 1e-4;
};
bool is_verified_shrinker(const LocalGeometry& g, const ShrinkerTolerance& tol = {});

// ---------------------------------------------------------------------------
// Shrinking-curve ODE: x' = T(theta), theta' = H, 2 H' = H <x, T>.  The
// quantity E = H^2 exp(-|x|^2/2) is conserved along solutions; E = 0 is the
// straight-line branch and E > 0 orbits stay bounded.
struct CurveOrbit {
  std::vector<Vector2d> points;
  std::vector<double> H;
  double E0 = 0.0;
  double E_drift = 0.0;          // max |E - E0| / E0
  double closure_defect = std::numeric_limits<double>::infinity();
  double closure_arclength = 0.0;
  double max_radius = 0.0;
  std::string classification;    // "closed" | "non-closing" | "escaped"
};

struct CurveOrbitConfig {
  double step = 1e-3;
  double max_arclength = 200.0;
  double escape_radius = 50.0;
  double closure_tol = 1e-8;
};

// Start at (r0, 0) with vertical tangent and curvature H0 (the shrinker value
// is r0/2; other values probe nearby non-shrinker orbits).
CurveOrbit shrinker_curve_ode(double r0, double H0, const CurveOrbitConfig& cfg = {});

// ---------------------------------------------------------------------------
// Rotationally symmetric shrinker shooting.  The meridian satisfies
// psi' = (r sin psi - z cos psi)/2 - sin(psi)/r with tangent angle psi.

struct ShootingResult {
  ProfileSurface profile;
  double parameter = 0.0;        // shooting start (r on the z = 0 plane)
  double closure_defect = 0.0;   // cos(psi) at the symmetry-plane return
  double residual_max = 0.0;
  double residual_l2 = 0.0;
  double min_r = 0.0, max_r = 0.0;
  int bisection_steps = 0;
};

struct TorusSolveConfig {
  double window_lo = 0.2;
  double window_hi = 1.3;
  double bisection_tol = 1e-12;
  double ode_step = 1e-3;
  int profile_nodes = 4096;
  bool shoot_from_outer = false;  // start at the outer equator instead
};

// Closed torus-like profile crossing the symmetry plane perpendicular at both
// equators; bisection on the inner (or outer) crossing radius.
ShootingResult solve_angenent_torus(const TorusSolveConfig& cfg = {});

// Integrate the sphere-like meridian from a pole at (0, z0) until it returns
// to the axis; sanity companion for the torus shooting.
ShootingResult shoot_sphere_profile(double z0, double ode_step = 1e-3, int nodes = 512);

// ---------------------------------------------------------------------------
// Weighted integral identities at shrinkers, each defect normalized by the
// weighted area.
struct IdentityReport {
  double radial = 0.0;       // int (|x|^2 - 2n) e^w
  double mass_first = 0.0;   // |int x e^w|
  double mass_third = 0.0;   // |int x |x|^2 e^w|
  double quartic = 0.0;      // int (|x|^4 - 2n(2n+4) + 16 H^2) e^w
  double direction_max = 0.0;  // max_w |int <x,w>^2 - 2 |w^T|^2 e^w| over the basis
  double variance = 0.0;     // int ((|x|^2/4 - n/2)^2 - n/2 + H^2) e^w
  double worst() const;
};

IdentityReport identity_suite(const LocalGeometry& g, const ShrinkerTolerance& tol = {});

// ---------------------------------------------------------------------------
// Self-similar flow consistency: evolve a verified shrinker by MCF over
// [-1, t_end] and compare against sqrt(-t) * Sigma.
struct FlowConsistencyReport {
  bool pass = true;
  double max_hausdorff = 0.0;     // against sqrt(-t) * Sigma
  double max_radius_law_error = 0.0;  // |H + <x,n>/(2t)| max over checked slices
};

FlowConsistencyReport self_shrinking_flow_consistency(const AnySurface& s, double t_end = -0.8,
                                                      double dt = 1e-4, double tol = 1e-3);

// ---------------------------------------------------------------------------
struct MinimalConeVerdict {
  bool is_cone = false;
  bool hyperplane_expected = false;
  double dilation_defect = 0.0;
  double distance_to_origin = 0.0;
};

// For surfaces with H ~ 0 and vanishing shrinker defect: checks dilation
// invariance and flags the smooth-through-zero (hyperplane) case.
MinimalConeVerdict minimal_cone_check(const DiscreteCurve& c, double tol = 1e-6);

}  // namespace shl
