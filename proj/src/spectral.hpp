// Spectra of the stability operator, the eigenfunction identities for H and
// the translations, second variation forms, and the F-/entropy-stability
// classification with certified witnesses.
#pragma once

#include "functionals.hpp"
#include "geometry.hpp"
#include "operators.hpp"

namespace shl {

struct SpectrumReport {
  VectorXd eigenvalues;           // mu_1 <= mu_2 <= ...   (L u = -mu u)
  Eigen::MatrixXd eigenfunctions; // columns, weighted-orthonormal
  BoundaryCondition bc = BoundaryCondition::Periodic;
  int azimuthal_mode = 0;
};

SpectrumReport spectrum(const LocalGeometry& g, int count, int azimuthal_mode = 0);

// Axisymmetric spectrum of the plain Laplace-Beltrami operator (no weight, no
// zeroth term), eigenvalues in the -Lap u = mu u >= 0 convention.
VectorXd metric_laplacian_spectrum(const LocalGeometry& g, int count);

struct EigenfunctionDefects {
  double H_defect = 0.0;                    // ||L H - H||_w / ||H||_w
  std::vector<double> translation_defects;  // ||L <v,n> - <v,n>/2||_w / ||<v,n>||_w
};

// Residual-gated check of L H = H and L <v,n> = <v,n>/2 over the ambient basis.
EigenfunctionDefects verify_eigenfunctions(const LocalGeometry& g,
                                           double residual_tol = 1e-3);

// Second variation of F_{0,1} at a shrinker along (normal graph f, x_s = s y,
// t_s = 1 + s h).  f must be axisymmetric for profiles.
double second_variation(const LocalGeometry& g, const VectorXd& f, double h,
                        const Vector3d& y, double residual_tol = 1e-3);

// Full second variation at arbitrary (x0, t0) with second-order path data
// (f', h', y').  Profiles require x0 on the symmetry axis.
double general_second_variation(const LocalGeometry& g, const Vector3d& x0, double t0,
                                const VectorXd& f, double h, const Vector3d& y,
                                const VectorXd& fp, double hp, const Vector3d& yp);

struct StabilityWitness {
  VectorXd f;
  double best_h = 0.0;
  Vector3d best_y = Vector3d::Zero();
  double second_variation = 0.0;  // F'' at (f, best_h, best_y); negative certifies
  std::string kind;               // "reduced-minimizer" | "lowest-eigenfunction" | "cutoff*x1"
};

struct StabilityReport {
  double mu1 = 0.0;
  bool mu1_dirichlet = false;  // true when mu1 comes from a Dirichlet truncation
  double H_eigen_defect = 0.0;
  std::vector<double> translation_eigen_defects;
  double reduced_min = 0.0;    // min of sup_{h,y} F'' over unit-weighted-norm f
  bool f_stable = false;
  std::string f_stability_verdict;        // "stable" | "unstable"
  std::optional<StabilityWitness> witness;
  std::string entropy_stability_verdict;  // derived via the equivalence, labeled
  std::string classification;             // sphere/cylinder/plane/circle/line/other
  bool routes_consistent = true;
  std::string notes;
};

// Two concordant routes: (a) closed-form elimination of (h, y) followed by a
// minimization over discrete f; (b) the mu1 < -1 spectral shortcut.  Both must
// agree or the report is flagged inconsistent.
StabilityReport f_stability_test(const DiscreteCurve& c);
StabilityReport f_stability_test(const ProfileSurface& p);
StabilityReport f_stability_test(const RoundProduct& rp);

// Lowest Dirichlet eigenvalue of L on B_R intersected with the surface.
double dirichlet_mu1(const LocalGeometry& g, double R);

struct ClassificationNote {
  std::string verdict;        // "sphere" | "cylinder" | "plane" | "circle" | "line" | "H-sign-changing"
  double model_distance = std::numeric_limits<double>::infinity();
  double h_min = 0.0, h_max = 0.0;
  std::optional<double> mu1;  // filled for the sign-changing branch
};

ClassificationNote classification_verdict(const LocalGeometry& g,
                                          double residual_tol = 1e-3);

// Reduced stability form pieces shared with tests: G(f) = sup_{h,y} F'' for
// unit prefactor, as a matrix pencil (M, W).
struct ReducedForm {
  Eigen::MatrixXd M;
  VectorXd W;
  double min_eigenvalue = 0.0;
  VectorXd minimizer;
};
ReducedForm reduced_stability_form(const LocalGeometry& g);

}  // namespace shl
