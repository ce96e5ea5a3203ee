// Discrete hypersurface models: closed plane curves, rotationally symmetric
// profiles, and analytic sphere-line products, together with their pointwise
// geometric data (normal, mean curvature, |A|^2, measure).
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shl {

using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

enum class ErrorKind { InvalidArgument, Numeric, Io, Verification };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

// ---------------------------------------------------------------------------
// Surface types

// Closed (or truncated open) polygonal curve in the plane, the one-dimensional
// hypersurface model.  Closed curves are stored counterclockwise so that the
// outward normal is the tangent rotated by -90 degrees.
struct DiscreteCurve {
  std::vector<Vector2d> pts;
  bool closed = true;
  bool immersed = false;  // allow self-intersections (multi-lobed shrinker curves)

  int size() const { return static_cast<int>(pts.size()); }
};

enum class ProfileTopology { SphereLike, TorusLike, CylinderLike };

// Meridian polygon (r, z) with r > 0 generating a surface of revolution about
// the z-axis.  Sphere-like profiles are sampled cell-centered: the first and
// last nodes sit half a step away from the poles, and the meridian continues
// through each pole by the reflection (r, z) -> (-r, z).
struct ProfileSurface {
  std::vector<Vector2d> rz;
  ProfileTopology topology = ProfileTopology::SphereLike;

  int size() const { return static_cast<int>(rz.size()); }
};

// Analytic S^k x R^{n-k} in R^{n+1}.  The sphere factor sits in the first k+1
// coordinates and is centered at the origin; sphere_dim == 0 means the
// hyperplane spanned by the first n coordinates.  radius need not equal
// sqrt(2k); non-shrinker inputs are representable.
struct RoundProduct {
  int ambient_dim = 3;  // n + 1
  int sphere_dim = 1;   // k
  double radius = 1.0;

  int n() const { return ambient_dim - 1; }
};

// ---------------------------------------------------------------------------
// Per-node geometry.  For profiles all per-node vectors live on the phi = 0
// meridian (y = 0), which is enough for every weighted scalar integrand;
// phi-dependent moments are handled by the axisymmetric integrators.
struct LocalGeometry {
  int dim = 1;      // intrinsic dimension n
  int ambient = 2;  // 2 for curves, 3 for profiles
  bool axisymmetric = false;
  bool periodic = true;
  bool complete = true;  // false for truncations (open curves, cylinder-like)

  Eigen::MatrixXd position;  // N x ambient
  Eigen::MatrixXd normal;    // N x ambient, unit outward
  Eigen::MatrixXd tangent;   // N x ambient, unit (meridian tangent for profiles)
  VectorXd mean_curvature;   // H = div n
  VectorXd second_fund2;     // |A|^2
  VectorXd arc_measure;      // ds per node along the curve / meridian
  VectorXd measure;          // d(mu): ds for curves, 2*pi*r*ds for profiles
  VectorXd radius;           // r per node (profiles only)
  // Principal values in the a_ii convention, so H = -(kappa_profile+kappa_rot).
  VectorXd kappa_profile;
  VectorXd kappa_rot;

  int size() const { return static_cast<int>(mean_curvature.size()); }
  double weighted_area() const;  // integral of exp(-|x|^2/4) d(mu)
  double area() const { return measure.sum(); }
  double gauss_weight(int i) const {
    return std::exp(-position.row(i).squaredNorm() / 4.0);
  }
};

struct RoundProductGeometry {
  double mean_curvature = 0.0;  // k / radius
  double second_fund2 = 0.0;    // k / radius^2
  double shrinker_radius = 0.0; // sqrt(2k)
  double weighted_volume_density = 0.0;  // F_{0,1}
};

// ---------------------------------------------------------------------------
// Constructors for the reference models

DiscreteCurve make_circle(double radius, int nodes, const Vector2d& center = {0, 0});
DiscreteCurve make_ellipse(double a, double b, int nodes);
// Open segment of the line through the origin with direction (cos t, sin t).
DiscreteCurve make_line_segment(double half_length, int nodes, double angle = 0.0);

ProfileSurface make_sphere_profile(double radius, int nodes, double center_z = 0.0);
ProfileSurface make_cylinder_profile(double radius, double half_length, int nodes);
// Two bells of radius bell_radius joined by a neck of radius neck_radius.
ProfileSurface make_dumbbell_profile(double bell_radius, double neck_radius,
                                     double neck_half_length, int nodes);
ProfileSurface make_torus_profile(double center_r, double tube_r, int nodes);

// ---------------------------------------------------------------------------
// Validation and geometry

void validate(const DiscreteCurve& c);
void validate(const ProfileSurface& p);
void validate(const RoundProduct& rp);

LocalGeometry local_geometry(const DiscreteCurve& c);
LocalGeometry local_geometry(const ProfileSurface& p);
RoundProductGeometry round_product_geometry(const RoundProduct& rp);

bool is_simple_polygon(const std::vector<Vector2d>& pts, bool closed);

// ---------------------------------------------------------------------------
// Perturbations and transforms

// x + amplitude * f * n.  Rejects graphs with |amplitude*f|*max|A| >= 0.5.
DiscreteCurve normal_graph(const DiscreteCurve& c, const VectorXd& f,
                           double amplitude, bool resample = true);
ProfileSurface normal_graph(const ProfileSurface& p, const VectorXd& f,
                            double amplitude, bool resample = true);

// H' = -Lap f - |A|^2 f and n' = -grad f for the normal graph family.
struct GraphLinearization {
  VectorXd dH;
  Eigen::MatrixXd dn;  // N x ambient
};
GraphLinearization linearized_H_and_normal(const DiscreteCurve& c, const VectorXd& f);
GraphLinearization linearized_H_and_normal(const ProfileSurface& p, const VectorXd& f);

DiscreteCurve dilate(const DiscreteCurve& c, double alpha);
DiscreteCurve translate(const DiscreteCurve& c, const Vector2d& v);
ProfileSurface dilate(const ProfileSurface& p, double alpha);
// Translations of profiles must preserve the symmetry axis: v = (0, 0, dz).
ProfileSurface translate(const ProfileSurface& p, double dz);

// Quasi-uniform arclength resampling (Catmull-Rom through the nodes).
DiscreteCurve resample(const DiscreteCurve& c, int nodes);
ProfileSurface resample(const ProfileSurface& p, int nodes);

double max_adjacent_edge_ratio(const std::vector<Vector2d>& pts, bool closed);

// Hausdorff distance between polygonal curves (meridians for profiles).
double hausdorff_distance(const std::vector<Vector2d>& a, const std::vector<Vector2d>& b,
                          bool a_closed = true, bool b_closed = true);
// One-sided: max over pts of the distance to the polyline.
double max_distance_to_polyline(const std::vector<Vector2d>& pts,
                                const std::vector<Vector2d>& poly, bool poly_closed);
double hausdorff_distance(const DiscreteCurve& a, const DiscreteCurve& b);
double hausdorff_distance(const ProfileSurface& a, const ProfileSurface& b);

// Diameter of the node set.
double diameter(const LocalGeometry& g);

}  // namespace shl
