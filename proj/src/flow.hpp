// Mean curvature flow and rescaled flow on curves and profiles: semi-implicit
// stepping, monitored traces, singularity detection, tangent-candidate
// extraction, and the piecewise flow with entropy-decreasing replacements.
#pragma once

#include <variant>

#include "functionals.hpp"
#include "geometry.hpp"

namespace shl {

using AnySurface = std::variant<DiscreteCurve, ProfileSurface>;

LocalGeometry local_geometry(const AnySurface& s);

struct FlowConfig {
  double dt_max = 2e-4;
  double dt_cap = 0.02;          // dt <= dt_cap / max|A|^2
  double time_budget = 10.0;
  double area_extinction_frac = 1e-4;
  double max_A_cap_factor = 1e3; // singularity at max|A| > factor / initial diameter
  int sample_stride = 50;
  bool monitor_entropy = false;
  bool rescaled = false;         // rescaled flow about (0, 0)
  double resample_ratio = 1.5;
  std::vector<std::pair<Vector3d, double>> f_probes;  // (x0, anchor time T > end)
  bool store_surfaces = true;
};

enum class FlowTermination { TimeBudget, Extinction, Singularity, EmbeddingLost };

struct FlowSample {
  double t = 0.0;
  double area = 0.0;
  double max_abs_A = 0.0;
  double entropy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> f_probe_values;  // F_{x0, T - t}(M_t) per probe
  std::optional<AnySurface> surface;
};

struct JumpRecord {
  double time = 0.0;
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  double drop = 0.0;
  double area_before = 0.0;
  double area_after = 0.0;
  double dilation = 1.0;  // area-matching factor applied after the graph
  std::string note;
  std::optional<AnySurface> before;
  std::optional<AnySurface> replacement;
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  std::vector<JumpRecord> jumps;
  FlowTermination termination = FlowTermination::TimeBudget;
  double end_time = 0.0;
  std::optional<double> t_sing;
  std::optional<Vector3d> x_sing;
  std::string verdict;  // filled by the piecewise driver
  std::string message;
};

// One semi-implicit step: implicit in the arclength Laplacian of the position,
// explicit in the rotational curvature term.  Resampling is the caller's job.
DiscreteCurve mcf_step(const DiscreteCurve& c, double dt, bool rescaled = false);
ProfileSurface mcf_step(const ProfileSurface& p, double dt, bool rescaled = false);
AnySurface mcf_step(const AnySurface& s, double dt, bool rescaled = false);

FlowTrace run_flow(const AnySurface& initial, const FlowConfig& cfg);

struct TangentCandidate {
  std::vector<double> scales;                   // s_j = t_sing - t_j
  std::vector<std::string> classifications;     // per scale
  std::vector<double> distances;                // model distance per scale
  std::string classification;                   // at the finest scale
  bool scales_disagree = false;
  double rescaled_diameter = 0.0;               // diam / sqrt(s) at finest scale
  bool diameter_bounded = true;
  std::optional<AnySurface> finest;             // rescaled candidate
};

TangentCandidate extract_tangent(const FlowTrace& trace, const Vector3d& x_sing,
                                 double t_sing, int max_scales = 4);

// Classification of a candidate shrinker against the model library.
struct ModelFit {
  std::string label;  // circle | line | sphere | cylinder | other
  double distance = std::numeric_limits<double>::infinity();
};
ModelFit fit_model(const AnySurface& candidate);

struct GenericFlowConfig {
  FlowConfig flow;
  double entropy_drop = 1e-3;    // certified per-jump drop epsilon
  double proximity_tol = 0.02;   // weighted-L2 residual gate for "near a shrinker slice"
  int max_jumps = 3;
  double witness_amplitude = 0.25;  // line-search start, scaled by 1/max|A|
};

FlowTrace generic_piecewise_flow(const AnySurface& initial, const GenericFlowConfig& cfg);

struct MonotonicityReport {
  struct Probe {
    Vector3d x0;
    double anchor;                // Gaussian centered at (x0, anchor) in time
    std::vector<double> values;   // one per sample, non-increasing up to tol
    double worst_increase = 0.0;
  };
  std::vector<Probe> probes;
  bool pass = true;
};

// Gaussian density sequence along a stored trace; constant exactly on
// self-shrinking flows and non-increasing otherwise.
MonotonicityReport density_trace(const FlowTrace& trace, const Vector3d& x0, double t0,
                                 double step_tol = 1e-6);
MonotonicityReport monotonicity_audit(const FlowTrace& trace,
                                      const std::vector<std::pair<Vector3d, double>>& probes,
                                      double step_tol = 1e-6);

}  // namespace shl
