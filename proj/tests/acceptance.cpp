// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion.  Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "flow.hpp"
#include "functionals.hpp"
#include "geometry.hpp"
#include "operators.hpp"
#include "shrinker.hpp"
#include "spectral.hpp"

using namespace shl;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
const double kCircleDensity = std::sqrt(2.0 * kPi / std::exp(1.0));
const double kSphereDensity = 4.0 / std::exp(1.0);

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title)
      : number_(number), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      failed_ = true;
      details_ += (details_.empty() ? "" : "; ") + what;
    }
  }
  template <typename T>
  void expect_le(T value, T bound, const std::string& what) {
    if (!(value <= bound)) {
      failed_ = true;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s (%.3e > %.3e)", what.c_str(), (double)value,
                    (double)bound);
      details_ += (details_.empty() ? "" : "; ") + std::string(buf);
    }
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n", failed_ ? "FAIL" : "PASS",
                number_, title_.c_str(), secs, details_.empty() ? "" : " -- ",
                details_.c_str());
    std::fflush(stdout);
    if (failed_) ++g_failures;
  }

 private:
  int number_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  bool failed_ = false;
  std::string details_;
};

ShootingResult solve_torus(int nodes) {
  TorusSolveConfig cfg;
  cfg.profile_nodes = nodes;
  return solve_angenent_torus(cfg);
}

}  // namespace

int main() {
  std::printf("shrinkerlab acceptance suite\n");

  {  // 1 -------------------------------------------------------------------
    Criterion c(1, "Gaussian density golden values (plane 1, sphere 4/e, cylinder sqrt(2pi/e))");
    c.expect(product_reduce_f({2, 0, 0.0}, Vector3d::Zero(), 1.0).value == 1.0,
             "closed-form plane density != 1");
    const double line_quad =
        f_functional(local_geometry(make_line_segment(13.0, 1024)), Vector3d::Zero(), 1.0)
            .value;
    c.expect_le(std::abs(line_quad - 1.0), 1e-8, "line quadrature");
    const double sphere =
        f_functional(local_geometry(make_sphere_profile(2.0, 512)), Vector3d::Zero(), 1.0)
            .value;
    c.expect_le(std::abs(sphere - kSphereDensity), 1e-4, "sphere density");
    const double circle =
        f_functional(local_geometry(make_circle(kSqrt2, 512)), Vector3d::Zero(), 1.0).value;
    c.expect_le(std::abs(circle - kCircleDensity), 1e-4, "circle density");
    const double cyl = product_reduce_f({3, 1, kSqrt2}, Vector3d::Zero(), 1.0).value;
    c.expect_le(std::abs(cyl - kCircleDensity), 1e-12, "cylinder closed form");
  }

  {  // 2 -------------------------------------------------------------------
    Criterion c(2, "criticality of the shrinkers and the entropy argmax at (0,1)");
    for (const auto& [name, g] :
         std::vector<std::pair<std::string, LocalGeometry>>{
             {"circle", local_geometry(make_circle(kSqrt2, 512))},
             {"sphere", local_geometry(make_sphere_profile(2.0, 512))}}) {
      const FGradient grad = f_gradient(g, Vector3d::Zero(), 1.0);
      c.expect_le(std::hypot(grad.dx0.norm(), grad.dt0), 1e-6, name + " gradient at (0,1)");
      const EntropyResult er = entropy(g);
      c.expect_le(er.x0.norm(), 1e-4, name + " entropy argmax x0");
      c.expect_le(std::abs(er.t0 - 1.0), 1e-4, name + " entropy argmax t0");
    }
  }

  {  // 3 -------------------------------------------------------------------
    Criterion c(3, "weighted integral identities on the shrinker library");
    c.expect_le(identity_suite(local_geometry(make_circle(kSqrt2, 512))).worst(), 1e-6,
                "circle identities");
    const double sph2048 =
        identity_suite(local_geometry(make_sphere_profile(2.0, 2048))).worst();
    c.expect_le(sph2048, 1e-6, "sphere identities");
    c.expect_le(identity_suite(local_geometry(make_cylinder_profile(kSqrt2, 13.0, 2048)))
                    .worst(),
                1e-6, "cylinder identities");
    const ShootingResult torus = solve_torus(4096);
    const double tor = identity_suite(local_geometry(torus.profile)).worst();
    c.expect_le(tor, 1e-4, "torus identities");
    // defects at least halve under mesh doubling
    const double sph1024 =
        identity_suite(local_geometry(make_sphere_profile(2.0, 1024))).worst();
    c.expect(sph1024 / sph2048 >= 2.0, "sphere identity defects fail to halve");
    const double tor2048 =
        identity_suite(local_geometry(solve_torus(2048).profile), {1e-4, 1e-3}).worst();
    c.expect(tor2048 / tor >= 2.0, "torus identity defects fail to halve");
  }

  {  // 4 -------------------------------------------------------------------
    Criterion c(4, "circle spectrum vs Fourier oracle; LH = H and L<v,n> = <v,n>/2");
    const SpectrumReport rep = spectrum(local_geometry(make_circle(kSqrt2, 512)), 5);
    const double oracle[] = {-1.0, -0.5, -0.5, 1.0, 1.0};  // mu_m = m^2/2 - 1
    for (int i = 0; i < 5; ++i)
      c.expect_le(std::abs(rep.eigenvalues[i] - oracle[i]), 1e-3,
                  "circle eigenvalue " + std::to_string(i + 1));
    struct Member {
      std::string name;
      LocalGeometry g;
    };
    const ShootingResult torus = solve_torus(4096);
    for (const auto& m : std::vector<Member>{
             {"circle", local_geometry(make_circle(kSqrt2, 512))},
             {"sphere", local_geometry(make_sphere_profile(2.0, 1024))},
             {"cylinder", local_geometry(make_cylinder_profile(kSqrt2, 13.0, 1024))},
             {"torus", local_geometry(torus.profile)}}) {
      const EigenfunctionDefects d = verify_eigenfunctions(m.g);
      c.expect_le(d.H_defect, 1e-4, m.name + " |LH-H|");
      double tmax = 0.0;
      for (double v : d.translation_defects) tmax = std::max(tmax, v);
      c.expect_le(tmax, 1e-4, m.name + " |L<v,n>-<v,n>/2|");
    }
  }

  {  // 5 -------------------------------------------------------------------
    Criterion c(5, "sphere Laplacian law mu_k = (k^2+(n-1)k)/(2n) for k <= 3");
    const VectorXd mu = metric_laplacian_spectrum(local_geometry(make_sphere_profile(2.0, 512)), 4);
    for (int k = 0; k <= 3; ++k)
      c.expect_le(std::abs(mu[k] - (k * k + k) / 4.0), 1e-3,
                  "sphere Laplacian k=" + std::to_string(k));
  }

  {  // 6 -------------------------------------------------------------------
    Criterion c(6, "stability verdicts: sphere stable; torus and cylinder unstable");
    const StabilityReport sphere = f_stability_test(make_sphere_profile(2.0, 512));
    c.expect(sphere.f_stable && sphere.routes_consistent, "sphere not F-stable");
    const ShootingResult torus = solve_torus(4096);
    const StabilityReport trep = f_stability_test(torus.profile);
    c.expect(!trep.f_stable, "torus not flagged unstable");
    c.expect(trep.mu1 < -1.0, "torus mu1 not below -1");
    c.expect(trep.routes_consistent, "torus stability routes disagree");
    c.expect(trep.witness && trep.witness->second_variation < 0.0,
             "torus witness not certified (F'' < 0 at optimal h, y)");
    const StabilityReport cyl = f_stability_test(RoundProduct{3, 1, kSqrt2});
    c.expect(!cyl.f_stable, "cylinder not flagged unstable");
    c.expect(cyl.witness && cyl.witness->kind == "cutoff*x1" &&
                 cyl.witness->second_variation < 0.0,
             "cylinder cutoff*x1 witness not certified");
    c.expect(cyl.routes_consistent, "cylinder stability routes disagree");
  }

  {  // 7 -------------------------------------------------------------------
    Criterion c(7, "mu1 <= -1/2 on the library; Dirichlet sweep approaches -1");
    const ShootingResult torus = solve_torus(1024);
    for (const auto& [name, g] : std::vector<std::pair<std::string, LocalGeometry>>{
             {"circle", local_geometry(make_circle(kSqrt2, 512))},
             {"sphere", local_geometry(make_sphere_profile(2.0, 512))},
             {"cylinder", local_geometry(make_cylinder_profile(kSqrt2, 13.0, 512))},
             {"line", local_geometry(make_line_segment(13.0, 512))},
             {"torus", local_geometry(torus.profile)}}) {
      c.expect_le(spectrum(g, 1).eigenvalues[0], -0.5 + 1e-3, name + " mu1 bound");
    }
    const LocalGeometry cyl = local_geometry(make_cylinder_profile(kSqrt2, 12.0, 1024));
    const double m3 = dirichlet_mu1(cyl, 3.0);
    const double m5 = dirichlet_mu1(cyl, 5.0);
    const double m8 = dirichlet_mu1(cyl, 8.0);
    c.expect(m3 > m5 && m5 > m8, "Dirichlet sweep not decreasing in R");
    c.expect_le(std::abs(m8 + 1.0), 0.05, "Dirichlet mu1 at R=8 vs -1");
  }

  {  // 8 -------------------------------------------------------------------
    Criterion c(8, "second variation matches second differences of F (20 random paths)");
    std::mt19937 rng(20260809);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double s = 1e-3;
    int checked = 0;
    {
      const int n = 256;
      const DiscreteCurve curve = make_circle(kSqrt2, n);
      const LocalGeometry g = local_geometry(curve);
      for (int trial = 0; trial < 10; ++trial) {
        VectorXd f = VectorXd::Zero(n);
        for (int m = 0; m <= 3; ++m) {
          const double a = uni(rng), b = uni(rng);
          for (int i = 0; i < n; ++i) {
            const double th = 2.0 * kPi * i / n;
            f[i] += a * std::cos(m * th) + b * std::sin(m * th);
          }
        }
        f /= std::max(f.cwiseAbs().maxCoeff(), 1.0);
        const double h = uni(rng);
        const Vector3d y(uni(rng), uni(rng), 0.0);
        const double formula = second_variation(g, f, h, y);
        auto F_at = [&](double ss) {
          return f_functional(local_geometry(normal_graph(curve, f, ss, false)), ss * y,
                              1.0 + ss * h)
              .value;
        };
        const double fd = (F_at(s) - 2 * F_at(0) + F_at(-s)) / (s * s);
        c.expect_le(std::abs(fd - formula) / std::max(std::abs(formula), 1e-2), 1e-2,
                    "circle variation " + std::to_string(trial));
        ++checked;
      }
    }
    {
      const int n = 256;
      const ProfileSurface prof = make_sphere_profile(2.0, n);
      const LocalGeometry g = local_geometry(prof);
      for (int trial = 0; trial < 10; ++trial) {
        VectorXd f(n);
        const double a = uni(rng), b = uni(rng), c0 = uni(rng);
        for (int i = 0; i < n; ++i) {
          const double z = g.position(i, 2) / 2.0;
          f[i] = c0 + a * z + b * (1.5 * z * z - 0.5);
        }
        f /= std::max(f.cwiseAbs().maxCoeff(), 1.0);
        const double h = uni(rng);
        const Vector3d y(0.0, 0.0, uni(rng));
        const double formula = second_variation(g, f, h, y);
        auto F_at = [&](double ss) {
          return f_functional(local_geometry(normal_graph(prof, f, ss, false)), ss * y,
                              1.0 + ss * h)
              .value;
        };
        const double fd = (F_at(s) - 2 * F_at(0) + F_at(-s)) / (s * s);
        c.expect_le(std::abs(fd - formula) / std::max(std::abs(formula), 1e-2), 1e-2,
                    "sphere variation " + std::to_string(trial));
        ++checked;
      }
    }
    c.expect(checked == 20, "fewer than 20 variations checked");
    // appendix linearizations: H' = -Lap f - |A|^2 f and n' = -grad f at first order
    const int n = 512;
    const DiscreteCurve curve = make_circle(kSqrt2, n);
    const LocalGeometry g = local_geometry(curve);
    VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = std::cos(2.0 * kPi * i / n);
    const GraphLinearization lin = linearized_H_and_normal(curve, f);
    auto fd_err = [&](double ss) {
      const LocalGeometry gs = local_geometry(normal_graph(curve, f, ss, false));
      double worst = 0.0;
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, std::abs((gs.mean_curvature[i] - g.mean_curvature[i]) / ss -
                                         lin.dH[i]));
      return worst;
    };
    const double r = fd_err(1e-3) / fd_err(1e-4);
    c.expect(r > 4.0 && r < 25.0, "linearization error not first order in s");
  }

  {  // 9 -------------------------------------------------------------------
    Criterion c(9, "flow laws, density monotonicity, and the round point");
    {
      FlowConfig cfg;
      cfg.dt_max = 1e-4;
      cfg.time_budget = 0.4;
      cfg.sample_stride = 200;
      const FlowTrace tr = run_flow(AnySurface(make_circle(1.0, 256)), cfg);
      double worst = 0.0;
      for (const auto& smp : tr.samples) {
        if (!smp.surface) continue;
        const LocalGeometry g = local_geometry(*smp.surface);
        double R = 0.0;
        for (int i = 0; i < g.size(); ++i) R += g.position.row(i).norm();
        R /= g.size();
        const double want = std::sqrt(1.0 - 2.0 * smp.t);
        worst = std::max(worst, std::abs(R - want) / want);
      }
      c.expect_le(worst, 1e-3, "circle radius law");
    }
    {
      FlowConfig cfg;
      cfg.dt_max = 1e-4;
      cfg.time_budget = 0.4;
      cfg.sample_stride = 200;
      const FlowTrace tr = run_flow(AnySurface(make_sphere_profile(2.0, 256)), cfg);
      double worst = 0.0;
      for (const auto& smp : tr.samples) {
        if (!smp.surface) continue;
        const LocalGeometry g = local_geometry(*smp.surface);
        double R = 0.0;
        for (int i = 0; i < g.size(); ++i) R += g.position.row(i).norm();
        R /= g.size();
        const double want = std::sqrt(4.0 - 4.0 * smp.t);
        worst = std::max(worst, std::abs(R - want) / want);
      }
      c.expect_le(worst, 1e-3, "sphere radius law");
    }
    {
      FlowConfig cfg;
      cfg.dt_max = 2e-4;
      cfg.time_budget = 0.6;
      cfg.sample_stride = 100;
      const FlowTrace tr = run_flow(AnySurface(make_ellipse(1.3, 0.9, 256)), cfg);
      const std::vector<std::pair<Vector3d, double>> probes = {
          {{0.0, 0.0, 0.0}, 1.0},  {{0.3, 0.2, 0.0}, 0.9}, {{-0.4, 0.1, 0.0}, 1.5},
          {{0.0, -0.5, 0.0}, 2.0}, {{0.2, 0.0, 0.0}, 0.8}};
      c.expect(monotonicity_audit(tr, probes, 1e-6).pass,
               "density not monotone along the ellipse flow");
    }
    {
      FlowTrace similar;  // self-similar circle flow: density constant
      for (int k = 0; k <= 16; ++k) {
        const double t = -1.0 + 0.8 * k / 16.0;
        FlowSample smp;
        smp.t = t;
        smp.surface = AnySurface(dilate(make_circle(kSqrt2, 256), std::sqrt(-t)));
        similar.samples.push_back(std::move(smp));
      }
      const MonotonicityReport rep = density_trace(similar, Vector3d::Zero(), 0.0, 1e-6);
      double lo = 1e300, hi = -1e300;
      for (double v : rep.probes[0].values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      c.expect_le(hi - lo, 1e-4, "self-similar density not constant");
    }
    {
      FlowConfig cfg;
      cfg.rescaled = true;
      cfg.dt_max = 2e-4;
      cfg.time_budget = 10.0;
      cfg.sample_stride = 100;
      const FlowTrace tr =
          run_flow(AnySurface(make_ellipse(1.2 * kSqrt2, 0.8 * kSqrt2, 256)), cfg);
      double best = 1e300;
      for (const auto& smp : tr.samples) {
        if (!smp.surface) continue;
        const auto& curve = std::get<DiscreteCurve>(*smp.surface);
        double length = 0.0, area = 0.0;
        const int n = curve.size();
        for (int i = 0; i < n; ++i) {
          const Vector2d a = curve.pts[i], b = curve.pts[(i + 1) % n];
          length += (b - a).norm();
          area += 0.5 * (a.x() * b.y() - b.x() * a.y());
        }
        best = std::min(best, length * length / (4.0 * kPi * std::abs(area)));
      }
      c.expect_le(std::abs(best - 1.0), 1e-3, "round-point isoperimetric ratio");
    }
  }

  {  // 10 ------------------------------------------------------------------
    Criterion c(10, "generic piecewise flow: dumbbell tangent and torus replacement");
    {
      GenericFlowConfig cfg;
      cfg.flow.dt_max = 2e-4;
      cfg.flow.time_budget = 2.0;
      cfg.flow.sample_stride = 50;
      const FlowTrace tr = generic_piecewise_flow(
          AnySurface(make_dumbbell_profile(1.5, 0.2, 1.2, 512)), cfg);
      c.expect(tr.verdict == "non-compact singularity (cylinder tangent)",
               "dumbbell verdict: " + tr.verdict);
      c.expect(tr.jumps.empty(), "dumbbell run jumped");
    }
    {
      TorusSolveConfig tcfg;
      tcfg.profile_nodes = 512;
      const ShootingResult torus = solve_angenent_torus(tcfg);
      const ProfileSurface seed = normal_graph(
          torus.profile, VectorXd::Constant(torus.profile.size(), 0.005), 1.0, true);
      GenericFlowConfig cfg;
      cfg.flow.dt_max = 2e-4;
      cfg.flow.time_budget = 3.0;
      cfg.flow.sample_stride = 50;
      const FlowTrace tr = generic_piecewise_flow(AnySurface(seed), cfg);
      c.expect(tr.jumps.size() == 1,
               "torus-seeded run made " + std::to_string(tr.jumps.size()) + " jumps");
      if (tr.jumps.size() == 1) {
        c.expect(tr.jumps[0].drop >= 1e-3, "entropy drop below epsilon");
        c.expect_le(std::abs(tr.jumps[0].area_after / tr.jumps[0].area_before - 1.0),
                    1e-10, "area continuity across the jump");
      }
    }
  }

  {  // 11 ------------------------------------------------------------------
    Criterion c(11, "conserved quantity along shrinker-curve orbits");
    for (int k = 0; k < 20; ++k) {
      const double r0 = 0.5 + 1.9 * k / 19.0;
      const CurveOrbit orbit = shrinker_curve_ode(r0, r0 / 2.0, {1e-3, 60.0, 50.0, 1e-8});
      c.expect_le(orbit.E_drift, 1e-8, "E drift at r0=" + std::to_string(r0));
      c.expect(orbit.classification != "escaped",
               "orbit escaped at r0=" + std::to_string(r0));
    }
    // the straight-line branch is the rejected E = 0 case
    bool rejected = false;
    try {
      shrinker_curve_ode(kSqrt2, 0.0, {});
    } catch (const Error&) {
      rejected = true;
    }
    c.expect(rejected, "E = 0 line branch not rejected");
  }

  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAIL" : "OK", g_failures);
  return g_failures;
}
