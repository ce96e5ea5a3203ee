#include <cmath>
#include <numbers>

#include "doctest.h"
#include "geometry.hpp"

using namespace shl;

namespace {
constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);
}  // namespace

TEST_CASE("circle geometry matches analytic constants") {
  const LocalGeometry g = local_geometry(make_circle(kSqrt2, 256));
  CHECK((g.mean_curvature.array() - 1.0 / kSqrt2).abs().maxCoeff() < 1e-4);
  CHECK((g.second_fund2.array() - 0.5).abs().maxCoeff() < 1e-4);
  CHECK(std::abs(g.measure.sum() - 2.0 * kPi * kSqrt2) < 1e-3);
  for (int i = 0; i < g.size(); ++i)
    CHECK(std::abs(g.normal.row(i).norm() - 1.0) < 1e-12);

  const LocalGeometry u = local_geometry(make_circle(1.0, 256));
  CHECK((u.mean_curvature.array() - 1.0).abs().maxCoeff() < 1e-4);
  CHECK((u.second_fund2.array() - 1.0).abs().maxCoeff() < 1e-4);
}

TEST_CASE("sphere profile geometry") {
  const LocalGeometry g = local_geometry(make_sphere_profile(2.0, 256));
  CHECK((g.mean_curvature.array() - 1.0).abs().maxCoeff() < 1e-4);
  CHECK((g.second_fund2.array() - 0.5).abs().maxCoeff() < 1e-4);
  CHECK(std::abs(g.measure.sum() - 16.0 * kPi) / (16.0 * kPi) < 1e-6);
  // |A|^2 = kappa1^2 + kappa2^2 and H = -(kappa1 + kappa2)
  for (int i = 0; i < g.size(); ++i) {
    CHECK(g.mean_curvature[i] ==
          doctest::Approx(-(g.kappa_profile[i] + g.kappa_rot[i])).epsilon(1e-10));
    CHECK(g.second_fund2[i] ==
          doctest::Approx(g.kappa_profile[i] * g.kappa_profile[i] +
                          g.kappa_rot[i] * g.kappa_rot[i])
              .epsilon(1e-10));
  }
}

TEST_CASE("round product analytic records") {
  const RoundProductGeometry cyl = round_product_geometry({3, 1, kSqrt2});
  CHECK(cyl.mean_curvature == doctest::Approx(1.0 / kSqrt2));
  CHECK(cyl.second_fund2 == doctest::Approx(0.5));
  const RoundProductGeometry sph = round_product_geometry({3, 2, 2.0});
  CHECK(sph.mean_curvature == doctest::Approx(1.0));
  CHECK(sph.second_fund2 == doctest::Approx(0.5));
  const RoundProductGeometry line = round_product_geometry({2, 0, 0.0});
  CHECK(line.mean_curvature == 0.0);
  CHECK(line.second_fund2 == 0.0);
  CHECK_THROWS_AS(round_product_geometry({3, 1, -1.0}), Error);
}

TEST_CASE("curve invariant violations rejected") {
  DiscreteCurve c = make_circle(1.0, 16);
  c.pts[3] = c.pts[2];  // degenerate edge
  CHECK_THROWS_WITH_AS(local_geometry(c), doctest::Contains("node 2"), Error);

  // figure-eight: self-intersecting unless immersed
  DiscreteCurve eight;
  for (int k = 0; k < 64; ++k) {
    const double t = 2.0 * kPi * k / 64;
    eight.pts.emplace_back(std::sin(2 * t), std::sin(t));
  }
  CHECK_THROWS_AS(validate(eight), Error);
  eight.immersed = true;
  CHECK_NOTHROW(validate(eight));

  ProfileSurface p = make_sphere_profile(1.0, 32);
  p.rz[5].x() = -0.1;
  CHECK_THROWS_AS(validate(p), Error);

  CHECK_THROWS_AS(make_circle(1.0, 4), Error);
}

TEST_CASE("normal graph exact cases") {
  const DiscreteCurve c = make_circle(kSqrt2, 128);
  const VectorXd ones = VectorXd::Ones(128);

  // constant shift of a circle is a circle of shifted radius
  const DiscreteCurve shifted = normal_graph(c, ones, 0.3, false);
  for (const auto& p : shifted.pts) CHECK(p.norm() == doctest::Approx(kSqrt2 + 0.3));

  // zero perturbation is the identity
  const DiscreteCurve same = normal_graph(c, VectorXd::Zero(128), 0.5, false);
  for (int i = 0; i < 128; ++i) CHECK((same.pts[i] - c.pts[i]).norm() < 1e-15);

  // amplitude cap rejected with the violating node
  CHECK_THROWS_WITH_AS(normal_graph(c, ones, 0.9, false), doctest::Contains("node"),
                       Error);
}

TEST_CASE("graph linearization closed forms") {
  const int n = 256;
  const DiscreteCurve c2 = make_circle(kSqrt2, n);
  const GraphLinearization lin = linearized_H_and_normal(c2, VectorXd::Ones(n));
  CHECK((lin.dH.array() + 0.5).abs().maxCoeff() < 1e-6);  // H' = -|A|^2 = -1/2

  // f = cos(theta) on the unit circle: H' = cos - cos = 0
  const DiscreteCurve u = make_circle(1.0, n);
  VectorXd f(n);
  for (int i = 0; i < n; ++i) f[i] = std::cos(2.0 * kPi * i / n);
  const GraphLinearization lu = linearized_H_and_normal(u, f);
  CHECK(lu.dH.cwiseAbs().maxCoeff() < 1e-3);

  // same cancellation on the radius-sqrt(2) circle
  const GraphLinearization l2 = linearized_H_and_normal(c2, f);
  CHECK(l2.dH.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("linearization matches finite differences of the graph family") {
  const int n = 512;
  const DiscreteCurve c = make_circle(kSqrt2, n);
  const LocalGeometry g0 = local_geometry(c);
  VectorXd f(n);
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * kPi * i / n;
    f[i] = std::cos(th) + 0.4 * std::sin(3.0 * th);
  }
  const GraphLinearization lin = linearized_H_and_normal(c, f);
  auto fd_err = [&](double s) {
    const LocalGeometry gs = local_geometry(normal_graph(c, f, s, false));
    double worst_H = 0.0, worst_n = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dH = (gs.mean_curvature[i] - g0.mean_curvature[i]) / s;
      worst_H = std::max(worst_H, std::abs(dH - lin.dH[i]));
      const Eigen::Vector2d dn = (gs.normal.row(i) - g0.normal.row(i)).head<2>() / s;
      worst_n = std::max(worst_n, (dn - lin.dn.row(i).head<2>().transpose()).norm());
    }
    return std::max(worst_H, worst_n);
  };
  const double e3 = fd_err(1e-3);
  const double e4 = fd_err(1e-4);
  CHECK(e3 < 5e-3);
  // first-order consistency: the error ratio tracks the step ratio
  CHECK(e3 / e4 > 4.0);
  CHECK(e3 / e4 < 25.0);
}

TEST_CASE("linearization on the sphere profile") {
  const int n = 256;
  const ProfileSurface p = make_sphere_profile(2.0, n);
  const LocalGeometry g0 = local_geometry(p);
  VectorXd f(n);
  for (int i = 0; i < n; ++i) f[i] = g0.position(i, 2) / 2.0;  // smooth axisymmetric
  const GraphLinearization lin = linearized_H_and_normal(p, f);
  const double s = 1e-4;
  const LocalGeometry gs = local_geometry(normal_graph(p, f, s, false));
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst,
                     std::abs((gs.mean_curvature[i] - g0.mean_curvature[i]) / s - lin.dH[i]));
  CHECK(worst < 1e-2);
}

TEST_CASE("dilate and translate transform exactly") {
  const DiscreteCurve c1 = make_circle(1.0, 64);
  const DiscreteCurve c2 = dilate(c1, kSqrt2);
  for (const auto& p : c2.pts) CHECK(p.norm() == doctest::Approx(kSqrt2));

  const Vector2d v(0.37, -1.2);
  const DiscreteCurve back = translate(translate(c1, v), -v);
  for (int i = 0; i < 64; ++i) CHECK((back.pts[i] - c1.pts[i]).norm() < 1e-15);

  // curvature scaling laws H -> H/alpha, |A|^2 -> |A|^2/alpha^2, dmu -> alpha^n dmu
  const ProfileSurface sp = make_sphere_profile(2.0, 128);
  const double alpha = 1.7;
  const LocalGeometry g = local_geometry(sp);
  const LocalGeometry gd = local_geometry(dilate(sp, alpha));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(gd.mean_curvature[i] == doctest::Approx(g.mean_curvature[i] / alpha).epsilon(1e-9));
    CHECK(gd.second_fund2[i] ==
          doctest::Approx(g.second_fund2[i] / (alpha * alpha)).epsilon(1e-9));
    CHECK(gd.measure[i] == doctest::Approx(g.measure[i] * alpha * alpha).epsilon(1e-9));
  }
}

TEST_CASE("orientation consistency: integral of H n dmu vanishes") {
  // divergence-theorem sanity on closed convex curves
  for (const DiscreteCurve& c :
       {make_circle(kSqrt2, 512), resample(make_ellipse(2.0, 1.0, 512), 512)}) {
    const LocalGeometry g = local_geometry(c);
    Eigen::Vector2d total = Eigen::Vector2d::Zero();
    double scale = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      total += g.mean_curvature[i] * g.measure[i] * g.normal.row(i).head<2>().transpose();
      scale += std::abs(g.mean_curvature[i]) * g.measure[i];
    }
    CHECK(total.norm() < 1e-8 * scale);
  }
}

TEST_CASE("curvature converges at second order") {
  // exact on discrete circles
  CHECK((local_geometry(make_circle(kSqrt2, 128)).mean_curvature.array() - 1.0 / kSqrt2)
            .abs()
            .maxCoeff() < 1e-12);
  // measured rate on a curve with varying curvature
  auto max_err = [](int n) {
    const double a = 2.0, b = 1.0;
    const LocalGeometry g = local_geometry(make_ellipse(a, b, n));
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = g.position(i, 0), y = g.position(i, 1);
      const double t = std::atan2(y / b, x / a);
      const double s2 = std::sin(t) * std::sin(t), c2 = std::cos(t) * std::cos(t);
      const double kappa = a * b / std::pow(a * a * s2 + b * b * c2, 1.5);
      worst = std::max(worst, std::abs(g.mean_curvature[i] - kappa));
    }
    return worst;
  };
  const double rate = std::log2(max_err(256) / max_err(512));
  CHECK(rate > 1.8);
  CHECK(rate < 2.2);
}

TEST_CASE("resampling is quasi-uniform") {
  const ProfileSurface d = make_dumbbell_profile(1.5, 0.2, 1.2, 512);
  CHECK(max_adjacent_edge_ratio(d.rz, false) < 1.1);
  const DiscreteCurve e = make_ellipse(2.0, 0.5, 256);
  CHECK(max_adjacent_edge_ratio(e.pts, true) < 1.1);
  // sphere-like resampling keeps cell-centered positive radii
  const ProfileSurface s = resample(make_sphere_profile(2.0, 200), 128);
  CHECK(s.size() == 128);
  for (const auto& q : s.rz) CHECK(q.x() > 0.0);
  CHECK(hausdorff_distance(s, make_sphere_profile(2.0, 128)) < 1e-4);
}

TEST_CASE("hausdorff distance sanity") {
  const DiscreteCurve a = make_circle(1.0, 64);
  const DiscreteCurve b = make_circle(1.1, 64);
  CHECK(hausdorff_distance(a, b) == doctest::Approx(0.1).epsilon(0.05));
}
