#include <cmath>
#include <numbers>
#include <random>

#include "caflow/errors.hpp"
#include "caflow/sphere_calculus.hpp"
#include "doctest.h"
#include "jet.hpp"

using namespace caflow;
using std::numbers::pi;

namespace {

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

Eigen::Matrix2d rotation(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

SupportField sampled(const GridPtr& g, double (*f)(const Vec3&)) {
  std::vector<double> v(g->node_count());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(g->x(k));
  return SupportField(g, v);
}

double ellipse_s(double th) { return std::sqrt(4.0 * std::cos(th) * std::cos(th) + std::sin(th) * std::sin(th)); }

}  // namespace

TEST_SUITE("sphere_grid") {
  TEST_CASE("circle grid: equispaced nodes and uniform weights") {
    auto g = SphereGrid::make(1, 256);
    CHECK(g->node_count() == 256);
    for (std::size_t k = 0; k < 256; ++k) {
      CHECK(g->theta(k) == doctest::Approx(2 * pi * k / 256).epsilon(1e-15));
      CHECK(std::abs(g->x(k).norm() - 1.0) <= 1e-14);
      CHECK(g->weights()[k] == doctest::Approx(2 * pi / 256).epsilon(1e-14));
    }
  }

  TEST_CASE("cube grid: node count, unit directions, weight sum 4π") {
    auto g = SphereGrid::make(2, 33);
    CHECK(g->node_count() == 6u * 33 * 33);
    for (std::size_t k = 0; k < g->node_count(); ++k) CHECK(std::abs(g->x(k).norm() - 1.0) <= 1e-14);
    CHECK(std::abs(sum(g->weights()) - 4 * pi) <= 1e-10);
  }

  TEST_CASE("cube quadrature integrates low-degree polynomials") {
    auto g = SphereGrid::make(2, 33);
    double x2 = 0, x4 = 0, xyz = 0;
    for (std::size_t k = 0; k < g->node_count(); ++k) {
      const Vec3& x = g->x(k);
      x2 += g->weights()[k] * x(0) * x(0);
      x4 += g->weights()[k] * std::pow(x(2), 4);
      xyz += g->weights()[k] * x(0) * x(1) * x(2);
    }
    CHECK(std::abs(x2 - 4 * pi / 3) <= 1e-10);
    CHECK(std::abs(x4 - 4 * pi / 5) <= 1e-7);
    CHECK(std::abs(xyz) <= 1e-12);
  }

  TEST_CASE("chart weights are weights times the cubed Jacobian factor") {
    auto g = SphereGrid::make(2, 17);
    for (std::size_t k = 0; k < g->node_count(); k += 7)
      CHECK(g->chart_weights()[k] == doctest::Approx(g->weights()[k] * std::pow(g->chart_w(k), 3)));
  }

  TEST_CASE("shared nodes really share directions") {
    auto g = SphereGrid::make(2, 17);
    CHECK(g->shared_nodes().size() == 12u * 15 + 8);
    for (const auto& group : g->shared_nodes())
      for (std::size_t k : group) CHECK((g->x(k) - g->x(group.front())).norm() <= 1e-14);
  }

  TEST_CASE("resolution validation") {
    CHECK_THROWS_AS(SphereGrid::make(1, 8), ConfigError);
    CHECK_THROWS_AS(SphereGrid::make(2, 32), ConfigError);
    CHECK_THROWS_AS(SphereGrid::make(2, 9), ConfigError);
    CHECK_THROWS_AS(SphereGrid::make(3, 33), ConfigError);
    CHECK_THROWS_AS(SphereGrid::make(2, 33, 1), ConfigError);
  }

  TEST_CASE("gauss-legendre rule is exact to degree 2p-1") {
    std::vector<double> x, w;
    gauss_legendre(8, x, w);
    double s0 = 0, s14 = 0, s15 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s0 += w[i];
      s14 += w[i] * std::pow(x[i], 14);
      s15 += w[i] * std::pow(x[i], 15);
    }
    CHECK(s0 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s14 == doctest::Approx(2.0 / 15).epsilon(1e-14));
    CHECK(std::abs(s15) <= 1e-15);
  }

  TEST_CASE("halo fill reproduces a smooth homogeneous function") {
    auto g = SphereGrid::make(2, 33);
    auto lin = [](const Vec3& x) { return 2.0 + 0.3 * x(0) - 0.2 * x(1) * x(2) + 0.1 * x(2) * x(2); };
    std::vector<double> v(g->node_count());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = lin(g->x(k));
    const int E = g->extended_size(), w = g->halo_width(), M = g->resolution();
    const double h = g->spacing();
    std::vector<double> ext(static_cast<std::size_t>(E) * E);
    double worst = 0.0;
    for (int f = 0; f < 6; ++f) {
      fill_face_with_halo(*g, v, f, ext);
      const auto& fr = g->frame(f);
      for (int j = 0; j < E; ++j)
        for (int i = 0; i < E; ++i) {
          const bool inside = i >= w && i < w + M && j >= w && j < w + M;
          const bool ring = i >= w - 2 && i < w + M + 2 && j >= w - 2 && j < w + M + 2;
          if (inside || !ring) continue;
          const double y1 = -1 + (i - w) * h, y2 = -1 + (j - w) * h;
          const Vec3 x = (y1 * fr.e1 + y2 * fr.e2 + fr.nrm).normalized();
          worst = std::max(worst, std::abs(ext[static_cast<std::size_t>(j) * E + i] - lin(x)));
        }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_SUITE("sphere_calculus") {
  TEST_CASE("constant field has vanishing derivatives") {
    for (auto g : {SphereGrid::make(1, 64), SphereGrid::make(2, 17)}) {
      const Derivatives d = differentiate(SupportField(g, std::vector<double>(g->node_count(), 1.0)));
      for (std::size_t k = 0; k < g->node_count(); ++k) {
        CHECK(d.grad[k].norm() <= 1e-12);
        CHECK(d.hess[k].norm() <= 1e-11);
      }
    }
  }

  TEST_CASE("ellipse derivatives match the jet oracle") {
    auto g = SphereGrid::make(1, 256);
    const SupportField s = ellipsoid_support(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix(), g);
    const Derivatives d = differentiate(s);
    CHECK(std::abs(d.grad[0](0)) <= 1e-12);
    CHECK(std::abs(d.hess[0](0, 0) + 1.5) <= 1e-10);
    double worst = 0.0;
    for (std::size_t k = 0; k < 256; ++k) {
      const auto o = jet::curve_invariants([](const jet::Jet& t) {
        const jet::Jet c = jet::cos(t), sn = jet::sin(t);
        return jet::sqrt(4.0 * c * c + sn * sn);
      }, g->theta(k));
      CHECK(s.values[k] == doctest::Approx(o.s).epsilon(1e-14));
      worst = std::max({worst, std::abs(d.grad[k](0) - o.ds), std::abs(d.hess[k](0, 0) - o.d2s)});
    }
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("radii and curvature: circle, ellipse, sphere") {
    auto g1 = SphereGrid::make(1, 128);
    const RadiiField c = radii_and_curvature(SupportField(g1, std::vector<double>(128, 1.0)));
    CHECK(c.eig_min[5] == doctest::Approx(1.0));
    CHECK(c.gauss_curvature[5] == doctest::Approx(1.0));
    const RadiiField e = radii_and_curvature(ellipsoid_support(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix(), g1));
    CHECK(e.eig_min[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(e.gauss_curvature[0] == doctest::Approx(2.0).epsilon(1e-10));
    for (std::size_t k = 0; k < 128; ++k) CHECK(e.gauss_curvature[k] * e.b[k](0, 0) == doctest::Approx(1.0));

    auto g2 = SphereGrid::make(2, 17);
    const double R = 1.7;
    const SupportField s(g2, std::vector<double>(g2->node_count(), R));
    const RadiiField sp = radii_and_curvature(s);
    for (std::size_t k = 0; k < g2->node_count(); k += 11) {
      CHECK(sp.eig_min[k] == doctest::Approx(R).epsilon(1e-10));
      CHECK(sp.eig_max[k] == doctest::Approx(R).epsilon(1e-10));
      CHECK(sp.gauss_curvature[k] == doctest::Approx(1 / (R * R)).epsilon(1e-10));
      CHECK(sp.gauss_curvature[k] * sp.b[k].determinant() == doctest::Approx(1.0));
    }
    const Derivatives d = differentiate(s);
    for (std::size_t k = 0; k < g2->node_count(); k += 13) {
      const double w = g2->chart_w(k);
      CHECK(d.d2u[k].determinant() == doctest::Approx(R * R / std::pow(w, 4)).epsilon(1e-9));
    }
  }

  TEST_CASE("non-convex field raises ConvexityLost") {
    auto g = SphereGrid::make(1, 128);
    std::vector<double> v(128);
    for (std::size_t k = 0; k < 128; ++k) v[k] = 1.0 + 0.9 * std::cos(2 * g->theta(k));
    CHECK_THROWS_AS(radii_and_curvature(SupportField(g, v)), ConvexityLost);
  }

  TEST_CASE("embedding: circle, ellipse, sphere") {
    auto g1 = SphereGrid::make(1, 64);
    const Embedding c = embed(SupportField(g1, std::vector<double>(64, 1.0)));
    for (std::size_t k = 0; k < 64; ++k) CHECK((c.X[k] - g1->x(k)).norm() <= 1e-13);
    const Embedding e = embed(ellipsoid_support(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix(), g1));
    CHECK((e.X[0] - Vec3(2, 0, 0)).norm() <= 1e-12);

    auto g2 = SphereGrid::make(2, 17);
    const Embedding sp = embed(SupportField(g2, std::vector<double>(g2->node_count(), 2.5)));
    for (std::size_t k = 0; k < g2->node_count(); ++k) CHECK(std::abs(sp.X[k].norm() - 2.5) <= 1e-12);
  }

  TEST_CASE("embedded ellipse and ellipsoid lie on the quadric") {
    Eigen::Matrix2d Q2;
    Q2 << 3.0, 0.7, 0.7, 1.2;
    auto g1 = SphereGrid::make(1, 256);
    const Embedding e1 = embed(ellipsoid_support(Q2, g1));
    const Eigen::Matrix2d Qi2 = Q2.inverse();
    double worst1 = 0.0;
    for (const Vec3& X : e1.X) worst1 = std::max(worst1, std::abs(X.head<2>().dot(Qi2 * X.head<2>()) - 1.0));
    CHECK(worst1 <= 1e-10);

    Eigen::Matrix3d Q3;
    Q3 << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5;
    const Eigen::Matrix3d Qi3 = Q3.inverse();
    double prev = 0.0;
    for (int M : {33, 65}) {
      const Embedding e2 = embed(ellipsoid_support(Q3, SphereGrid::make(2, M)));
      double worst = 0.0;
      for (const Vec3& X : e2.X) worst = std::max(worst, std::abs(X.dot(Qi3 * X) - 1.0));
      if (M == 33) CHECK(worst <= 1e-5);
      if (M == 65) CHECK(prev / worst >= 12.0);
      prev = worst;
    }
  }

  TEST_CASE("n=2 fourth-order convergence of the hessian") {
    Eigen::Matrix3d Q;
    Q << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5;
    double errs[2];
    int idx = 0;
    for (int M : {33, 65}) {
      auto g = SphereGrid::make(2, M);
      const SupportField s = ellipsoid_support(Q, g);
      const Derivatives d = differentiate(s);
      double worst = 0.0;
      for (std::size_t k = 0; k < g->node_count(); ++k) {
        const double w = g->chart_w(k);
        const Eigen::Vector3d p(g->chart_y1(k), g->chart_y2(k), 1.0);
        const auto& fr = g->frame(g->face_of(k));
        Eigen::Matrix3d F;
        F << fr.e1, fr.e2, fr.nrm;
        const Eigen::Matrix3d Qf = F.transpose() * Q * F;
        const double u = std::sqrt(p.dot(Qf * p));
        const Eigen::Vector3d Qp = Qf * p;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const double exact = Qf(i, j) / u - Qp(i) * Qp(j) / (u * u * u);
            worst = std::max(worst, std::abs(d.d2u[k](i, j) - exact));
          }
        (void)w;
      }
      errs[idx++] = worst;
    }
    CHECK(errs[0] / errs[1] >= 14.0);
  }

  TEST_CASE("homogeneity: u_F / w reproduces s on shared nodes") {
    Eigen::Matrix3d Q;
    Q << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5;
    auto g = SphereGrid::make(2, 33);
    const SupportField s = ellipsoid_support(Q, g);
    const auto u = s.face_values();
    for (const auto& group : g->shared_nodes())
      for (std::size_t k : group) CHECK(std::abs(u[k] / g->chart_w(k) - s.values[group.front()]) <= 1e-11);
  }

  TEST_CASE("ellipsoid support and validation") {
    auto g1 = SphereGrid::make(1, 64);
    const SupportField s = ellipsoid_support(Eigen::Matrix2d::Identity(), g1);
    for (double v : s.values) CHECK(v == doctest::Approx(1.0));
    const SupportField e = ellipsoid_support(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix(), g1);
    for (std::size_t k = 0; k < 64; ++k) CHECK(e.values[k] == doctest::Approx(ellipse_s(g1->theta(k))));
    auto g2 = SphereGrid::make(2, 17);
    const SupportField e3 = ellipsoid_support(Eigen::Vector3d(4, 1, 1).asDiagonal().toDenseMatrix(), g2);
    const std::size_t centre = g2->node_index(0, 8, 8);
    CHECK((g2->x(centre) - Vec3(1, 0, 0)).norm() <= 1e-14);
    CHECK(e3.values[centre] == doctest::Approx(2.0));
    Eigen::Matrix2d bad;
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(ellipsoid_support(bad, g1), ConfigError);
    CHECK_THROWS_AS(ellipsoid_support(Eigen::Matrix3d::Identity(), g1), ConfigError);
  }

  TEST_CASE("inner and outer radii") {
    auto g = SphereGrid::make(1, 96);
    const Radii unit = inner_outer_radii(SupportField(g, std::vector<double>(96, 1.0)));
    CHECK(unit.inner == 1.0);
    CHECK(unit.outer == 1.0);
    const Radii e = inner_outer_radii(ellipsoid_support(Eigen::Vector2d(4, 1).asDiagonal().toDenseMatrix(), g));
    CHECK(e.inner == doctest::Approx(1.0));
    CHECK(e.outer == doctest::Approx(2.0));
    std::vector<double> v(96);
    for (std::size_t k = 0; k < 96; ++k) v[k] = 1.0 + 0.1 * std::cos(3 * g->theta(k));
    const Radii p = inner_outer_radii(SupportField(g, v));
    CHECK(p.inner == doctest::Approx(0.9));
    CHECK(p.outer == doctest::Approx(1.1));
  }

  TEST_CASE("linear maps: dilation, rotation, diagonal, inverse") {
    auto g = SphereGrid::make(1, 256);
    const SupportField unit(g, std::vector<double>(256, 1.0));
    const SupportField twice = apply_linear_map(unit, 2.0 * Eigen::Matrix2d::Identity());
    for (double v : twice.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    const SupportField ell = apply_linear_map(unit, Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix());
    for (std::size_t k = 0; k < 256; ++k) CHECK(std::abs(ell.values[k] - ellipse_s(g->theta(k))) <= 1e-10);

    std::vector<double> v(256);
    for (std::size_t k = 0; k < 256; ++k) v[k] = 1.0 + 0.05 * std::cos(3 * g->theta(k)) + 0.02 * std::sin(g->theta(k));
    const SupportField s(g, v);
    const double a = 0.3;
    const SupportField rot = apply_linear_map(s, rotation(a));
    for (std::size_t k = 0; k < 256; ++k) {
      const double th = g->theta(k) - a;
      CHECK(std::abs(rot.values[k] - (1.0 + 0.05 * std::cos(3 * th) + 0.02 * std::sin(th))) <= 1e-12);
    }
    Eigen::Matrix2d A;
    A << 1.3, 0.4, -0.2, 0.9;
    const SupportField back = apply_linear_map(apply_linear_map(s, A), A.inverse());
    for (std::size_t k = 0; k < 256; ++k) CHECK(std::abs(back.values[k] - v[k]) <= 1e-8);
    CHECK_THROWS_AS(apply_linear_map(s, Eigen::Matrix2d::Zero()), ConfigError);
  }

  TEST_CASE("n=2 linear map of the unit sphere is the ellipsoid") {
    auto g = SphereGrid::make(2, 33);
    Eigen::Matrix3d A;
    A << 1.2, 0.1, 0.0, 0.0, 0.9, 0.2, 0.1, 0.0, 1.1;
    const SupportField mapped = apply_linear_map(SupportField(g, std::vector<double>(g->node_count(), 1.0)), A);
    const SupportField exact = ellipsoid_support(A * A.transpose(), g);
    for (std::size_t k = 0; k < g->node_count(); ++k) CHECK(std::abs(mapped.values[k] - exact.values[k]) <= 1e-6);
  }

  TEST_CASE("interpolation reproduces smooth functions") {
    auto g1 = SphereGrid::make(1, 64);
    std::vector<double> v(64);
    for (std::size_t k = 0; k < 64; ++k) v[k] = 1.0 + 0.3 * std::cos(2 * g1->theta(k));
    CHECK(interpolate(g1, v, Vec3(std::cos(0.123), std::sin(0.123), 0)) ==
          doctest::Approx(1.0 + 0.3 * std::cos(0.246)).epsilon(1e-13));
    auto g2 = SphereGrid::make(2, 33);
    const SupportField s = sampled(g2, [](const Vec3& x) { return 1.0 + 0.2 * x(0) * x(1); });
    const Vec3 z = Vec3(0.3, 0.5, 0.8).normalized();
    CHECK(std::abs(interpolate(g2, s.values, z) - (1.0 + 0.2 * z(0) * z(1))) <= 1e-6);
  }

  TEST_CASE("support field validation") {
    auto g = SphereGrid::make(1, 32);
    std::vector<double> v(32, 1.0);
    v[3] = -0.1;
    CHECK_THROWS_AS(SupportField(g, v).require_positive(), OriginCrossed);
    CHECK_THROWS(SupportField(g, std::vector<double>(31, 1.0)));
  }

  TEST_CASE("third derivatives need a wide halo") {
    auto g = SphereGrid::make(2, 17, 2);
    CHECK_THROWS_AS(differentiate(SupportField(g, std::vector<double>(g->node_count(), 1.0)), true), GridError);
  }
}
