#include <cmath>
#include <numbers>

#include "caflow/errors.hpp"
#include "caflow/flow.hpp"
#include "caflow/oracles.hpp"
#include "doctest.h"

using namespace caflow;
using std::numbers::pi;

namespace {

SupportField constant(int n, int res, double R) {
  auto g = SphereGrid::make(n, res);
  return SupportField(g, std::vector<double>(g->node_count(), R));
}

double max_abs_diff(const std::vector<double>& v, double c) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x - c));
  return m;
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("rhs on spheres") {
    CHECK(max_abs_diff(rhs(constant(1, 64, 1.0)), 0.0) <= 1e-13);
    CHECK(max_abs_diff(rhs(constant(1, 64, 2.0)), std::log(16.0)) <= 1e-12);
    const double R = 1.3;
    CHECK(max_abs_diff(rhs(constant(2, 17, R)), 1.5 * R * std::log(R)) <= 1e-10);
    CHECK(max_abs_diff(rhs(constant(1, 64, 1.0), 0.5), 0.5) <= 1e-13);
  }

  TEST_CASE("rhs rejects non-convex data") {
    auto g = SphereGrid::make(1, 128);
    std::vector<double> v(128);
    for (std::size_t k = 0; k < 128; ++k) v[k] = 1.0 + 0.9 * std::cos(2 * g->theta(k));
    CHECK_THROWS_AS(rhs(SupportField(g, v)), ConvexityLost);
  }

  TEST_CASE("stable dt scaling") {
    StepControl c;
    c.dt_max = 1.0;
    const double dt = stable_dt(constant(1, 256, 1.0), c);
    CHECK(dt == doctest::Approx(0.2 * std::pow(2 * pi / 256, 2) / 0.5).epsilon(1e-12));
    CHECK(stable_dt(constant(1, 512, 1.0), c) == doctest::Approx(dt / 4).epsilon(1e-12));
    CHECK(stable_dt(constant(1, 256, 2.0), c) == doctest::Approx(dt).epsilon(1e-12));
    c.dt_max = 1e-5;
    CHECK(stable_dt(constant(1, 256, 1.0), c) == 1e-5);
  }

  TEST_CASE("single steps") {
    StepControl c;
    FlowState st{0.0, constant(1, 256, 1.0)};
    const FlowState a = step(st, 1e-3, c);
    CHECK(max_abs_diff(a.s.values, 1.0) <= 1e-14);
    CHECK(a.t == doctest::Approx(1e-3));

    FlowState two{0.0, constant(1, 256, 2.0)};
    const FlowState b = step(two, 1e-4, c);
    CHECK(max_abs_diff(b.s.values, std::pow(2.0, std::exp(2e-4))) <= 1e-12);

    auto g = SphereGrid::make(1, 128);
    std::vector<double> v(128);
    for (std::size_t k = 0; k < 128; ++k) v[k] = 1.0 + 0.9 * std::cos(2 * g->theta(k));
    CHECK_THROWS_AS(step(FlowState{0.0, SupportField(g, v)}, 1e-4, c), ConvexityLost);
  }

  TEST_CASE("evolve: stationary, extinction, blowup") {
    StepControl c;
    c.t_end = 1.0;
    const Trajectory unit = evolve(constant(1, 128, 1.0), c);
    CHECK(unit.termination == Termination::ReachedTEnd);
    for (const auto& s : unit.snapshots) CHECK(max_abs_diff(s.s.values, 1.0) <= 1e-8);
    CHECK(unit.snapshots.back().t == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(unit.snapshots.size() == 11);

    c.t_end = 5.0;
    CHECK(evolve(constant(1, 64, 0.5), c).termination == Termination::Extinction);
    CHECK(evolve(constant(1, 64, 2.0), c).termination == Termination::Blowup);
  }

  TEST_CASE("evolve hits snapshot times exactly and calls the hook") {
    StepControl c;
    c.t_end = 0.3;
    c.snapshot_interval = 0.07;
    std::vector<double> seen;
    const Trajectory t = evolve(constant(1, 64, 1.2), c, [&](const FlowState& s) { seen.push_back(s.t); });
    REQUIRE(t.snapshots.size() == 6);
    const double expect[] = {0.0, 0.07, 0.14, 0.21, 0.28, 0.3};
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(t.snapshots[k].t == doctest::Approx(expect[k]).epsilon(1e-14));
      CHECK(seen[k] == t.snapshots[k].t);
    }
  }

  TEST_CASE("sphere law and fourth-order time accuracy") {
    const double R0 = 1.2;
    double err[2];
    for (int pass = 0; pass < 2; ++pass) {
      StepControl c;
      c.t_end = 0.3;
      c.snapshot_interval = 0.3;
      c.dt_max = pass == 0 ? 0.02 : 0.01;
      c.cfl = 1.0;
      c.max_log_change = 1.0;
      const Trajectory t = evolve(constant(1, 16, R0), c);
      err[pass] = max_abs_diff(t.snapshots.back().s.values, exact_sphere_radius(R0, 0.3, 1));
    }
    CHECK(err[0] / err[1] >= 14.0);
    CHECK(err[1] <= 1e-9);
  }

  TEST_CASE("heun is second order") {
    const double R0 = 1.2;
    double err[2];
    for (int pass = 0; pass < 2; ++pass) {
      StepControl c;
      c.scheme = Scheme::Heun;
      c.t_end = 0.3;
      c.snapshot_interval = 0.3;
      c.dt_max = pass == 0 ? 0.02 : 0.01;
      c.cfl = 1.0;
      c.max_log_change = 1.0;
      const Trajectory t = evolve(constant(1, 16, R0), c);
      err[pass] = max_abs_diff(t.snapshots.back().s.values, exact_sphere_radius(R0, 0.3, 1));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.1));
  }

  TEST_CASE("n=2 sphere law") {
    StepControl c;
    c.t_end = 0.2;
    c.snapshot_interval = 0.1;
    const Trajectory t = evolve(constant(2, 17, 1.5), c);
    REQUIRE(t.termination == Termination::ReachedTEnd);
    CHECK(max_abs_diff(t.snapshots.back().s.values, exact_sphere_radius(1.5, 0.2, 2)) <= 1e-8);
  }

  TEST_CASE("ellipse evolves by the exact factor") {
    auto g = SphereGrid::make(1, 128);
    Eigen::Matrix2d Q;
    Q << 4, 0, 0, 1;
    const SupportField s0 = ellipsoid_support(Q, g);
    StepControl c;
    c.t_end = 0.2;
    const Trajectory t = evolve(s0, c);
    const double f = exact_ellipsoid_factor(std::pow(2.0, 2.0 / 3), 0.2, 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < 128; ++k)
      worst = std::max(worst, std::abs(t.snapshots.back().s.values[k] / (f * s0.values[k]) - 1.0));
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("renormalisation keeps max s = 1 and records the divided factor") {
    StepControl c;
    c.t_end = 0.3;
    c.renormalize = true;
    const Trajectory t = evolve(constant(1, 64, 1.5), c);
    for (const auto& s : t.snapshots) {
      CHECK(max_abs_diff(s.s.values, 1.0) <= 1e-12);
      CHECK(s.log_scale == doctest::Approx(std::log(1.5)).epsilon(1e-12));
    }
  }

  TEST_CASE("renormalisation only changes the scale of the shape") {
    auto g = SphereGrid::make(1, 128);
    std::vector<double> v(128);
    for (std::size_t k = 0; k < 128; ++k) v[k] = 1.0 + 0.05 * std::cos(3 * g->theta(k));
    StepControl c;
    c.t_end = 0.2;
    c.snapshot_interval = 0.05;
    const Trajectory plain = evolve(SupportField(g, v), c);
    c.renormalize = true;
    const Trajectory norm = evolve(SupportField(g, v), c);
    const auto& a = plain.snapshots.back().s.values;
    const auto& b = norm.snapshots.back().s.values;
    const double scale = *std::max_element(a.begin(), a.end());
    double worst = 0.0;
    for (std::size_t k = 0; k < 128; ++k) worst = std::max(worst, std::abs(a[k] / scale - b[k]));
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("lambda flow agrees with the rescaled plain flow") {
    CHECK(lambda_rescaling(0.0, 0.7, 1) == doctest::Approx(1.0));
    CHECK(lambda_rescaling(std::log(2.0) / 2, 1.0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(lambda_rescaling(0.4, 0.0, 2) == 1.0);

    auto g = SphereGrid::make(1, 128);
    Eigen::Matrix2d Q;
    Q << 2.0, 0.3, 0.3, 0.8;
    const SupportField s0 = ellipsoid_support(Q, g);
    StepControl plain;
    plain.t_end = 0.3;
    plain.snapshot_interval = 0.3;
    StepControl lam = plain;
    lam.lambda = 0.6;
    const Trajectory a = evolve(s0, plain), b = evolve(s0, lam);
    const double f = lambda_rescaling(0.3, 0.6, 1);
    double worst = 0.0;
    for (std::size_t k = 0; k < 128; ++k)
      worst = std::max(worst, std::abs(a.snapshots.back().s.values[k] - f * b.snapshots.back().s.values[k]));
    CHECK(worst <= 1e-8);
  }

  TEST_CASE("control validation and names") {
    StepControl c;
    c.cfl = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = StepControl{};
    c.snapshot_interval = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(scheme_from_string("rk4") == Scheme::RK4);
    CHECK(scheme_from_string("heun") == Scheme::Heun);
    CHECK_THROWS_AS(scheme_from_string("euler"), ConfigError);
    for (auto t : {Termination::ReachedTEnd, Termination::Extinction, Termination::Blowup,
                   Termination::ConvexityLost, Termination::NumericalBlowup})
      CHECK(termination_from_string(to_string(t)) == t);
  }

  TEST_CASE("evolve records a guard failure instead of throwing") {
    auto g = SphereGrid::make(1, 64);
    std::vector<double> v(64);
    for (std::size_t k = 0; k < 64; ++k) v[k] = 1.0 + 0.9 * std::cos(2 * g->theta(k));
    const Trajectory t = evolve(SupportField(g, v), StepControl{});
    CHECK(t.termination == Termination::ConvexityLost);
    CHECK_FALSE(t.message.empty());
  }
}
