#include "caflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caflow/errors.hpp"
#include "caflow/kernels.hpp"

namespace caflow {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k])) throw NumericalBlowup(what, k, v[k]);
}

// One explicit step of size dt (no stability check).
FlowState advance(const FlowState& st, double dt, const StepControl& c) {
  const GridPtr& grid = st.s.grid;
  const std::vector<double>& y0 = st.s.values;
  const std::size_t n = y0.size();

  auto eval = [&](std::vector<double> v) {
    synchronize_shared(*grid, v);
    require_finite(v, "non-finite stage value");
    return rhs(SupportField(grid, std::move(v)), c.lambda);
  };

  std::vector<double> out(n), tmp(n);
  const auto& kt = kernels::active();
  const std::vector<double> k1 = rhs(st.s, c.lambda);
  if (c.scheme == Scheme::RK4) {
    kt.lincomb(y0.data(), 0.5 * dt, k1.data(), tmp.data(), n);
    const std::vector<double> k2 = eval(tmp);
    kt.lincomb(y0.data(), 0.5 * dt, k2.data(), tmp.data(), n);
    const std::vector<double> k3 = eval(tmp);
    kt.lincomb(y0.data(), dt, k3.data(), tmp.data(), n);
    const std::vector<double> k4 = eval(tmp);
    kt.lincomb4(y0.data(), dt / 6.0, k1.data(), dt / 3.0, k2.data(), dt / 3.0, k3.data(), dt / 6.0,
                k4.data(), out.data(), n);
  } else {
    kt.lincomb(y0.data(), dt, k1.data(), tmp.data(), n);
    const std::vector<double> k2 = eval(tmp);
    kt.lincomb4(y0.data(), 0.5 * dt, k1.data(), 0.5 * dt, k2.data(), 0.0, k1.data(), 0.0, k1.data(),
                out.data(), n);
  }
  synchronize_shared(*grid, out);
  require_finite(out, "non-finite support value");

  FlowState next;
  next.s = SupportField(grid, std::move(out));
  next.s.require_positive();
  radii_and_curvature(next.s);
  next.t = st.t + dt;
  next.step_count = st.step_count + 1;
  next.last_dt = dt;
  next.log_scale = st.log_scale;
  return next;
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::RK4 ? "rk4" : "heun"; }

Scheme scheme_from_string(std::string_view name) {
  if (name == "rk4" || name == "RK4") return Scheme::RK4;
  if (name == "heun" || name == "Heun") return Scheme::Heun;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (expected rk4 or heun)");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "ReachedTEnd";
    case Termination::Extinction: return "Extinction";
    case Termination::Blowup: return "Blowup";
    case Termination::ConvexityLost: return "ConvexityLost";
    case Termination::NumericalBlowup: return "NumericalBlowup";
  }
  return "Unknown";
}

Termination termination_from_string(std::string_view name) {
  for (Termination t : {Termination::ReachedTEnd, Termination::Extinction, Termination::Blowup,
                        Termination::ConvexityLost, Termination::NumericalBlowup})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown termination status '" + std::string(name) + "'");
}

void StepControl::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  positive(dt_max, "dt_max");
  positive(t_end, "t_end");
  positive(snapshot_interval, "snapshot_interval");
  positive(stops.extinction_radius, "extinction_radius");
  positive(stops.blowup_radius, "blowup_radius");
  positive(stops.convexity_floor, "convexity_floor");
  positive(max_log_change, "max_log_change");
  if (!(stops.extinction_radius < stops.blowup_radius))
    throw ConfigError("extinction_radius must be below blowup_radius");
  if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
}

std::vector<double> face_rhs(const SupportField& s, double lambda) {
  if (s.dim() != 2) throw Unsupported("face_rhs is defined for n = 2 only");
  s.require_positive();
  const Derivatives d = differentiate(s);
  std::vector<double> ut(s.size());
  for (std::size_t k = 0; k < ut.size(); ++k) {
    const Mat2& h = d.d2u[k];
    const double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    if (!(det > 0.0) || !(h(0, 0) > 0.0)) throw ConvexityLost("det D^2u not positive", k, det);
    const double u = s.grid->chart_w(k) * s.values[k];
    ut[k] = 0.25 * u * std::log(det) + u * std::log(u) + lambda * u;
  }
  return ut;
}

std::vector<double> rhs(const SupportField& s, double lambda) {
  require_finite(s.values, "non-finite support value");
  s.require_positive();
  std::vector<double> out(s.size());
  if (s.dim() == 2) {
    out = face_rhs(s, lambda);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= s.grid->chart_w(k);
    return out;
  }
  const Derivatives d = differentiate(s);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double v = s.values[k];
    const double b = d.hess[k](0, 0) + v;
    const double arg = v * v * v * b;
    if (!(arg > 0.0)) throw ConvexityLost("log argument not positive", k, arg);
    out[k] = 0.5 * v * std::log(arg) + lambda * v;
  }
  return out;
}

double stable_dt(const SupportField& s, const StepControl& control) {
  const double h = s.grid->spacing();
  const Derivatives d = differentiate(s);
  double amax = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    double a;
    if (s.dim() == 1) {
      a = s.values[k] / (2.0 * (d.hess[k](0, 0) + s.values[k]));
    } else {
      // eig_max of (u/2n)(D²u)⁻¹ in chart coordinates
      const Mat2& m = d.d2u[k];
      const double mean = 0.5 * (m(0, 0) + m(1, 1));
      const double half = 0.5 * (m(0, 0) - m(1, 1));
      const double lo = mean - std::sqrt(half * half + m(0, 1) * m(0, 1));
      a = 0.25 * s.grid->chart_w(k) * s.values[k] / lo;
    }
    if (!(a > 0.0)) throw ConvexityLost("diffusion coefficient not positive", k, a);
    amax = std::max(amax, a);
  }
  return std::min(control.dt_max, control.cfl * h * h / amax);
}

FlowState step(const FlowState& state, double dt, const StepControl& control) {
  if (!(dt > 0.0)) throw ConfigError("step size must be positive");
  FlowState cur = state;
  double remaining = dt;
  while (remaining > 0.0) {
    double h = std::min(remaining, stable_dt(cur.s, control));
    if (remaining - h <= 1e-12 * dt) h = remaining;
    cur = advance(cur, h, control);
    remaining -= h;
  }
  cur.t = state.t + dt;
  return cur;
}

Trajectory evolve(const SupportField& s0, const StepControl& c, const SnapshotHook& hook) {
  c.validate();
  Trajectory traj;
  traj.control = c;
  FlowState st;
  st.s = s0;

  auto record = [&](const FlowState& f) {
    traj.snapshots.push_back(f);
    if (hook) hook(f);
  };

  try {
    require_finite(s0.values, "non-finite initial value");
    s0.require_positive();
    radii_and_curvature(s0);
    if (c.renormalize) {
      const double m = *std::max_element(st.s.values.begin(), st.s.values.end());
      for (double& v : st.s.values) v /= m;
      st.log_scale += std::log(m);
    }
    record(st);

    long snap_index = 1;
    while (true) {
      const double next = std::min(c.t_end, snap_index * c.snapshot_interval);
      const std::vector<double> r = rhs(st.s, c.lambda);
      double rate = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) rate = std::max(rate, std::abs(r[k] / st.s.values[k]));
      double dt = stable_dt(st.s, c);
      if (rate > 0.0) dt = std::min(dt, c.max_log_change / rate);
      bool hit = false;
      if (st.t + dt >= next - 1e-12 * std::max(1.0, next)) {
        dt = next - st.t;
        hit = true;
      }
      st = advance(st, dt, c);
      if (hit) st.t = next;

      const RadiiField radii = radii_and_curvature(st.s);
      const auto hi = std::max_element(st.s.values.begin(), st.s.values.end());
      const double eig_lo = *std::min_element(radii.eig_min.begin(), radii.eig_min.end());
      bool stop = true;
      if (*hi < c.stops.extinction_radius) {
        traj.termination = Termination::Extinction;
        traj.message = "max s fell below extinction radius";
      } else if (*hi > c.stops.blowup_radius) {
        traj.termination = Termination::Blowup;
        traj.message = "max s exceeded blowup radius";
      } else if (eig_lo <= c.stops.convexity_floor) {
        traj.termination = Termination::ConvexityLost;
        traj.message = "smallest principal radius reached the convexity floor";
      } else {
        stop = false;
      }
      if (stop) {
        record(st);
        return traj;
      }
      if (hit) {
        if (c.renormalize) {
          const double m = *hi;
          for (double& v : st.s.values) v /= m;
          st.log_scale += std::log(m);
        }
        record(st);
        ++snap_index;
        if (next >= c.t_end) break;
      }
    }
    traj.termination = Termination::ReachedTEnd;
  } catch (const ConvexityLost& e) {
    traj.termination = Termination::ConvexityLost;
    traj.message = e.what();
  } catch (const OriginCrossed& e) {
    traj.termination = Termination::ConvexityLost;
    traj.message = e.what();
  } catch (const Error& e) {
    traj.termination = Termination::NumericalBlowup;
    traj.message = e.what();
  }
  if (!traj.snapshots.empty() && st.t > traj.snapshots.back().t) {
    traj.snapshots.push_back(st);
    try {
      if (hook) hook(st);
    } catch (const Error&) {
    }
  }
  return traj;
}

double lambda_rescaling(double t, double lambda, int n) {
  const double k = (n + 1.0) / n;
  return std::exp((n * lambda / (n + 1.0)) * (1.0 - std::exp(k * t)));
}

}  // namespace caflow
