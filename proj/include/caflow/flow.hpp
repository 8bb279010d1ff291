#pragma once
// Explicit time integration of s_t = (s/2n) log(s^{n+2} det(∇̄²s + sI)) + λs.
// n = 2 is advanced in the face variables u_F = sqrt(1+|y|^2) s.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "caflow/sphere_calculus.hpp"

namespace caflow {

struct StopConditions {
  double extinction_radius = 1e-3;
  double blowup_radius = 1e3;
  double convexity_floor = 1e-10;
};

enum class Scheme { RK4, Heun };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);  // ConfigError on unknown names

struct StepControl {
  double cfl = 0.2;
  double dt_max = 1e-2;
  double t_end = 1.0;
  double snapshot_interval = 0.1;
  StopConditions stops;
  Scheme scheme = Scheme::RK4;
  double lambda = 0.0;
  // Upper bound on |Δ log s| per step.
  double max_log_change = 0.02;
  // Rescale to max s = 1 at every snapshot (tracked in FlowState::log_scale).
  bool renormalize = false;

  void validate() const;  // ConfigError
};

struct FlowState {
  double t = 0.0;
  SupportField s;
  long step_count = 0;
  double last_dt = 0.0;
  // Accumulated log of the factors divided out by renormalisation.
  double log_scale = 0.0;
};

enum class Termination { ReachedTEnd, Extinction, Blowup, ConvexityLost, NumericalBlowup };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view name);

struct Trajectory {
  std::vector<FlowState> snapshots;
  Termination termination = Termination::ReachedTEnd;
  std::string message;
  StepControl control;
};

// ∂s/∂t per node. Throws ConvexityLost / OriginCrossed / NumericalBlowup.
std::vector<double> rhs(const SupportField& s, double lambda = 0.0);
// n = 2 only: ∂u_F/∂t per node from the chart equation.
std::vector<double> face_rhs(const SupportField& s, double lambda = 0.0);

double stable_dt(const SupportField& s, const StepControl& control);

// Advances by dt, sub-stepping if dt exceeds stable_dt. Every stage must keep
// s > 0 and det b > 0.
FlowState step(const FlowState& state, double dt, const StepControl& control);

using SnapshotHook = std::function<void(const FlowState&)>;

// Never throws for flow failures; they end up in Trajectory::termination.
Trajectory evolve(const SupportField& s0, const StepControl& control, const SnapshotHook& hook = {});

// f(t) = exp((nλ/(n+1))(1 - exp(((n+1)/n) t))); X_{λ=0} = f X_λ.
double lambda_rescaling(double t, double lambda, int n);

}  // namespace caflow
