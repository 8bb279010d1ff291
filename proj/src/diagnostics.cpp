#include "caflow/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "caflow/errors.hpp"
#include "caflow/oracles.hpp"

namespace caflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double relative_residual(double lhs, double rhs) {
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-6});
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

// Chart gradient of one component of a per-node vector/matrix field.
template <class F>
std::array<std::vector<double>, 2> gradient_of(const SphereGrid& grid, std::size_t nodes, F&& get) {
  std::vector<double> comp(nodes);
  for (std::size_t k = 0; k < nodes; ++k) comp[k] = get(k);
  return chart_gradient(grid, comp);
}

double time_derivative_at(const std::vector<SnapshotAnalysis>& a, std::size_t k,
                          const std::function<double(const SnapshotAnalysis&)>& f) {
  const std::vector<double> t = {a[k - 1].t, a[k].t, a[k + 1].t};
  const std::vector<double> v = {f(a[k - 1]), f(a[k]), f(a[k + 1])};
  return centred_difference(t, v, 1);
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::HoldsWithinTol: return "HoldsWithinTol";
    case Verdict::Violated: return "Violated";
  }
  return "Unknown";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Shrinking: return "Shrinking";
    case Classification::Expanding: return "Expanding";
    case Classification::Stationary: return "Stationary";
    case Classification::Undetermined: return "Undetermined";
  }
  return "Unknown";
}

double BoundCheck::min_margin() const {
  return margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end());
}

BoundCheck verdict_from_margins(std::string name, std::vector<double> times,
                                std::vector<double> margins, double tolerance) {
  BoundCheck b;
  b.name = std::move(name);
  b.times = std::move(times);
  b.margins = std::move(margins);
  b.tolerance = tolerance;
  const double m = b.min_margin();
  if (std::isnan(m)) {
    b.verdict = Verdict::Violated;
    b.note = "non-finite margin";
  } else if (m >= 0.0) {
    b.verdict = Verdict::Holds;
  } else if (m >= -tolerance) {
    b.verdict = Verdict::HoldsWithinTol;
  } else {
    b.verdict = Verdict::Violated;
  }
  return b;
}

SnapshotAnalysis analyze_snapshot(const FlowState& state, double lambda) {
  SnapshotAnalysis a;
  a.t = state.t;
  a.state = state;
  const Derivatives d = differentiate(state.s);
  a.radii = radii_and_curvature(state.s, d);
  for (const Vec2& g : d.grad) a.max_grad_s = std::max(a.max_grad_s, g.norm());
  a.inv = compute_invariants(state.s);
  a.s_t = rhs(state.s, lambda);
  a.V = tangential_velocity(state.s, a.s_t, a.inv, lambda);
  a.roundness = best_fit_ellipsoid(state.s).roundness;
  return a;
}

std::vector<SnapshotAnalysis> analyze_trajectory(const Trajectory& traj, unsigned threads) {
  const std::size_t count = traj.snapshots.size();
  std::vector<SnapshotAnalysis> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        out[k] = analyze_snapshot(traj.snapshots[k], traj.control.lambda);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::pair<BoundCheck, BoundCheck> check_c0(const Trajectory& traj, double rel_tol) {
  if (traj.control.renormalize || traj.snapshots.empty()) {
    BoundCheck up, lo;
    up.name = "c0_upper";
    lo.name = "c0_lower";
    up.skipped = lo.skipped = true;
    up.note = lo.note = traj.snapshots.empty() ? "no snapshots" : "renormalised trajectory";
    return {up, lo};
  }
  const int n = traj.snapshots.front().s.dim();
  const double k = (n + 1.0) / n;
  const auto& s0 = traj.snapshots.front().s.values;
  const double s0max = max_of(s0), s0min = min_of(s0);
  std::vector<double> times, mu, ml;
  for (const FlowState& st : traj.snapshots) {
    const double grow = std::exp(k * st.t);
    const double upper = std::max(std::pow(s0max, grow), 1.0);
    const double lower = std::min(std::pow(s0min, grow), 1.0);
    times.push_back(st.t);
    mu.push_back((upper - max_of(st.s.values)) / upper);
    ml.push_back((min_of(st.s.values) - lower) / std::max(lower, 1e-300));
  }
  return {verdict_from_margins("c0_upper", times, mu, rel_tol),
          verdict_from_margins("c0_lower", times, ml, rel_tol)};
}

BoundCheck check_c1(const Trajectory& traj, const std::vector<SnapshotAnalysis>& a, double tol) {
  std::vector<double> times, margins;
  double running = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    running = std::max(running, max_of(traj.snapshots[k].s.values));
    times.push_back(a[k].t);
    margins.push_back(running - a[k].max_grad_s);
  }
  return verdict_from_margins("c1_gradient", times, margins, tol);
}

PinchResult check_pinch(const Trajectory& traj, const std::vector<SnapshotAnalysis>& a) {
  PinchResult r;
  std::vector<double> times, margins;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const double floor = traj.control.stops.convexity_floor;
  for (const SnapshotAnalysis& s : a) {
    const double e_lo = min_of(s.radii.eig_min), e_hi = max_of(s.radii.eig_max);
    lo = std::min(lo, e_lo);
    hi = std::max(hi, e_hi);
    times.push_back(s.t);
    margins.push_back(e_lo - floor);
  }
  r.check = verdict_from_margins("pinch", times, margins, 0.0);
  r.L = a.empty() ? 1.0 : std::max(hi, 1.0 / lo);
  r.check.note = "L = " + std::to_string(r.L);
  return r;
}

double centred_difference(const std::vector<double>& t, const std::vector<double>& f, std::size_t k) {
  const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
  return -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] +
         h1 / (h2 * (h1 + h2)) * f[k + 1];
}

AreaLaw check_area_law(const std::vector<SnapshotAnalysis>& a, double monotone_tol) {
  AreaLaw r;
  const std::size_t m = a.size();
  std::vector<double> t(m);
  for (std::size_t k = 0; k < m; ++k) {
    const SnapshotAnalysis& s = a[k];
    const int n = s.inv.n;
    const auto w = s.state.s.grid->chart_weights();
    double integral = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) integral += w[p] * s.inv.norm_T2[p] * s.inv.sqrt_det_g[p];
    t[k] = s.t;
    r.area.push_back(s.inv.area);
    r.area_rhs.push_back(0.5 * n * integral);
  }
  std::vector<double> tm, mm, ti, mi, tiso, miso;
  r.rel_residual.assign(m, kNaN);
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0) {
      tm.push_back(t[k]);
      mm.push_back(r.area[k] - r.area[k - 1]);
    }
    if (k > 0 && k + 1 < m) {
      const double lhs = centred_difference(t, r.area, k);
      ti.push_back(t[k]);
      mi.push_back(0.05 * std::abs(r.area_rhs[k]) + 1e-6 - std::abs(lhs - r.area_rhs[k]));
      r.rel_residual[k] = relative_residual(lhs, r.area_rhs[k]);
    }
    const int n = a[k].inv.n;
    tiso.push_back(t[k]);
    miso.push_back(sphere_measure(n) + 1e-6 - r.area[k]);
  }
  r.monotone = verdict_from_margins("area_monotone", tm, mm, monotone_tol);
  r.identity = verdict_from_margins("area_identity", ti, mi, 0.0);
  r.isoperimetric = verdict_from_margins("area_isoperimetric", tiso, miso, 0.0);
  return r;
}

TchebychevLaws check_tchebychev_laws(const std::vector<SnapshotAnalysis>& a, double decay_ratio,
                                     double decay_horizon) {
  TchebychevLaws r;
  const std::size_t m = a.size();
  if (m == 0) return r;
  const int n = a.front().inv.n;
  std::vector<double> t(m), sup(m);
  for (std::size_t k = 0; k < m; ++k) {
    t[k] = a[k].t;
    sup[k] = max_of(a[k].inv.norm_T2);
  }
  r.bound_constant = std::max((n + 3.0) / n, sup[0]);
  std::vector<double> margins(m);
  for (std::size_t k = 0; k < m; ++k) margins[k] = r.bound_constant - sup[k];
  r.bound = verdict_from_margins("tchebychev_bound", t, margins, 1e-8);
  r.bound.note = sup[0] > (n + 3.0) / n ? "initial-maximum branch" : "(n+3)/n branch";

  const double decay_margin = sup[0] <= 1e-10 ? 0.0 : decay_ratio * sup[0] - sup[m - 1];
  r.decay = verdict_from_margins("tchebychev_decay", {t[m - 1]}, {decay_margin}, 0.0);
  if (t[m - 1] - t[0] < decay_horizon) {
    r.decay.verdict = Verdict::Holds;
    r.decay.skipped = true;
    r.decay.note = "run shorter than the decay horizon";
  }

  r.identity_residual.assign(m, kNaN);
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const SnapshotAnalysis& s = a[k];
    const SphereGrid& grid = *s.state.s.grid;
    const std::size_t p = argmax(s.inv.norm_T2);
    const auto dT2 = chart_gradient(grid, s.inv.norm_T2);
    const auto dH = chart_gradient(grid, s.inv.H);
    const Vec2 Tup = s.inv.g_inv[p] * s.inv.T_low[p];
    const double lhs = time_derivative_at(a, k, [p](const SnapshotAnalysis& x) { return x.inv.norm_T2[p]; }) +
                       s.V[p](0) * dT2[0][p] + (n == 2 ? s.V[p](1) * dT2[1][p] : 0.0);
    double cubic = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < n; ++c) cubic += s.inv.C_low[p][c](i, j) * Tup(i) * Tup(j) * Tup(c);
    double TH = 0.0;
    for (int i = 0; i < n; ++i) TH += Tup(i) * dH[i][p];
    const double rhs = TH + 2.0 * (1.0 + 1.0 / n) * s.inv.norm_T2[p] - cubic;
    r.identity_residual[k] = relative_residual(lhs, rhs);
  }
  return r;
}

EvolutionIdentities check_evolution_identities(const std::vector<SnapshotAnalysis>& a) {
  EvolutionIdentities r;
  const std::size_t m = a.size();
  r.metric.assign(m, kNaN);
  r.inverse_metric.assign(m, kNaN);
  r.tchebychev.assign(m, kNaN);
  r.combined.assign(m, kNaN);
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const SnapshotAnalysis& s = a[k];
    const int n = s.inv.n;
    const SphereGrid& grid = *s.state.s.grid;
    const std::size_t nodes = s.state.s.size();
    const std::size_t p = argmax(s.inv.norm_T2);
    const InvariantFields& inv = s.inv;

    // ∂_k V^l, ∂_k T_i, ∂_k log det g, ∂_k g^ij, ∂_k H
    std::array<std::array<std::vector<double>, 2>, 2> dV, dT;
    for (int l = 0; l < n; ++l) {
      dV[l] = gradient_of(grid, nodes, [&](std::size_t q) { return s.V[q](l); });
      dT[l] = gradient_of(grid, nodes, [&](std::size_t q) { return inv.T_low[q](l); });
    }
    const auto dlogdet =
        gradient_of(grid, nodes, [&](std::size_t q) { return std::log(metric_det(inv.g[q], n)); });
    std::array<std::array<std::array<std::vector<double>, 2>, 2>, 2> dginv;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dginv[i][j] = gradient_of(grid, nodes, [&](std::size_t q) { return inv.g_inv[q](i, j); });
    const auto dH = chart_gradient(grid, inv.H);

    double divV = 0.0;
    for (int l = 0; l < n; ++l) divV += dV[l][l][p];
    const double T2 = inv.norm_T2[p];
    const Vec2 Tup = inv.g_inv[p] * inv.T_low[p];

    // (1) traced with g^ij.
    double lhs1 = time_derivative_at(a, k, [p, n](const SnapshotAnalysis& x) {
      return std::log(metric_det(x.inv.g[p], n));
    });
    for (int l = 0; l < n; ++l) lhs1 += s.V[p](l) * dlogdet[l][p];
    lhs1 += 2.0 * divV;
    const double rhs1 = n * T2;

    // (2) contracted with g_iq.
    double lhs2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double dt = time_derivative_at(
            a, k, [p, i, j](const SnapshotAnalysis& x) { return x.inv.g_inv[p](i, j); });
        double lie = 0.0;
        for (int l = 0; l < n; ++l) lie += s.V[p](l) * dginv[i][j][l][p];
        lhs2 += inv.g[p](i, j) * (dt + lie);
      }
    lhs2 -= 2.0 * divV;
    const double rhs2 = -n * T2;

    // (5) contracted with T^i.
    double lhs5 = 0.0, rhs5 = (1.0 + 1.0 / n) * T2;
    for (int i = 0; i < n; ++i) {
      double val = time_derivative_at(a, k, [p, i](const SnapshotAnalysis& x) { return x.inv.T_low[p](i); });
      for (int l = 0; l < n; ++l) val += s.V[p](l) * dT[i][l][p] + inv.T_low[p](l) * dV[l][i][p];
      lhs5 += Tup(i) * val;
      rhs5 += 0.5 * Tup(i) * dH[i][p];
    }

    r.metric[k] = relative_residual(lhs1, rhs1);
    r.inverse_metric[k] = relative_residual(lhs2, rhs2);
    r.tchebychev[k] = relative_residual(lhs5, rhs5);
    r.combined[k] = std::max({r.metric[k], r.inverse_metric[k], r.tchebychev[k]});
  }
  return r;
}

Classification classify(const Trajectory& traj) {
  if (traj.snapshots.empty() || traj.control.renormalize) return Classification::Undetermined;
  if (traj.termination == Termination::Extinction) return Classification::Shrinking;
  if (traj.termination == Termination::Blowup) return Classification::Expanding;
  const auto& first = traj.snapshots.front().s.values;
  const auto& last = traj.snapshots.back().s.values;
  const double max0 = max_of(first), min0 = min_of(first);

  double drift = 0.0;
  bool monotone = true;
  double prev = max0;
  for (const FlowState& st : traj.snapshots) {
    for (std::size_t k = 0; k < first.size(); ++k) drift = std::max(drift, std::abs(st.s.values[k] - first[k]));
    const double mx = max_of(st.s.values);
    if (mx > prev * (1.0 + 1e-12)) monotone = false;
    prev = mx;
  }
  if (monotone && max_of(last) <= 0.5 * max0) return Classification::Shrinking;
  if (min_of(last) >= 2.0 * min0) return Classification::Expanding;
  if (drift <= 1e-6 * max0) return Classification::Stationary;
  return Classification::Undetermined;
}

bool DiagnosticsReport::any_violated() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const BoundCheck& b) { return !b.skipped && b.verdict == Verdict::Violated; });
}

DiagnosticsReport diagnose(const Trajectory& traj, unsigned threads) {
  DiagnosticsReport r;
  const std::vector<SnapshotAnalysis> a = analyze_trajectory(traj, threads);
  auto [up, lo] = check_c0(traj);
  r.checks.push_back(up);
  r.checks.push_back(lo);
  r.checks.push_back(check_c1(traj, a));
  PinchResult pinch = check_pinch(traj, a);
  r.pinch_L = pinch.L;
  r.checks.push_back(pinch.check);
  r.area = check_area_law(a);
  r.checks.push_back(r.area.monotone);
  r.checks.push_back(r.area.identity);
  r.checks.push_back(r.area.isoperimetric);
  r.tchebychev = check_tchebychev_laws(a);
  r.checks.push_back(r.tchebychev.bound);
  r.checks.push_back(r.tchebychev.decay);
  r.identities = check_evolution_identities(a);
  r.classification = classify(traj);

  for (std::size_t k = 0; k < a.size(); ++k) {
    const SnapshotAnalysis& s = a[k];
    SeriesRow row{};
    row.t = s.t;
    row.area = r.area.area[k];
    row.area_rhs = r.area.area_rhs[k];
    row.supT2 = max_of(s.inv.norm_T2);
    row.supC2 = max_of(s.inv.norm_C2);
    row.min_s = min_of(s.state.s.values);
    row.max_s = max_of(s.state.s.values);
    row.eig_min_b = min_of(s.radii.eig_min);
    row.eig_max_b = max_of(s.radii.eig_max);
    row.rho_min = min_of(s.inv.rho);
    row.rho_max = max_of(s.inv.rho);
    row.roundness = s.roundness;
    row.residual_relsupport = s.inv.relsupport_residual;
    row.residual_prop21 = r.identities.combined[k];
    r.series.push_back(row);
  }
  return r;
}

}  // namespace caflow
