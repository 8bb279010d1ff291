#pragma once
// Trajectory verdicts: a priori bounds, area and Tchebychev laws, evolution
// identities and the shrink/expand classification.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "caflow/flow.hpp"
#include "caflow/invariants.hpp"

namespace caflow {

enum class Verdict { Holds, HoldsWithinTol, Violated };
std::string_view to_string(Verdict v);

struct BoundCheck {
  std::string name;
  std::vector<double> times;
  std::vector<double> margins;  // bound minus observed
  Verdict verdict = Verdict::Holds;
  double tolerance = 0.0;
  bool skipped = false;
  std::string note;

  double min_margin() const;
};

enum class Classification { Shrinking, Expanding, Stationary, Undetermined };
std::string_view to_string(Classification c);

// Everything derived from one stored snapshot.
struct SnapshotAnalysis {
  double t = 0.0;
  FlowState state;
  InvariantFields inv;
  RadiiField radii;
  std::vector<double> s_t;
  std::vector<Vec2> V;  // tangential velocity
  double max_grad_s = 0.0;
  double roundness = 0.0;
};

SnapshotAnalysis analyze_snapshot(const FlowState& state, double lambda);
// Analyses all snapshots, in parallel.
std::vector<SnapshotAnalysis> analyze_trajectory(const Trajectory& traj, unsigned threads = 0);

BoundCheck verdict_from_margins(std::string name, std::vector<double> times,
                                std::vector<double> margins, double tolerance);

// A priori bounds. C0 returns (upper, lower).
std::pair<BoundCheck, BoundCheck> check_c0(const Trajectory& traj, double rel_tol = 1e-8);
BoundCheck check_c1(const Trajectory& traj, const std::vector<SnapshotAnalysis>& a,
                    double tol = 1e-8);

struct PinchResult {
  double L = 1.0;
  BoundCheck check;
};
PinchResult check_pinch(const Trajectory& traj, const std::vector<SnapshotAnalysis>& a);

// Centred difference of a series at index k (nonuniform spacing).
double centred_difference(const std::vector<double>& t, const std::vector<double>& f, std::size_t k);

struct AreaLaw {
  BoundCheck monotone;
  BoundCheck identity;
  BoundCheck isoperimetric;
  std::vector<double> area;
  std::vector<double> area_rhs;      // (n/2) ∫|T|² dμ
  std::vector<double> rel_residual;  // interior snapshots, NaN at the ends
};
AreaLaw check_area_law(const std::vector<SnapshotAnalysis>& a, double monotone_tol = 1e-10);

struct TchebychevLaws {
  BoundCheck bound;
  BoundCheck decay;
  double bound_constant = 0.0;
  std::vector<double> identity_residual;  // relative, at argmax |T|²; NaN at the ends
};
// Decay is judged only on runs spanning at least decay_horizon.
TchebychevLaws check_tchebychev_laws(const std::vector<SnapshotAnalysis>& a, double decay_ratio = 0.1,
                                     double decay_horizon = 1.0);

struct EvolutionIdentities {
  // Relative residuals of the scalar contractions at argmax |T|²; NaN at the ends.
  std::vector<double> metric;          // trace of ∂_t g_ij = T_p C^p_ij
  std::vector<double> inverse_metric;  // g_iq contraction of ∂_t g^iq = -T_p C^piq
  std::vector<double> tchebychev;      // T^i contraction of ∂_t T_i = (1+1/n)T_i + ½H_i
  std::vector<double> combined;        // max of the three
};
EvolutionIdentities check_evolution_identities(const std::vector<SnapshotAnalysis>& a);

Classification classify(const Trajectory& traj);

struct SeriesRow {
  double t, area, area_rhs, supT2, supC2, min_s, max_s, eig_min_b, eig_max_b, rho_min, rho_max,
      roundness, residual_relsupport, residual_prop21;
};

struct DiagnosticsReport {
  std::vector<BoundCheck> checks;
  Classification classification = Classification::Undetermined;
  double pinch_L = 1.0;
  std::vector<SeriesRow> series;
  AreaLaw area;
  TchebychevLaws tchebychev;
  EvolutionIdentities identities;
  bool any_violated() const;
};

DiagnosticsReport diagnose(const Trajectory& traj, unsigned threads = 0);

}  // namespace caflow
