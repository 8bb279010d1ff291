#include "caflow/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "caflow/diagnostics.hpp"
#include "caflow/errors.hpp"
#include "caflow/invariants.hpp"
#include "caflow/kernels.hpp"
#include "caflow/oracles.hpp"

namespace caflow {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;
constexpr int kExitGuard = 3;

const std::set<std::string> kConfigKeys = {
    "n",      "resolution", "initial",        "scheme",     "cfl",          "dt_max",
    "t_end",  "snapshot_interval", "lambda",  "renormalize", "max_log_change", "stops",
    "seed",   "output_dir", "oracle_tolerance", "threads"};

void reject_unknown(const json& doc, const std::set<std::string>& keys, const std::string& where) {
  for (const auto& [k, v] : doc.items())
    if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(m.cols())) throw ConfigError("ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

InitialSpec parse_initial(const json& j, int n) {
  InitialSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ellipsoid") {
    reject_unknown(j, {"kind", "Q", "radius", "semi_axes"}, "initial");
    const int given = static_cast<int>(j.contains("Q")) + static_cast<int>(j.contains("radius")) +
                      static_cast<int>(j.contains("semi_axes"));
    if (given != 1) throw ConfigError("ellipsoid needs exactly one of Q, radius, semi_axes");
    const int d = n + 1;
    if (j.contains("Q")) {
      spec.Q = matrix_from_json(j.at("Q"));
    } else if (j.contains("radius")) {
      const double R = j.at("radius").get<double>();
      if (!(R > 0.0)) throw ConfigError("radius must be positive");
      spec.Q = R * R * Eigen::MatrixXd::Identity(d, d);
    } else {
      const auto ax = j.at("semi_axes").get<std::vector<double>>();
      if (static_cast<int>(ax.size()) != d) throw ConfigError("semi_axes needs n+1 entries");
      spec.Q = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        if (!(ax[i] > 0.0)) throw ConfigError("semi_axes must be positive");
        spec.Q(i, i) = ax[i] * ax[i];
      }
    }
    if (spec.Q.rows() != d || spec.Q.cols() != d) throw ConfigError("Q must be (n+1)x(n+1)");
    EllipsoidSpec::from_shape(spec.Q);
  } else if (kind == "fourier") {
    reject_unknown(j, {"kind", "c0", "a", "b"}, "initial");
    if (n != 1) throw ConfigError("fourier initial data needs n = 1");
    spec.kind = InitialSpec::Kind::Fourier;
    spec.c0 = j.value("c0", 1.0);
    spec.a = j.value("a", std::vector<double>{});
    spec.b = j.value("b", std::vector<double>{});
    validate_fourier(spec);
  } else if (kind == "file") {
    reject_unknown(j, {"kind", "path"}, "initial");
    spec.kind = InitialSpec::Kind::File;
    spec.path = j.at("path").get<std::string>();
  } else {
    throw ConfigError("unknown initial kind '" + kind + "'");
  }
  return spec;
}

json initial_to_json(const InitialSpec& spec) {
  switch (spec.kind) {
    case InitialSpec::Kind::Ellipsoid: return {{"kind", "ellipsoid"}, {"Q", matrix_to_json(spec.Q)}};
    case InitialSpec::Kind::Fourier:
      return {{"kind", "fourier"}, {"c0", spec.c0}, {"a", spec.a}, {"b", spec.b}};
    case InitialSpec::Kind::File: return {{"kind", "file"}, {"path", spec.path}};
  }
  return {};
}

double fourier_value(const InitialSpec& spec, double th, int derivative) {
  double v = derivative == 0 ? spec.c0 : 0.0;
  const std::size_t kmax = std::max(spec.a.size(), spec.b.size());
  for (std::size_t i = 0; i < kmax; ++i) {
    const double k = static_cast<double>(i + 1);
    const double a = i < spec.a.size() ? spec.a[i] : 0.0;
    const double b = i < spec.b.size() ? spec.b[i] : 0.0;
    const double c = std::cos(k * th), s = std::sin(k * th);
    v += derivative == 0 ? a * c + b * s : -k * k * (a * c + b * s);
  }
  return v;
}

std::string read_error_free(const std::function<void()>& f) {
  try {
    f();
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

json check_to_json(const BoundCheck& b) {
  return {{"name", b.name},
          {"verdict", std::string(to_string(b.verdict))},
          {"min_margin", b.min_margin()},
          {"tolerance", b.tolerance},
          {"skipped", b.skipped},
          {"note", b.note}};
}

json nan_safe(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return out;
}

// Computes the CSV series; on failure only the support columns are filled.
std::vector<SeriesRow> safe_series(const Trajectory& traj, unsigned threads) {
  try {
    return diagnose(traj, threads).series;
  } catch (const Error&) {
    std::vector<SeriesRow> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const FlowState& st : traj.snapshots) {
      SeriesRow r{};
      r.t = st.t;
      r.area = r.area_rhs = r.supT2 = r.supC2 = r.eig_min_b = r.eig_max_b = nan;
      r.rho_min = r.rho_max = r.roundness = r.residual_relsupport = r.residual_prop21 = nan;
      r.min_s = *std::min_element(st.s.values.begin(), st.s.values.end());
      r.max_s = *std::max_element(st.s.values.begin(), st.s.values.end());
      rows.push_back(r);
    }
    return rows;
  }
}

struct RunOutcome {
  Trajectory traj;
  std::string hash;
  fs::path dir;
};

RunOutcome run_and_store(const RunConfig& cfg) {
  RunOutcome out;
  out.hash = config_hash(cfg);
  out.dir = resolve_output(cfg.output_dir);
  const SupportField s0 = build_initial(cfg);
  const auto start = std::chrono::steady_clock::now();
  out.traj = evolve(s0, cfg.control);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out.dir);
  json names = json::array();
  for (std::size_t k = 0; k < out.traj.snapshots.size(); ++k) {
    names.push_back(snapshot_name(k));
    write_text_file(out.dir / snapshot_name(k), snapshot_to_json(out.traj.snapshots[k], out.hash).dump());
  }
  write_text_file(out.dir / "series.csv", series_csv(safe_series(out.traj, cfg.threads), out.hash));
  json meta;
  meta["config"] = run_config_to_json(cfg);
  meta["config_hash"] = out.hash;
  meta["step_control"] = step_control_to_json(cfg.control);
  meta["termination"] = std::string(to_string(out.traj.termination));
  meta["message"] = out.traj.message;
  meta["snapshots"] = names;
  meta["wall_time_s"] = wall;
  meta["cfl"] = cfg.control.cfl;
  meta["steps"] = out.traj.snapshots.empty() ? 0L : out.traj.snapshots.back().step_count;
  meta["kernel"] = std::string(kernels::active().name);
  write_text_file(out.dir / "metadata.json", meta.dump(2));
  return out;
}

int exit_for(Termination t) {
  return (t == Termination::ConvexityLost || t == Termination::NumericalBlowup) ? kExitGuard : kExitOk;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void validate_fourier(const InitialSpec& spec) {
  constexpr int kSamples = 4096;
  for (int i = 0; i < kSamples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kSamples;
    const double s = fourier_value(spec, th, 0);
    const double b = s + fourier_value(spec, th, 2);
    if (!(s > 0.0)) throw ConfigError("fourier datum is not positive at theta = " + std::to_string(th));
    if (!(b > 0.0))
      throw ConfigError("fourier datum is not strictly convex (s + s'' = " + std::to_string(b) +
                        " at theta = " + std::to_string(th) + ")");
  }
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(doc, kConfigKeys, "configuration");
  RunConfig cfg;
  try {
    cfg.n = doc.value("n", 1);
    if (cfg.n != 1 && cfg.n != 2) throw ConfigError("n must be 1 or 2");
    cfg.resolution = doc.value("resolution", cfg.n == 1 ? 256 : 33);
    cfg.control = step_control_from_json(doc);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.oracle_tolerance = doc.value("oracle_tolerance", cfg.oracle_tolerance);
    cfg.threads = doc.value("threads", 0u);
    if (!doc.contains("initial")) throw ConfigError("missing 'initial'");
    cfg.initial = parse_initial(doc.at("initial"), cfg.n);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  SphereGrid::make(cfg.n, cfg.resolution);  // validates the resolution
  if (!(cfg.oracle_tolerance > 0.0)) throw ConfigError("oracle_tolerance must be positive");
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json j = step_control_to_json(cfg.control);
  j["n"] = cfg.n;
  j["resolution"] = cfg.resolution;
  j["initial"] = initial_to_json(cfg.initial);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["oracle_tolerance"] = cfg.oracle_tolerance;
  j["threads"] = cfg.threads;
  return j;
}

std::string config_hash(const RunConfig& cfg) {
  json j = run_config_to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  return git_blob_hash(j.dump());
}

SupportField build_initial(const RunConfig& cfg) {
  SupportField s;
  switch (cfg.initial.kind) {
    case InitialSpec::Kind::Ellipsoid:
      s = ellipsoid_support(cfg.initial.Q, SphereGrid::make(cfg.n, cfg.resolution));
      break;
    case InitialSpec::Kind::Fourier: {
      validate_fourier(cfg.initial);
      auto grid = SphereGrid::make(1, cfg.resolution);
      std::vector<double> v(grid->node_count());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = fourier_value(cfg.initial, grid->theta(k), 0);
      s = SupportField(grid, std::move(v));
      break;
    }
    case InitialSpec::Kind::File: {
      s = snapshot_from_json(read_json_file(cfg.initial.path)).s;
      if (s.dim() != cfg.n || s.grid->resolution() != cfg.resolution)
        throw ConfigError("snapshot file does not match n/resolution of the configuration");
      break;
    }
  }
  try {
    radii_and_curvature(s);
  } catch (const NodeError& e) {
    throw ConfigError(std::string("initial datum rejected: ") + e.what());
  }
  return s;
}

fs::path resolve_output(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("CAFLOW_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  }
  return p;
}

void set_json_path(json& doc, const std::string& path, const json& value) {
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty parameter path");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError("parameter path '" + path + "' crosses a non-object");
    node = &(*node)[parts[i]];
  }
  if (!node->is_object() && !node->is_null())
    throw ConfigError("parameter path '" + path + "' crosses a non-object");
  (*node)[parts.back()] = value;
}

SweepSpec parse_sweep_spec(const json& doc) {
  SweepSpec spec;
  try {
    reject_unknown(doc, {"base", "axes", "parallelism", "cap", "output_dir"}, "sweep");
    spec.base = doc.at("base");
    spec.parallelism = std::max(1u, doc.value("parallelism", 1u));
    spec.cap = doc.value("cap", spec.cap);
    spec.output_dir = doc.value("output_dir", spec.output_dir);
    for (const json& a : doc.value("axes", json::array())) {
      SweepAxis axis;
      axis.path = a.at("path").get<std::string>();
      axis.values = a.at("values").get<std::vector<json>>();
      if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.path + "' has no values");
      spec.axes.push_back(std::move(axis));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep: ") + e.what());
  }
  std::size_t size = 1;
  for (const SweepAxis& a : spec.axes) size *= a.values.size();
  if (size > spec.cap)
    throw ConfigError("sweep has " + std::to_string(size) + " cells, cap is " + std::to_string(spec.cap));
  parse_run_config(spec.base);
  return spec;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  std::vector<std::vector<json>> cells(1);
  for (const SweepAxis& axis : spec.axes) {
    std::vector<std::vector<json>> next;
    for (const auto& prefix : cells)
      for (const json& v : axis.values) {
        next.push_back(prefix);
        next.back().push_back(v);
      }
    cells = std::move(next);
  }
  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      SweepRow& row = rows[c];
      row.params = cells[c];
      row.error = read_error_free([&] {
        json doc = spec.base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) set_json_path(doc, spec.axes[a].path, cells[c][a]);
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu", c);
        doc["output_dir"] = (fs::path(spec.output_dir) / name).string();
        doc["threads"] = 1;
        const RunConfig cfg = parse_run_config(doc);
        const RunOutcome out = run_and_store(cfg);
        row.termination = std::string(to_string(out.traj.termination));
        row.classification = std::string(to_string(classify(out.traj)));
        const FlowState& last = out.traj.snapshots.back();
        row.final_roundness = best_fit_ellipsoid(last.s).roundness;
        const InvariantFields inv = compute_invariants(last.s);
        row.final_supT2 = *std::max_element(inv.norm_T2.begin(), inv.norm_T2.end());
      });
      if (!row.error.empty() && row.termination.empty()) row.termination = "Error";
    }
  };
  std::vector<std::thread> pool;
  const unsigned threads = std::min<unsigned>(spec.parallelism, static_cast<unsigned>(cells.size()));
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# config_hash=" << git_blob_hash(spec.base.dump()) << '\n';
  for (const SweepAxis& a : spec.axes) out << a.path << ',';
  out << "termination,classification,final_roundness,final_supT2,error\n";
  for (const SweepRow& r : rows) {
    for (const json& p : r.params) {
      std::string v = p.dump();
      std::replace(v.begin(), v.end(), ',', ';');
      out << v << ',';
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.termination << ',' << r.classification << ',' << csv_number(r.final_roundness) << ','
        << csv_number(r.final_supT2) << ',' << err << '\n';
  }
  return out.str();
}

int cmd_evolve(const RunConfig& cfg, std::ostream& log) {
  RunOutcome out;
  try {
    out = run_and_store(cfg);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }
  log << "termination: " << to_string(out.traj.termination);
  if (!out.traj.message.empty()) log << " (" << out.traj.message << ")";
  log << "\nsnapshots: " << out.traj.snapshots.size() << "\noutput: " << out.dir.string() << '\n';
  return exit_for(out.traj.termination);
}

int cmd_diagnose(const fs::path& dir, std::ostream& log, unsigned threads) {
  StoredTrajectory stored;
  DiagnosticsReport report;
  try {
    stored = read_trajectory(dir);
    if (fs::exists(dir / "report.json")) {
      const json old = read_json_file(dir / "report.json");
      if (old.value("config_hash", std::string()) != stored.config_hash)
        throw ConfigError("existing report.json belongs to a different configuration");
    }
    report = diagnose(stored.trajectory, threads);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    log << "error: trajectory cannot be analysed: " << e.what() << '\n';
    return kExitInput;
  }

  const int n = stored.trajectory.snapshots.front().s.dim();
  double area_dev = 0.0;
  for (double a : report.area.area) area_dev = std::max(area_dev, std::abs(a - sphere_measure(n)));

  json doc;
  doc["config_hash"] = stored.config_hash;
  doc["classification"] = std::string(to_string(report.classification));
  doc["pinch_L"] = report.pinch_L;
  doc["tchebychev_bound_constant"] = report.tchebychev.bound_constant;
  doc["area_equals_sphere_measure"] = area_dev <= 1e-6;
  doc["max_area_deviation"] = area_dev;
  doc["checks"] = json::array();
  for (const BoundCheck& b : report.checks) doc["checks"].push_back(check_to_json(b));
  doc["identities"] = {{"metric", nan_safe(report.identities.metric)},
                       {"inverse_metric", nan_safe(report.identities.inverse_metric)},
                       {"tchebychev", nan_safe(report.identities.tchebychev)},
                       {"tchebychev_norm", nan_safe(report.tchebychev.identity_residual)},
                       {"area", nan_safe(report.area.rel_residual)}};
  doc["any_violated"] = report.any_violated();
  write_text_file(dir / "report.json", doc.dump(2));
  write_text_file(dir / "diagnostics.csv", series_csv(report.series, stored.config_hash));

  log << "classification: " << to_string(report.classification) << '\n';
  for (const BoundCheck& b : report.checks)
    log << b.name << ": " << (b.skipped ? "skipped" : std::string(to_string(b.verdict))) << '\n';
  return report.any_violated() ? kExitFail : kExitOk;
}

int cmd_oracle_compare(const RunConfig& cfg_in, std::ostream& log) {
  if (cfg_in.initial.kind != InitialSpec::Kind::Ellipsoid) {
    log << "error: oracle-compare needs an ellipsoid initial datum\n";
    return kExitInput;
  }
  RunConfig cfg = cfg_in;
  cfg.control.renormalize = false;
  const EllipsoidSpec spec = EllipsoidSpec::from_shape(cfg.initial.Q);
  const int n = cfg.n;
  const double R = std::sqrt(cfg.initial.Q(0, 0));
  const bool sphere = (cfg.initial.Q - R * R * Eigen::MatrixXd::Identity(n + 1, n + 1)).norm() == 0.0;

  RunOutcome out;
  try {
    out = run_and_store(cfg);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }
  const auto& s0 = out.traj.snapshots.front().s.values;
  std::ostringstream csv;
  csv << "# config_hash=" << out.hash << '\n' << "t,factor_exact,max_rel_err_support,roundness\n";
  double worst = 0.0;
  for (const FlowState& st : out.traj.snapshots) {
    const double f = sphere ? exact_sphere_radius(R, st.t, n) / R : exact_ellipsoid_factor(spec.rho0, st.t, n);
    std::vector<double> rel(s0.size());
    const double scale = std::exp(st.log_scale);
    for (std::size_t k = 0; k < s0.size(); ++k) rel[k] = (scale * st.s.values[k] - f * s0[k]) / (f * s0[k]);
    const double err = max_abs(rel);
    worst = std::max(worst, err);
    csv << csv_number(st.t) << ',' << csv_number(f) << ',' << csv_number(err) << ','
        << csv_number(best_fit_ellipsoid(st.s).roundness) << '\n';
  }
  write_text_file(out.dir / "oracle_compare.csv", csv.str());
  log << "max relative error: " << worst << " (tolerance " << cfg.oracle_tolerance << ")\n";
  if (exit_for(out.traj.termination) != kExitOk) return kExitGuard;
  return worst <= cfg.oracle_tolerance ? kExitOk : kExitFail;
}

int cmd_sweep(const SweepSpec& spec, std::ostream& log) {
  const std::vector<SweepRow> rows = run_sweep(spec);
  const fs::path dir = resolve_output(spec.output_dir);
  write_text_file(dir / "sweep.csv", sweep_csv(spec, rows));
  bool ok = true;
  for (const SweepRow& r : rows) {
    for (const json& p : r.params) log << p.dump() << ' ';
    log << r.termination << ' ' << r.classification;
    if (!r.error.empty()) {
      log << " error: " << r.error;
      ok = false;
    }
    log << '\n';
  }
  return ok ? kExitOk : kExitGuard;
}

int cmd_validate_config(const json& doc, std::ostream& log) {
  try {
    const RunConfig cfg = parse_run_config(doc);
    build_initial(cfg);
    log << "ok " << config_hash(cfg) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"caflow: centro-affine flow of convex curves and surfaces"};
  app.require_subcommand(1);

  struct Overrides {
    std::string config;
    std::optional<int> n, resolution;
    std::optional<std::string> scheme, output;
    std::optional<double> cfl, dt_max, t_end, snapshot_interval, lambda, tolerance;
    std::optional<std::uint64_t> seed;
    bool renormalize = false;
  } o;
  auto add_run_flags = [&o](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "run configuration (JSON)")->required();
    sub->add_option("--n", o.n, "dimension (1 or 2)");
    sub->add_option("--resolution", o.resolution, "N (n=1) or M (n=2)");
    sub->add_option("--scheme", o.scheme, "rk4 or heun");
    sub->add_option("--cfl", o.cfl);
    sub->add_option("--dt-max", o.dt_max);
    sub->add_option("--t-end", o.t_end);
    sub->add_option("--snapshot-interval", o.snapshot_interval);
    sub->add_option("--lambda", o.lambda);
    sub->add_option("--seed", o.seed);
    sub->add_option("-o,--output", o.output, "output directory");
    sub->add_flag("--renormalize", o.renormalize, "rescale to max s = 1 at snapshots");
  };
  auto load_config = [&o]() {
    json doc = read_json_file(o.config);
    if (o.n) doc["n"] = *o.n;
    if (o.resolution) doc["resolution"] = *o.resolution;
    if (o.scheme) doc["scheme"] = *o.scheme;
    if (o.cfl) doc["cfl"] = *o.cfl;
    if (o.dt_max) doc["dt_max"] = *o.dt_max;
    if (o.t_end) doc["t_end"] = *o.t_end;
    if (o.snapshot_interval) doc["snapshot_interval"] = *o.snapshot_interval;
    if (o.lambda) doc["lambda"] = *o.lambda;
    if (o.seed) doc["seed"] = *o.seed;
    if (o.output) doc["output_dir"] = *o.output;
    if (o.tolerance) doc["oracle_tolerance"] = *o.tolerance;
    if (o.renormalize) doc["renormalize"] = true;
    return doc;
  };

  auto* evolve_cmd = app.add_subcommand("evolve", "integrate the flow and write a trajectory");
  add_run_flags(evolve_cmd);
  auto* oracle_cmd = app.add_subcommand("oracle-compare", "compare an ellipsoid run with the exact law");
  add_run_flags(oracle_cmd);
  oracle_cmd->add_option("--tolerance", o.tolerance, "maximum relative support error");
  auto* validate_cmd = app.add_subcommand("validate-config", "check a configuration without running it");
  validate_cmd->add_option("-c,--config", o.config)->required();

  std::string traj_dir;
  unsigned threads = 0;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "verdicts and series for a trajectory directory");
  diagnose_cmd->add_option("dir", traj_dir)->required();
  diagnose_cmd->add_option("--threads", threads);

  std::string sweep_file;
  std::optional<unsigned> parallelism;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a cartesian parameter sweep");
  sweep_cmd->add_option("-s,--spec", sweep_file)->required();
  sweep_cmd->add_option("-j,--parallelism", parallelism);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  std::ostream& log = std::cout;
  try {
    if (*evolve_cmd) return cmd_evolve(parse_run_config(load_config()), log);
    if (*oracle_cmd) return cmd_oracle_compare(parse_run_config(load_config()), log);
    if (*validate_cmd) return cmd_validate_config(load_config(), log);
    if (*diagnose_cmd) return cmd_diagnose(traj_dir, log, threads);
    if (*sweep_cmd) {
      SweepSpec spec = parse_sweep_spec(read_json_file(sweep_file));
      if (parallelism) spec.parallelism = std::max(1u, *parallelism);
      return cmd_sweep(spec, log);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitGuard;
  }
  return kExitInput;
}

}  // namespace caflow
