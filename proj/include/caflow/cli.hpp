#pragma once
// Run configuration and the caflow subcommands.
//
// Exit codes: 0 ok, 1 oracle tolerance exceeded or a verdict Violated,
// 2 configuration or input error, 3 flow stopped by a guard
// (ConvexityLost, NumericalBlowup) or a sweep row failed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "caflow/flow.hpp"
#include "caflow/io.hpp"

namespace caflow {

struct InitialSpec {
  enum class Kind { Ellipsoid, Fourier, File };
  Kind kind = Kind::Ellipsoid;
  Eigen::MatrixXd Q;          // ellipsoid shape matrix, (n+1)x(n+1)
  double c0 = 1.0;            // fourier: s = c0 + Σ a_k cos kθ + b_k sin kθ, k = 1, 2, ...
  std::vector<double> a, b;
  std::string path;           // file: snapshot JSON
};

struct RunConfig {
  int n = 1;
  int resolution = 256;
  InitialSpec initial;
  StepControl control;
  std::uint64_t seed = 0;
  std::string output_dir = "caflow_run";
  double oracle_tolerance = 1e-3;
  unsigned threads = 0;
};

// Missing fields take defaults; resolution defaults to 256 (n = 1) or 33 (n = 2).
RunConfig parse_run_config(const json& doc);  // ConfigError
json run_config_to_json(const RunConfig& cfg);
// Git blob hash of the canonical config, output_dir and threads excluded.
std::string config_hash(const RunConfig& cfg);

// Exact check of the fourier datum: s > 0 and s + s'' > 0 on a fine sample.
void validate_fourier(const InitialSpec& spec);  // ConfigError

// Builds and validates s0. ConfigError on non-convex or non-positive data.
SupportField build_initial(const RunConfig& cfg);

// Relative paths are placed under $CAFLOW_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::string& dir);

// Sets a dotted path ("initial.radius", "control.t_end") inside a JSON document.
void set_json_path(json& doc, const std::string& path, const json& value);

struct SweepAxis {
  std::string path;
  std::vector<json> values;
};

struct SweepSpec {
  json base;
  std::vector<SweepAxis> axes;
  unsigned parallelism = 1;
  std::size_t cap = 256;
  std::string output_dir = "caflow_sweep";
};

SweepSpec parse_sweep_spec(const json& doc);  // ConfigError

struct SweepRow {
  std::vector<json> params;
  std::string termination;
  std::string classification;
  double final_roundness = 0.0;
  double final_supT2 = 0.0;
  std::string error;  // empty when the run completed
};

// Rows in cartesian order, the first axis varying slowest.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);
std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

int cmd_evolve(const RunConfig& cfg, std::ostream& log);
int cmd_diagnose(const std::filesystem::path& dir, std::ostream& log, unsigned threads = 0);
int cmd_oracle_compare(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const SweepSpec& spec, std::ostream& log);
int cmd_validate_config(const json& doc, std::ostream& log);

int run_cli(int argc, char** argv);

}  // namespace caflow
