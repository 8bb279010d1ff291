#pragma once
// JSON snapshots, CSV series and trajectory directories.
//
// Snapshot file (snap_XXXXX.json):
//   {"n", "resolution", "time", "log_scale", "step_count", "config_hash", "values"}
// values follow the grid node order: n = 1 by θ_k = 2πk/N; n = 2 face by face
// (+x, +y, -x, -y, +z, -z), rows j, columns i, y = -1 + i h.

#include <filesystem>
#include "json.hpp"
#include <string>
#include <string_view>
#include <vector>

#include "caflow/diagnostics.hpp"
#include "caflow/flow.hpp"

namespace caflow {

using json = nlohmann::json;

// SHA-1 of "blob <size>\0<content>", hex.
std::string git_blob_hash(std::string_view content);

json snapshot_to_json(const FlowState& state, const std::string& config_hash);
// Throws ConfigError on malformed documents or non-positive values. A grid of
// matching shape may be passed to avoid rebuilding it.
FlowState snapshot_from_json(const json& doc, GridPtr grid = nullptr);

json read_json_file(const std::filesystem::path& path);  // ConfigError
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string snapshot_name(std::size_t index);

// Series CSV; the first line is "# config_hash=<hash>".
std::string series_csv(const std::vector<SeriesRow>& rows, const std::string& config_hash);

std::string csv_number(double v);

json step_control_to_json(const StepControl& c);
StepControl step_control_from_json(const json& j);  // ConfigError

struct StoredTrajectory {
  Trajectory trajectory;
  json metadata;
  std::string config_hash;
};

// Reads metadata.json and every snapshot listed there. Throws ConfigError on
// missing or corrupt files, hash mismatches and non-positive support values.
StoredTrajectory read_trajectory(const std::filesystem::path& dir);

}  // namespace caflow
