#include "caflow/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "caflow/errors.hpp"

namespace caflow {

namespace fs = std::filesystem;

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

json snapshot_to_json(const FlowState& state, const std::string& config_hash) {
  json j;
  j["n"] = state.s.dim();
  j["resolution"] = state.s.grid->resolution();
  j["time"] = state.t;
  j["log_scale"] = state.log_scale;
  j["step_count"] = state.step_count;
  j["config_hash"] = config_hash;
  j["values"] = state.s.values;
  return j;
}

FlowState snapshot_from_json(const json& doc, GridPtr grid) {
  FlowState st;
  try {
    const int n = doc.at("n").get<int>();
    const int res = doc.at("resolution").get<int>();
    auto values = doc.at("values").get<std::vector<double>>();
    if (!grid || grid->dim() != n || grid->resolution() != res) grid = SphereGrid::make(n, res);
    if (values.size() != grid->node_count())
      throw ConfigError("snapshot has " + std::to_string(values.size()) + " values, grid needs " +
                        std::to_string(grid->node_count()));
    st.s = SupportField(grid, std::move(values));
    st.t = doc.at("time").get<double>();
    st.log_scale = doc.value("log_scale", 0.0);
    st.step_count = doc.value("step_count", 0L);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed snapshot: ") + e.what());
  }
  for (std::size_t k = 0; k < st.s.size(); ++k)
    if (!(st.s.values[k] > 0.0) || !std::isfinite(st.s.values[k]))
      throw ConfigError("snapshot value at node " + std::to_string(k) + " is not a positive number");
  return st;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%05zu.json", index);
  return buf;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string series_csv(const std::vector<SeriesRow>& rows, const std::string& config_hash) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << '\n';
  out << "t,area,area_rhs,supT2,supC2,min_s,max_s,eig_min_b,eig_max_b,rho_min,rho_max,roundness,"
         "residual_relsupport,residual_prop21\n";
  for (const SeriesRow& r : rows) {
    const double cols[] = {r.t,         r.area,      r.area_rhs,  r.supT2,   r.supC2,
                           r.min_s,     r.max_s,     r.eig_min_b, r.eig_max_b, r.rho_min,
                           r.rho_max,   r.roundness, r.residual_relsupport, r.residual_prop21};
    for (std::size_t c = 0; c < std::size(cols); ++c) out << (c ? "," : "") << csv_number(cols[c]);
    out << '\n';
  }
  return out.str();
}

json step_control_to_json(const StepControl& c) {
  return json{{"scheme", std::string(to_string(c.scheme))},
              {"cfl", c.cfl},
              {"dt_max", c.dt_max},
              {"t_end", c.t_end},
              {"snapshot_interval", c.snapshot_interval},
              {"lambda", c.lambda},
              {"max_log_change", c.max_log_change},
              {"renormalize", c.renormalize},
              {"stops",
               {{"extinction_radius", c.stops.extinction_radius},
                {"blowup_radius", c.stops.blowup_radius},
                {"convexity_floor", c.stops.convexity_floor}}}};
}

StepControl step_control_from_json(const json& j) {
  StepControl c;
  try {
    if (j.contains("scheme")) c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    c.cfl = j.value("cfl", c.cfl);
    c.dt_max = j.value("dt_max", c.dt_max);
    c.t_end = j.value("t_end", c.t_end);
    c.snapshot_interval = j.value("snapshot_interval", c.snapshot_interval);
    c.lambda = j.value("lambda", c.lambda);
    c.max_log_change = j.value("max_log_change", c.max_log_change);
    c.renormalize = j.value("renormalize", c.renormalize);
    if (j.contains("stops")) {
      const json& s = j.at("stops");
      c.stops.extinction_radius = s.value("extinction_radius", c.stops.extinction_radius);
      c.stops.blowup_radius = s.value("blowup_radius", c.stops.blowup_radius);
      c.stops.convexity_floor = s.value("convexity_floor", c.stops.convexity_floor);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed step control: ") + e.what());
  }
  c.validate();
  return c;
}

StoredTrajectory read_trajectory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a trajectory directory: " + dir.string());
  StoredTrajectory out;
  out.metadata = read_json_file(dir / "metadata.json");
  try {
    out.config_hash = out.metadata.at("config_hash").get<std::string>();
    out.trajectory.control = step_control_from_json(out.metadata.at("step_control"));
    out.trajectory.termination = termination_from_string(out.metadata.at("termination").get<std::string>());
    out.trajectory.message = out.metadata.value("message", std::string());
    GridPtr grid;
    for (const auto& name : out.metadata.at("snapshots")) {
      const json doc = read_json_file(dir / name.get<std::string>());
      if (doc.value("config_hash", std::string()) != out.config_hash)
        throw ConfigError("snapshot " + name.get<std::string>() + " belongs to a different configuration");
      FlowState st = snapshot_from_json(doc, grid);
      grid = st.s.grid;
      out.trajectory.snapshots.push_back(std::move(st));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed metadata: ") + e.what());
  }
  if (out.trajectory.snapshots.empty()) throw ConfigError("trajectory has no snapshots");
  return out;
}

}  // namespace caflow
