#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "caflow/cli.hpp"
#include "caflow/errors.hpp"
#include "caflow/io.hpp"
#include "caflow/oracles.hpp"
#include "doctest.h"

using namespace caflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("caflow_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json circle_config(const std::string& out, double R = 1.0) {
  return json{{"n", 1},
              {"resolution", 64},
              {"initial", {{"kind", "ellipsoid"}, {"radius", R}}},
              {"t_end", 0.2},
              {"snapshot_interval", 0.1},
              {"output_dir", out}};
}

json pert_config(const std::string& out) {
  return json{{"n", 1},
              {"resolution", 64},
              {"initial", {{"kind", "fourier"}, {"c0", 1.0}, {"a", {0.0, 0.0, 0.05}}}},
              {"t_end", 0.05},
              {"snapshot_interval", 0.01},
              {"output_dir", out}};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "caflow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("git blob hash") {
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  }

  TEST_CASE("snapshot roundtrip is bit-identical") {
    for (int n : {1, 2}) {
      auto g = SphereGrid::make(n, n == 1 ? 64 : 17);
      std::mt19937_64 rng(7);
      std::uniform_real_distribution<double> u(0.5, 2.0);
      std::vector<double> v(g->node_count());
      for (double& x : v) x = u(rng);
      FlowState st{0.123456789012345678, SupportField(g, v)};
      st.log_scale = -0.3;
      st.step_count = 17;
      const json doc = json::parse(snapshot_to_json(st, "abc").dump());
      const FlowState back = snapshot_from_json(doc);
      CHECK(back.t == st.t);
      CHECK(back.log_scale == st.log_scale);
      CHECK(back.step_count == 17);
      CHECK(back.s.values == v);
      CHECK(back.s.grid->dim() == n);
    }
  }

  TEST_CASE("malformed snapshots are rejected") {
    auto g = SphereGrid::make(1, 16);
    json doc = snapshot_to_json(FlowState{0.0, SupportField(g, std::vector<double>(16, 1.0))}, "h");
    json bad = doc;
    bad["values"][3] = -1.0;
    CHECK_THROWS_AS(snapshot_from_json(bad), ConfigError);
    bad = doc;
    bad["values"].erase(0);
    CHECK_THROWS_AS(snapshot_from_json(bad), ConfigError);
    bad = doc;
    bad.erase("time");
    CHECK_THROWS_AS(snapshot_from_json(bad), ConfigError);
  }

  TEST_CASE("csv formatting") {
    CHECK(csv_number(std::nan("")) == "nan");
    CHECK(csv_number(1.5) == "1.500000000000e+00");
    CHECK(snapshot_name(3) == "snap_00003.json");
    const std::string csv = series_csv({}, "xyz");
    CHECK(csv.rfind("# config_hash=xyz\nt,area,", 0) == 0);
  }

  TEST_CASE("step control json roundtrip and validation") {
    StepControl c;
    c.scheme = Scheme::Heun;
    c.lambda = 0.25;
    c.renormalize = true;
    const StepControl back = step_control_from_json(step_control_to_json(c));
    CHECK(back.scheme == Scheme::Heun);
    CHECK(back.lambda == 0.25);
    CHECK(back.renormalize);
    json j = step_control_to_json(c);
    j["cfl"] = 2.0;
    CHECK_THROWS_AS(step_control_from_json(j), ConfigError);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("config parsing and errors") {
    const RunConfig cfg = parse_run_config(circle_config("x"));
    CHECK(cfg.n == 1);
    CHECK(cfg.resolution == 64);
    CHECK(parse_run_config(json{{"n", 2}, {"initial", {{"kind", "ellipsoid"}, {"radius", 1.0}}}}).resolution == 33);
    json bad = circle_config("x");
    bad["bogus"] = 1;
    CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
    bad = circle_config("x");
    bad["initial"] = {{"kind", "fourier"}, {"c0", 1.0}, {"a", {0.0, 0.9}}};
    CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
    bad["initial"] = {{"kind", "fourier"}, {"c0", 1.0}, {"a", {0.0, 0.2}}};
    bad["n"] = 2;
    CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
    bad = circle_config("x");
    bad["initial"] = {{"kind", "ellipsoid"}, {"radius", 1.0}, {"semi_axes", {1, 2}}};
    CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
    bad = circle_config("x");
    bad["cfl"] = 0.0;
    CHECK_THROWS_AS(parse_run_config(bad), ConfigError);
  }

  TEST_CASE("config hash ignores output location and threads") {
    RunConfig a = parse_run_config(circle_config("one"));
    RunConfig b = parse_run_config(circle_config("two"));
    b.threads = 7;
    CHECK(config_hash(a) == config_hash(b));
    b.control.t_end = 0.3;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(parse_run_config(run_config_to_json(a)).resolution == a.resolution);
    CHECK(config_hash(parse_run_config(run_config_to_json(a))) == config_hash(a));
  }

  TEST_CASE("set_json_path") {
    json doc = {{"initial", {{"kind", "ellipsoid"}}}};
    set_json_path(doc, "initial.radius", 2.0);
    set_json_path(doc, "t_end", 1.0);
    CHECK(doc["initial"]["radius"] == 2.0);
    CHECK(doc["t_end"] == 1.0);
    CHECK_THROWS_AS(set_json_path(doc, "t_end.x", 1.0), ConfigError);
  }

  TEST_CASE("evolve exit codes and outputs") {
    TempDir tmp;
    std::ostringstream log;
    CHECK(cmd_evolve(parse_run_config(circle_config(tmp / "circle")), log) == 0);
    CHECK(fs::exists(tmp.path / "circle" / "metadata.json"));
    CHECK(fs::exists(tmp.path / "circle" / "series.csv"));
    CHECK(fs::exists(tmp.path / "circle" / "snap_00002.json"));

    json ext = circle_config(tmp / "ext", 0.5);
    ext["t_end"] = 5.0;
    CHECK(cmd_evolve(parse_run_config(ext), log) == 0);
    CHECK(read_json_file(tmp.path / "ext" / "metadata.json")["termination"] == "Extinction");

    json missing = circle_config(tmp / "missing");
    missing["initial"] = {{"kind", "file"}, {"path", tmp / "nope.json"}};
    CHECK(cmd_evolve(parse_run_config(missing), log) == 2);
  }

  TEST_CASE("evolve from a snapshot file") {
    TempDir tmp;
    std::ostringstream log;
    REQUIRE(cmd_evolve(parse_run_config(pert_config(tmp / "a")), log) == 0);
    json cfg = pert_config(tmp / "b");
    cfg["initial"] = {{"kind", "file"}, {"path", tmp / "a/snap_00005.json"}};
    CHECK(cmd_evolve(parse_run_config(cfg), log) == 0);
    const StoredTrajectory st = read_trajectory(tmp.path / "b");
    CHECK(st.trajectory.snapshots.front().s.values ==
          snapshot_from_json(read_json_file(tmp.path / "a" / "snap_00005.json")).s.values);
  }

  TEST_CASE("runs are deterministic") {
    TempDir tmp;
    std::ostringstream log;
    REQUIRE(cmd_evolve(parse_run_config(pert_config(tmp / "a")), log) == 0);
    REQUIRE(cmd_evolve(parse_run_config(pert_config(tmp / "b")), log) == 0);
    CHECK(slurp(tmp.path / "a" / "series.csv") == slurp(tmp.path / "b" / "series.csv"));
    CHECK(slurp(tmp.path / "a" / "snap_00005.json") == slurp(tmp.path / "b" / "snap_00005.json"));
  }

  TEST_CASE("diagnose validates stored runs") {
    TempDir tmp;
    std::ostringstream log;
    REQUIRE(cmd_evolve(parse_run_config(pert_config(tmp / "run")), log) == 0);
    CHECK(cmd_diagnose(tmp.path / "run", log) == 0);
    const json report = read_json_file(tmp.path / "run" / "report.json");
    CHECK(report["any_violated"] == false);
    CHECK(fs::exists(tmp.path / "run" / "diagnostics.csv"));
    CHECK(cmd_diagnose(tmp.path / "run", log) == 0);

    json tampered = report;
    tampered["config_hash"] = "0000";
    write_text_file(tmp.path / "run" / "report.json", tampered.dump());
    CHECK(cmd_diagnose(tmp.path / "run", log) == 2);
    fs::remove(tmp.path / "run" / "report.json");

    json snap = read_json_file(tmp.path / "run" / "snap_00002.json");
    snap["config_hash"] = "ffff";
    write_text_file(tmp.path / "run" / "snap_00002.json", snap.dump());
    CHECK(cmd_diagnose(tmp.path / "run", log) == 2);

    write_text_file(tmp.path / "run" / "snap_00002.json", "{ not json");
    CHECK(cmd_diagnose(tmp.path / "run", log) == 2);
    CHECK(cmd_diagnose(tmp.path / "absent", log) == 2);
  }

  TEST_CASE("oracle comparison") {
    TempDir tmp;
    std::ostringstream log;
    json cfg = circle_config(tmp / "ell");
    cfg["initial"] = {{"kind", "ellipsoid"}, {"semi_axes", {1.0, 2.0}}};
    CHECK(cmd_oracle_compare(parse_run_config(cfg), log) == 0);
    CHECK(fs::exists(tmp.path / "ell" / "oracle_compare.csv"));
    CHECK(cmd_oracle_compare(parse_run_config(pert_config(tmp / "p")), log) == 2);
  }

  TEST_CASE("sweeps isolate failing cells") {
    TempDir tmp;
    json base = pert_config("unused");
    base["initial"]["a"] = {0.0, 0.1};
    const json doc = {{"base", base},
                      {"axes", {{{"path", "initial.a"}, {"values", {{0.0, 0.1}, {0.0, 0.9}, {0.0, 0.0, 0.05}}}}}},
                      {"parallelism", 2},
                      {"output_dir", tmp / "sweep"}};
    const SweepSpec spec = parse_sweep_spec(doc);
    const std::vector<SweepRow> rows = run_sweep(spec);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].termination == "ReachedTEnd");
    CHECK(rows[1].termination == "Error");
    CHECK_FALSE(rows[1].error.empty());
    CHECK(rows[2].error.empty());
    CHECK(rows[2].final_supT2 > 0.0);
    const std::string csv = sweep_csv(spec, rows);
    CHECK(csv.find("initial.a,termination,classification") != std::string::npos);
    std::ostringstream log;
    CHECK(cmd_sweep(spec, log) == 3);

    json capped = doc;
    capped["cap"] = 2;
    CHECK_THROWS_AS(parse_sweep_spec(capped), ConfigError);
    json unknown = doc;
    unknown["extra"] = true;
    CHECK_THROWS_AS(parse_sweep_spec(unknown), ConfigError);
  }

  TEST_CASE("command line") {
    TempDir tmp;
    write_text_file(tmp.path / "good.json", circle_config(tmp / "out").dump());
    json bad = circle_config(tmp / "out");
    bad["initial"] = {{"kind", "fourier"}, {"a", {0.0, 0.9}}};
    write_text_file(tmp.path / "bad.json", bad.dump());
    CHECK(cli({"validate-config", "-c", tmp / "good.json"}) == 0);
    CHECK(cli({"validate-config", "-c", tmp / "bad.json"}) == 2);
    CHECK(cli({"evolve", "-c", tmp / "bad.json"}) == 2);
    CHECK(cli({"evolve", "-c", tmp / "good.json", "--t-end", "0.1"}) == 0);
    CHECK(cli({"diagnose", tmp / "out"}) == 0);
    CHECK(cli({"evolve", "-c", tmp / "missing.json"}) == 2);
    CHECK(cli({"no-such-command"}) == 2);
  }

  TEST_CASE("output root environment variable") {
    TempDir tmp;
    ::setenv("CAFLOW_OUTPUT_ROOT", tmp.path.c_str(), 1);
    CHECK(resolve_output("rel") == tmp.path / "rel");
    CHECK(resolve_output("/abs/x") == fs::path("/abs/x"));
    std::ostringstream log;
    CHECK(cmd_evolve(parse_run_config(circle_config("rooted")), log) == 0);
    CHECK(fs::exists(tmp.path / "rooted" / "metadata.json"));
    ::unsetenv("CAFLOW_OUTPUT_ROOT");
    CHECK(resolve_output("rel") == fs::path("rel"));
  }
}
