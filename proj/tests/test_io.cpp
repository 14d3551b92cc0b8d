#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "edgecache/io.hpp"

using namespace edgecache;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path("io_test_tmp") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing applies defaults and validates ranges") {
  ExperimentConfig c = parse_config("{}");
  CHECK(c.layout == "hexagonal");
  CHECK(c.n_bs == 7);
  CHECK(c.K == 3);
  CHECK(c.metric == "rate");
  CHECK(c.n_cache == 3);
  CHECK(c.eta == 0.0);
  CHECK(c.synth.n_users == 10);
  CHECK(c.synth.n_files == 30);
  CHECK(c.synth.delta_p == doctest::Approx(0.6));
  CHECK(c.synth.delta_v == doctest::Approx(0.4));
  CHECK(c.synth.delta_a == doctest::Approx(1.0));
  CHECK(c.gamma0() == doctest::Approx(0.31622776601683794));

  CHECK_THROWS_AS(parse_config("not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"problem": {"eta": 1.5}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"layout": {"n_bs": 7, "K": 8}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"metric": {"kind": "latency"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"simulation": {"requests": 0}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"demand": {"source": "file",
                                   "file": "does_not_exist.json"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse_config(R"({"layout": {"kind": "explicit", "sites": []}})"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"demand": {"theta": 2.0}})"),
                  std::invalid_argument);
}

TEST_CASE("config hashing is canonical") {
  ExperimentConfig a = parse_config(R"({"problem": {"n_cache": 3, "eta": 0.5},
                                        "name": "x"})");
  ExperimentConfig b = parse_config(R"({"name": "x",
                                        "problem": {"eta": 0.5, "n_cache": 3}})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);

  ExperimentConfig c = a;
  c.eta = 0.25;
  CHECK(config_hash(a) != config_hash(c));

  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("bundled toy config loads with paths resolved") {
  ExperimentConfig c = load_config(std::string(EDGECACHE_CONFIG_DIR) +
                                   "/toy1.json");
  CHECK(c.layout == "explicit");
  CHECK(c.n_bs == 1);
  CHECK(c.K == 1);
  CHECK(c.fixed_table.enabled);
  REQUIRE(c.fixed_table.per_rank.size() == 1);
  CHECK(c.fixed_table.per_rank[0] == doctest::Approx(3e6));
  CHECK(c.fixed_table.backhaul == doctest::Approx(1e6));
  CHECK(c.source == DemandSourceKind::file);
  CHECK(fs::exists(c.demand_file));
}

TEST_CASE("atomic writes land complete and leave no temp files") {
  fs::path dir = fresh_dir("atomic");
  fs::path target = dir / "nested" / "file.txt";
  atomic_write(target.string(), "payload");
  CHECK(slurp(target) == "payload");
  atomic_write(target.string(), "replaced");
  CHECK(slurp(target) == "replaced");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
}

TEST_CASE("demand files round-trip exactly and are validated") {
  DemandModel d;
  d.v = {0.6, 0.4};
  d.Q = {{0.75, 0.25, 0.0}, {0.02, 0.38, 0.6}};
  d.A = {{0.3, 0.7}, {1.0, 0.0}};
  d.p = {0.458, 0.302, 0.24};

  fs::path dir = fresh_dir("demand");
  fs::path path = dir / "demand.json";
  save_demand(path.string(), d);
  DemandModel back = load_demand(path.string());
  CHECK(back.p == d.p);
  CHECK(back.v == d.v);
  CHECK(back.A == d.A);
  CHECK(back.Q == d.Q);

  CHECK_THROWS_AS(demand_from_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(
      demand_from_json(R"({"p": [1.0], "v": [1.0], "A": [[1.0]],
                           "Q": [[0.9, 0.1]]})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      demand_from_json(R"({"p": [0.5, 0.5], "v": [1.0], "A": [[1.0]],
                           "Q": [[0.9, 0.1]]})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      demand_from_json(R"({"p": [0.9, 0.1], "v": [0.7], "A": [[1.0]],
                           "Q": [[0.9, 0.1]]})"),
      std::invalid_argument);
}

TEST_CASE("policy CSV round-trips probabilities bit for bit") {
  CachingPolicy p;
  p.n_cache = 2;
  p.c = {{1.0, 0.123456789012345678}, {0.0, 1e-9}, {0.5, 0.87653}};
  fs::path dir = fresh_dir("policy");
  fs::path path = dir / "policy.csv";
  save_policy_csv(path.string(), p, "deadbeefdeadbeef");
  CachingPolicy back = load_policy_csv(path.string());
  CHECK(back.n_cache == 2);
  REQUIRE(back.n_files() == 3);
  REQUIRE(back.n_bs() == 2);
  for (int f = 0; f < 3; ++f) {
    for (int b = 0; b < 2; ++b) CHECK(back.c[f][b] == p.c[f][b]);
  }
  std::string text = slurp(path);
  CHECK(text.rfind("# n_cache=2 config=deadbeefdeadbeef", 0) == 0);
  CHECK(text.find("file,b0,b1") != std::string::npos);

  std::ofstream(path) << "no header\n";
  CHECK_THROWS_AS(load_policy_csv(path.string()), std::invalid_argument);
}

TEST_CASE("trace and simulation CSVs carry one row per record") {
  fs::path dir = fresh_dir("csv");

  SolverTrace trace;
  trace.rows = {{0.5, 0.1, 0.0}, {0.4, 0.01, 1e-12}};
  fs::path tpath = dir / "trace.csv";
  save_trace_csv(tpath.string(), trace);
  std::string text = slurp(tpath);
  CHECK(text.rfind("iteration,objective,step_norm,max_violation\n", 0) == 0);
  CHECK(text.find("\n1,0.5,") != std::string::npos);
  CHECK(text.find("\n2,0.4,") != std::string::npos);

  SimResult result;
  result.users.resize(2);
  result.users[0].requests = 10;
  result.users[0].defined = true;
  result.users[0].success = 0.25;
  result.users[1].defined = false;
  fs::path spath = dir / "sim.csv";
  save_simulation_csv(spath.string(), result);
  text = slurp(spath);
  CHECK(text.rfind(
            "user,requests,defined,success,success_se,rate_bps,rate_se\n",
            0) == 0);
  CHECK(text.find("0,10,1,0.25,") != std::string::npos);
  CHECK(text.find("1,0,0,") != std::string::npos);
}

TEST_CASE("sweep CSV schema is stable and sanitizes errors") {
  std::vector<SweepCell> cells(2);
  cells[0].axis_value = 0.2;
  cells[0].policy = "p0";
  cells[0].seed = 7;
  cells[0].network = 1.5e6;
  cells[0].min_value = 9e5;
  cells[1].axis_value = 0.4;
  cells[1].policy = "local_pop";
  cells[1].failed = true;
  cells[1].error = "bad, very bad\nnews";

  fs::path dir = fresh_dir("sweep");
  fs::path path = dir / "sweep.csv";
  save_sweep_csv(path.string(), "eta", cells);
  std::string text = slurp(path);
  CHECK(text.rfind("axis,value,policy,seed,network,min,status,error\n", 0) ==
        0);
  CHECK(text.find("eta,0.2,p0,7,1500000,900000,ok,\n") != std::string::npos);
  CHECK(text.find("eta,0.4,local_pop,0,0,0,failed,bad; very bad;news\n") !=
        std::string::npos);
}

TEST_CASE("manifests record the hash, version and artifacts") {
  ExperimentConfig c = parse_config(R"({"name": "m"})");
  fs::path dir = fresh_dir("manifest");
  fs::path path = dir / "manifest.json";
  save_manifest(path.string(), c, {"a.csv", "b.json"});
  std::string text = slurp(path);
  CHECK(text.find(config_hash(c)) != std::string::npos);
  CHECK(text.find(kVersion) != std::string::npos);
  CHECK(text.find("a.csv") != std::string::npos);
  CHECK(text.find("\"n_bs\": 7") != std::string::npos);
}

TEST_CASE("utility tables round-trip through JSON") {
  SubregionTable part;
  part.K = 2;
  part.cell_area = {1.0};
  Subregion r;
  r.cell = 0;
  r.index_in_cell = 0;
  r.order = {0, 1};
  r.area = 1.0;
  part.by_cell = {{r}};
  UtilityTable t = make_uniform_table(part, {3e6, 2e6}, 1e6);

  UtilityTable back = table_from_json(table_to_json(t));
  CHECK(back.metric == t.metric);
  CHECK(back.K == t.K);
  CHECK(back.n_groups == t.n_groups);
  CHECK(back.values == t.values);
  CHECK(back.region_offset == t.region_offset);

  CHECK_THROWS_AS(table_from_json("{}"), std::invalid_argument);
}

TEST_CASE("table cache is driven by the environment variable") {
  SubregionTable part;
  part.K = 1;
  part.cell_area = {1.0};
  Subregion r;
  r.cell = 0;
  r.index_in_cell = 0;
  r.order = {0};
  r.area = 1.0;
  part.by_cell = {{r}};
  UtilityTable t = make_uniform_table(part, {5e6}, 2e6);

  unsetenv("EDGECACHE_CACHE_DIR");
  CHECK(table_cache_dir().empty());
  store_cached_table("key1", t);  // no-op without the variable
  CHECK_FALSE(load_cached_table("key1").has_value());

  fs::path dir = fresh_dir("cache");
  setenv("EDGECACHE_CACHE_DIR", dir.string().c_str(), 1);
  CHECK_FALSE(load_cached_table("key1").has_value());
  store_cached_table("key1", t);
  auto cached = load_cached_table("key1");
  REQUIRE(cached.has_value());
  CHECK(cached->values == t.values);
  unsetenv("EDGECACHE_CACHE_DIR");
}
