#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/cli.hpp"
#include "fleetsim/config.hpp"
#include "fleetsim/error.hpp"

using namespace fleetsim;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fleetsim");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fleetsim_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  const fs::path p = fs::temp_directory_path() / ("fleetsim_cfg_" + name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("config round trip through JSON") {
  ScenarioConfig c = default_scenario();
  c.sim.seed = 77;
  c.grid.width = 7;
  c.dispatch.dqn.optimizer = OptimizerKind::sgd;
  c.variant = parse_variant("independent-dmh");
  c.fleet.types[2].surge_coeff = 1.3;
  const nlohmann::json j = scenario_to_json(c);
  const ScenarioConfig back = scenario_from_json(j);
  CHECK(scenario_to_json(back) == j);
  CHECK(back.sim.seed == 77);
  CHECK(back.variant == c.variant);
  CHECK(back.fleet.types[2].surge_coeff == 1.3);
}

TEST_CASE("config: partial files overlay the defaults") {
  const ScenarioConfig c = scenario_from_json({{"fleet", {{"size", 12}}}});
  CHECK(c.fleet.size == 12);
  CHECK(c.grid.width == 10);
  CHECK(c.demand.goods.locations.size() == 4);
}

TEST_CASE("config: unknown keys and wrong types are errors naming the key") {
  auto message = [](const nlohmann::json& j) {
    try {
      scenario_from_json(j);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"fleet", {{"sise", 12}}}}).find("fleet.sise") != std::string::npos);
  CHECK(message({{"colour", 1}}).find("colour") != std::string::npos);
  CHECK(message({{"fleet", {{"size", "many"}}}}).find("fleet.size") != std::string::npos);
  CHECK(message({{"variant", "hybrid"}}).find("variant") != std::string::npos);
  CHECK(message({{"dispatch", {{"optimizer", "rmsprop"}}}}).find("dispatch.optimizer") != std::string::npos);
}

TEST_CASE("config file: relative trip file resolves next to the config") {
  const fs::path dir = fresh_dir("relative");
  fs::create_directories(dir);
  std::ofstream(dir / "trips.csv") << "time_min,kind,size,origin_x,origin_y,dest_x,dest_y\n1,passenger,1,0.5,0.5,3.5,0.5\n";
  std::ofstream(dir / "s.json") << R"({"demand": {"trip_file": "trips.csv"}})";
  const ScenarioConfig c = load_scenario(dir / "s.json");
  CHECK(c.demand.trip_file == dir / "trips.csv");
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), Error);
}

TEST_CASE("gen-demand writes the request CSV") {
  const fs::path dir = fresh_dir("gen");
  const auto r = cli({"gen-demand", "--days", "1", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  const std::string csv = slurp(dir / "requests.csv");
  CHECK(csv.rfind("time_min,kind,size", 0) == 0);
  CHECK(count_lines(csv) > 1000);
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("evaluate with the random policy needs no checkpoint") {
  const fs::path dir = fresh_dir("eval");
  const auto r = cli({"evaluate", "--policy", "random", "--days", "1", "--out-dir", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("accepted") != std::string::npos);
  for (const char* f : {"metrics.csv", "events.jsonl", "manifest.json"}) CHECK(fs::exists(dir / f));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "evaluate");
  CHECK(manifest.at("seed") == 1);
  CHECK(manifest.at("wall_clock_s").is_number());
  CHECK(manifest.at("config").at("fleet").at("size") == 50);
  for (const auto& p : manifest.at("outputs")) CHECK(fs::exists(p.get<std::string>()));
}

TEST_CASE("train, then evaluate the checkpoint deterministically") {
  const fs::path a = fresh_dir("train_a");
  const fs::path b = fresh_dir("train_b");
  const auto ta = cli({"train", "--days", "1", "--seed", "3", "--out-dir", a.string()});
  const auto tb = cli({"train", "--days", "1", "--seed", "3", "--out-dir", b.string()});
  REQUIRE(ta.code == 0);
  REQUIRE(tb.code == 0);
  CHECK(ta.out == (a / "checkpoint.txt").string() + "\n");
  const std::string loss = slurp(a / "loss.csv");
  CHECK(loss.rfind("train_step,sim_step,loss", 0) == 0);
  CHECK(count_lines(loss) > 10);
  CHECK(loss == slurp(b / "loss.csv"));
  CHECK(slurp(a / "checkpoint.txt") == slurp(b / "checkpoint.txt"));

  const fs::path e1 = fresh_dir("eval_1");
  const fs::path e2 = fresh_dir("eval_2");
  const std::string policy = "dqn:" + (a / "checkpoint.txt").string();
  CHECK(cli({"evaluate", "--policy", policy, "--days", "1", "--seed", "5", "--out-dir", e1.string()}).code == 0);
  CHECK(cli({"evaluate", "--policy", policy, "--days", "1", "--seed", "5", "--out-dir", e2.string()}).code == 0);
  CHECK(slurp(e1 / "metrics.csv") == slurp(e2 / "metrics.csv"));
  CHECK(slurp(e1 / "events.jsonl") == slurp(e2 / "events.jsonl"));

  // A checkpoint from the 10x10 grid does not fit an 8x8 scenario.
  const fs::path cfg = write_config("small_grid", {{"grid", {{"width", 8}, {"height", 8}}},
                                                   {"demand", {{"hotspots", nlohmann::json::array()},
                                                               {"goods_locations", nlohmann::json::array()}}}});
  const fs::path bad = fresh_dir("eval_bad");
  const auto r = cli({"evaluate", "--config", cfg.string(), "--policy", policy, "--out-dir", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: layout: ", 0) == 0);
  CHECK(r.err.find("grid=10x10") != std::string::npos);
  CHECK(r.err.find("grid=8x8") != std::string::npos);
  CHECK(count_lines(r.err) == 1);
  CHECK_FALSE(fs::exists(bad));
}

TEST_CASE("compare writes four rows and per-variant CSVs") {
  const fs::path dir = fresh_dir("compare");
  const auto r = cli({"compare", "--days", "1", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(count_lines(summary) == 5);
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const std::string variant = line.substr(0, line.find(','));
    CHECK(fs::exists(dir / (variant + ".csv")));
    if (variant == "combined" || variant == "independent") {
      const std::string hist = line.substr(line.rfind(',') + 1);
      CHECK(hist.rfind("0:", 0) == 0);
      CHECK(hist.find(';') == std::string::npos);
    }
  }
  CHECK(count_lines(r.out) == 5);
}

TEST_CASE("usage and config errors are single machine-readable lines") {
  const auto none = cli({});
  CHECK(none.code == 2);
  CHECK(none.err.rfind("error: usage: ", 0) == 0);
  const auto flag = cli({"evaluate", "--bogus"});
  CHECK(flag.code == 2);
  CHECK(flag.err.rfind("error: usage: ", 0) == 0);
  const auto policy = cli({"evaluate", "--policy", "greedy", "--out-dir", fresh_dir("x").string()});
  CHECK(policy.code == 2);
  CHECK(policy.err.rfind("error: usage: ", 0) == 0);
  const fs::path cfg = write_config("typo", {{"fleet", {{"sise", 3}}}});
  const auto typo = cli({"evaluate", "--config", cfg.string(), "--out-dir", fresh_dir("y").string()});
  CHECK(typo.code == 1);
  CHECK(typo.err.rfind("error: config: ", 0) == 0);
  CHECK(typo.err.find("fleet.sise") != std::string::npos);
  const auto missing = cli({"evaluate", "--config", "/nonexistent/s.json"});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error: io: ", 0) == 0);
  const auto variant = cli({"compare", "--variant", "hybrid"});
  CHECK(variant.code != 0);
  CHECK(count_lines(variant.err) == 1);
}

TEST_CASE("help exits cleanly") {
  const auto h = cli({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("gen-demand") != std::string::npos);
}
