#include "fleetsim/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetsim/config.hpp"
#include "fleetsim/error.hpp"
#include "fleetsim/sim.hpp"

#ifndef FLEETSIM_VERSION
#define FLEETSIM_VERSION "dev"
#endif

namespace fleetsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> days;
  std::optional<int> fleet_size;
  std::string policy;
  std::string out_dir = "out";
  std::string variant;
};

ScenarioConfig resolve(const Options& o) {
  ScenarioConfig c = o.config.empty() ? default_scenario() : load_scenario(o.config);
  if (o.seed) c.sim.seed = *o.seed;
  if (o.days) c.sim.days = *o.days;
  if (o.fleet_size) c.fleet.size = *o.fleet_size;
  if (!o.policy.empty()) c.dispatch.policy = o.policy;
  if (!o.variant.empty()) c.variant = parse_variant(o.variant);
  validate(c);
  return c;
}

fs::path prepare_out_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw Error(ErrorKind::io, "cannot create output directory " + dir);
  const fs::path probe = p / ".write-test";
  {
    std::ofstream test(probe);
    if (!test) throw Error(ErrorKind::io, "output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

// The run manifest is written before any result and rewritten at the end
// with the wall-clock duration.
class Manifest {
 public:
  Manifest(fs::path dir, std::string command, const ScenarioConfig& config, std::vector<fs::path> outputs)
      : path_(std::move(dir) / "manifest.json"), start_(std::chrono::steady_clock::now()) {
    j_ = {{"command", std::move(command)}, {"version", FLEETSIM_VERSION}, {"seed", config.sim.seed},
          {"config", scenario_to_json(config)}, {"wall_clock_s", nullptr}};
    json outs = json::array();
    for (const fs::path& p : outputs) outs.push_back(p.string());
    j_["outputs"] = outs;
    write();
  }

  void finish() {
    j_["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write();
  }

 private:
  void write() const { open_out(path_) << j_.dump(2) << '\n'; }

  fs::path path_;
  std::chrono::steady_clock::time_point start_;
  json j_;
};

struct LoadedPolicy {
  PolicySpec spec;
  std::optional<Mlp> q;
};

// Loads the checkpoint up front so that a layout mismatch fails before any
// output is produced.
LoadedPolicy load_policy(const ScenarioConfig& c) {
  LoadedPolicy p{parse_policy(c.dispatch.policy), std::nullopt};
  if (p.spec.kind == PolicyKind::dqn) {
    const StateLayout layout{c.grid.width, c.grid.height, c.dispatch.horizon};
    const int actions = (2 * c.dispatch.action_radius + 1) * (2 * c.dispatch.action_radius + 1);
    p.q = load_checkpoint(p.spec.checkpoint, layout, actions);
  }
  return p;
}

EngineOptions engine_options(const LoadedPolicy& p) {
  EngineOptions o;
  o.policy = p.spec.kind;
  o.q = p.q ? &*p.q : nullptr;
  return o;
}

void write_csv(const fs::path& path, const MetricsReport& r) {
  std::ofstream out = open_out(path);
  write_metrics_csv(out, r);
}

int cmd_train(const Options& o, std::ostream& out) {
  ScenarioConfig c = resolve(o);
  const fs::path dir = prepare_out_dir(o.out_dir);
  const fs::path checkpoint = dir / "checkpoint.txt";
  const fs::path loss_csv = dir / "loss.csv";
  const fs::path metrics_csv = dir / "metrics.csv";
  Manifest manifest(dir, "train", c, {checkpoint, loss_csv, metrics_csv});

  const StateLayout layout{c.grid.width, c.grid.height, c.dispatch.horizon};
  const ActionSpace actions(c.grid.width, c.grid.height, c.dispatch.action_radius);
  std::vector<int> sizes{static_cast<int>(layout.size())};
  sizes.insert(sizes.end(), c.dispatch.dqn.hidden.begin(), c.dispatch.dqn.hidden.end());
  sizes.push_back(actions.size());
  Mlp net(sizes);
  Rng init = make_stream(c.sim.seed, "q-init");
  net.init(init);
  DqnLearner learner(std::move(net), c.dispatch.dqn);

  EngineOptions eo;
  eo.policy = PolicyKind::dqn;
  eo.learner = &learner;
  Engine engine(c, eo);
  const MetricsReport report = engine.run();

  save_checkpoint(checkpoint, learner.online(), layout, actions.size());
  {
    std::ofstream loss = open_out(loss_csv);
    loss << "train_step,sim_step,loss\n" << std::setprecision(12);
    for (const LossPoint& p : engine.losses()) loss << p.train_step << ',' << p.sim_step << ',' << p.loss << '\n';
  }
  write_csv(metrics_csv, report);
  manifest.finish();
  out << checkpoint.string() << '\n';
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const ScenarioConfig c = resolve(o);
  const LoadedPolicy policy = load_policy(c);
  const fs::path dir = prepare_out_dir(o.out_dir);
  const fs::path metrics_csv = dir / "metrics.csv";
  const fs::path events = dir / "events.jsonl";
  Manifest manifest(dir, "evaluate", c, {metrics_csv, events});

  std::ofstream event_out = open_out(events);
  JsonlSink sink(event_out);
  EngineOptions eo = engine_options(policy);
  eo.sink = &sink;
  const MetricsReport report = run(c, eo);
  event_out.close();
  write_csv(metrics_csv, report);
  manifest.finish();
  out << std::setprecision(6) << "accepted " << report.accepted << " rejected " << report.rejected
      << " profit_per_vehicle_day " << report.profit_per_vehicle_day << " cruising_per_vehicle_min "
      << report.cruising_per_vehicle_min << " occupancy " << report.occupancy_rate << '\n';
  return 0;
}

std::string histogram_text(const std::vector<long>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) s += (i ? ";" : "") + std::to_string(i) + ":" + std::to_string(h[i]);
  return s;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const ScenarioConfig c = resolve(o);
  const LoadedPolicy policy = load_policy(c);
  const fs::path dir = prepare_out_dir(o.out_dir);
  const std::vector<Variant> variants = all_variants();
  std::vector<fs::path> outputs{dir / "summary.csv"};
  for (const Variant& v : variants) outputs.push_back(dir / (v.name() + ".csv"));
  Manifest manifest(dir, "compare", c, outputs);

  const std::vector<VariantReport> reports = run_baseline_matrix(c, variants, engine_options(policy));
  std::ofstream summary = open_out(outputs[0]);
  summary << std::setprecision(10)
          << "variant,accepted,rejected,accept_rate,profit,profit_per_vehicle_day,cruising_min,occupancy_rate,"
             "hop_histogram\n";
  out << std::left << std::setw(18) << "variant" << std::setw(10) << "accepted" << std::setw(10) << "rejected"
      << std::setw(14) << "profit/veh/day" << std::setw(14) << "cruise/veh" << std::setw(11) << "occupancy"
      << "hops\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const MetricsReport& r = reports[i].report;
    const std::string name = reports[i].variant.name();
    write_csv(outputs[i + 1], r);
    summary << name << ',' << r.accepted << ',' << r.rejected << ',' << r.accept_rate << ',' << r.profit << ','
            << r.profit_per_vehicle_day << ',' << r.cruising_min << ',' << r.occupancy_rate << ','
            << histogram_text(r.hop_histogram) << '\n';
    out << std::setw(18) << name << std::setw(10) << r.accepted << std::setw(10) << r.rejected << std::setw(14)
        << std::setprecision(4) << r.profit_per_vehicle_day << std::setw(14) << r.cruising_per_vehicle_min
        << std::setw(11) << r.occupancy_rate << histogram_text(r.hop_histogram) << '\n';
  }
  summary.close();
  manifest.finish();
  return 0;
}

int cmd_gen_demand(const Options& o, std::ostream& out) {
  ScenarioConfig c = resolve(o);
  c.dispatch.policy = "random";
  const fs::path dir = prepare_out_dir(o.out_dir);
  const fs::path path = dir / "requests.csv";
  Manifest manifest(dir, "gen-demand", c, {path});
  const Engine engine(c, {});
  {
    std::ofstream csv = open_out(path);
    write_requests(csv, engine.requests(), engine.city().grid);
  }
  manifest.finish();
  out << path.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ride-sharing fleet simulator with learned dispatch and multi-hop goods delivery", "fleetsim"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario config file (JSON)");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--days", o.days, "Simulated days");
    sub->add_option("--fleet-size", o.fleet_size, "Number of vehicles");
    sub->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--variant", o.variant, "combined-dmh | combined | independent-dmh | independent");
  };
  CLI::App* train = app.add_subcommand("train", "Train the dispatch Q-network");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run one evaluation with a fixed policy");
  CLI::App* compare = app.add_subcommand("compare", "Run the four-variant baseline matrix");
  CLI::App* gen = app.add_subcommand("gen-demand", "Write the scenario's synthetic requests as CSV");
  for (CLI::App* sub : {train, evaluate, compare, gen}) add_common(sub);
  for (CLI::App* sub : {evaluate, compare}) {
    sub->add_option("--policy", o.policy, "random | nearest-demand | dqn:<checkpoint>");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*compare) return cmd_compare(o, out);
    return cmd_gen_demand(o, out);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.kind()) << ": " << msg << '\n';
    return e.kind() == ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fleetsim
