#pragma once

// The per-step orchestration loop, vehicle movement, the event timeline and
// the metrics derived from it.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/dispatch.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/matching.hpp"
#include "fleetsim/pricing.hpp"
#include "fleetsim/routing.hpp"

namespace fleetsim {

// ---- scenario ------------------------------------------------------------

struct FleetConfig {
  int size = 50;
  std::vector<VehicleType> types = default_vehicle_types();
  double spawn_fraction = 0.1;       // of the fleet entering per step until all are active
  double speed_kmh = 20.0;
  double idle_threshold_min = 10.0;  // idle longer than this triggers a dispatch
  double passenger_share = 0.5;      // passengers-only part of the fleet in independent mode
};

struct DemandConfig {
  PassengerWorkloadConfig passengers;
  GoodsWorkloadConfig goods;
  std::filesystem::path trip_file;  // optional, merged with the synthetic streams
  double max_age_min = 30.0;        // never-accepted requests older than this are rejected
  int history_days = 1;             // synthetic days recorded before the run to seed the forecaster
};

struct HopSettings {
  int count = 20;
  int capacity = 1000;
  std::filesystem::path file;  // optional CSV overriding the evenly spaced set
  HopConfig rule;
};

struct DispatchSettings {
  RewardWeights reward;
  DqnConfig dqn;
  int horizon = 2;
  int action_radius = 3;
  int rank_interval = 10;  // steps between zone-ranking refreshes
  std::string policy = "random";
};

struct Variant {
  bool combined = true;  // false: fleet split into passengers-only and goods-only vehicles
  bool multi_hop = true;

  std::string name() const;
  friend bool operator==(const Variant&, const Variant&) = default;
};

// "combined-dmh", "combined", "independent-dmh", "independent".
Variant parse_variant(const std::string& name);
std::vector<Variant> all_variants();

struct SimSettings {
  int days = 7;
  double dt_min = 1.0;
  int drain_limit_steps = 720;  // extra steps allowed to finish accepted work
  std::uint64_t seed = 1;
};

struct ScenarioConfig {
  std::string name = "desk";
  GridConfig grid;
  FleetConfig fleet;
  DemandConfig demand;
  HopSettings hops;
  MatchConfig matching;
  PricingConfig pricing;
  PassengerProfile passenger;
  PassengerProfileRange flexibility;
  DispatchSettings dispatch;
  Variant variant;
  SimSettings sim;
};

// The default desk-scale scenario.
ScenarioConfig default_scenario();

// Throws Error(config) naming the first offending key.
void validate(const ScenarioConfig& config);

// ---- events --------------------------------------------------------------

struct Event {
  int step = 0;
  std::string type;
  VehicleId vehicle = -1;
  RequestId request = -1;
  ZoneId zone = -1;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const Event&, const Event&) = default;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void write(const Event& e) = 0;
};

class JsonlSink : public EventSink {
 public:
  explicit JsonlSink(std::ostream& out) : out_(out) {}
  void write(const Event& e) override;

 private:
  std::ostream& out_;
};

class VectorSink : public EventSink {
 public:
  void write(const Event& e) override { events.push_back(e); }
  std::vector<Event> events;
};

// ---- metrics -------------------------------------------------------------

struct StepRow {
  int step = 0;
  long generated = 0;
  long accepted = 0;
  long rejected = 0;
  long pending = 0;
  int occupied_vehicles = 0;
  int active_vehicles = 0;
  double cruising_min = 0.0;
  double occupied_min = 0.0;
  double working_min = 0.0;
  double distance_km = 0.0;
  double revenue = 0.0;
  double fuel_cost = 0.0;

  friend bool operator==(const StepRow&, const StepRow&) = default;
};

struct MetricsReport {
  int fleet_size = 0;
  int days = 0;
  int steps = 0;
  long generated = 0;
  long accepted = 0;
  long rejected = 0;
  long pending = 0;
  long delivered_passengers = 0;
  long delivered_goods = 0;
  long accepted_goods = 0;
  double revenue = 0.0;
  double fuel_cost = 0.0;
  double profit = 0.0;
  double profit_per_vehicle_day = 0.0;
  double cruising_min = 0.0;
  double cruising_per_vehicle_min = 0.0;
  double occupied_min = 0.0;
  double working_min = 0.0;
  double distance_km = 0.0;
  double occupancy_rate = 0.0;
  double accept_rate = 0.0;
  std::vector<long> hop_histogram;  // delivered goods by hop count
  std::vector<StepRow> series;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Builds a MetricsReport from the event stream alone, so the live run and a
// replay of its log agree exactly.
class MetricsAccumulator {
 public:
  void add(const Event& e);
  MetricsReport report() const;

 private:
  MetricsReport r_;
  std::map<RequestId, bool> accepted_;  // value: is goods
};

MetricsReport replay_events(std::istream& jsonl);

// One row per step followed by a `# summary` footer block.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

// ---- movement --------------------------------------------------------------

struct StopArrival {
  Stop stop;
  double elapsed_min = 0.0;  // into the step
};

struct MoveResult {
  double moved_km = 0.0;
  std::vector<StopArrival> arrivals;
  bool reached_dispatch_target = false;
};

// Advances a vehicle for dt minutes. With a route it drives the shortest path
// to the next stop and serves every stop it reaches (load updates included),
// carrying the leftover budget on. Without a route but with a dispatch target
// it drives there. Otherwise it stays put and its idle clock runs. Distance,
// fuel, cruising (driving while empty), occupied and working time accumulate
// on the vehicle.
MoveResult step_vehicle(Vehicle& v, double dt_min, double speed_km_per_min, double fuel_per_km,
                        const RoadGraph& graph);

// ---- engine ----------------------------------------------------------------

struct LossPoint {
  long train_step = 0;
  int sim_step = 0;
  double loss = 0.0;
};

struct EngineOptions {
  PolicyKind policy = PolicyKind::random;
  const Mlp* q = nullptr;         // dqn inference
  DqnLearner* learner = nullptr;  // training; overrides q with the online network
  EventSink* sink = nullptr;
  bool check_invariants = false;  // throw std::logic_error on any violation
};

class Engine {
 public:
  Engine(ScenarioConfig config, EngineOptions options);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Runs all configured steps plus the drain phase.
  MetricsReport run();

  // One step; returns false once the run (including drain) is over.
  bool step();

  MetricsReport report() const;
  const std::vector<LossPoint>& losses() const;
  const std::vector<Vehicle>& fleet() const;
  const std::vector<Request>& requests() const;
  const std::vector<HopZone>& hop_zones() const;
  const City& city() const;
  const StateLayout& layout() const;
  const ActionSpace& actions() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

MetricsReport run(const ScenarioConfig& config, const EngineOptions& options = {});

struct VariantReport {
  Variant variant;
  MetricsReport report;
};

// Same config and seed for each variant; only the variant switch differs.
std::vector<VariantReport> run_baseline_matrix(const ScenarioConfig& config,
                                               const std::vector<Variant>& variants,
                                               const EngineOptions& options = {});

}  // namespace fleetsim
