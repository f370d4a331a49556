#include "fleetsim/config.hpp"

#include <fstream>
#include <set>

#include "fleetsim/error.hpp"

namespace fleetsim {

using nlohmann::json;

namespace {

// Reads keys out of one JSON object and remembers which were consumed so the
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::config, where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::config, where(key) + ": wrong value type");
    }
  }

  void get(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(ErrorKind::config, where(it.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
void each(const json* arr, const std::string& path, Fn fn) {
  if (!arr) return;
  if (!arr->is_array()) throw Error(ErrorKind::config, path + ": expected an array");
  for (std::size_t i = 0; i < arr->size(); ++i) fn(Section((*arr)[i], path + "[" + std::to_string(i) + "]"));
}

json locations_json(const std::vector<ServiceLocation>& locs, const char* rate_key) {
  json out = json::array();
  for (const ServiceLocation& l : locs) out.push_back({{"zone", l.zone}, {rate_key, l.rate_per_min}});
  return out;
}

std::vector<ServiceLocation> read_locations(const json* arr, const std::string& path, const char* rate_key) {
  std::vector<ServiceLocation> out;
  each(arr, path, [&](Section s) {
    ServiceLocation l;
    s.get("zone", l.zone);
    s.get(rate_key, l.rate_per_min);
    s.finish();
    out.push_back(l);
  });
  return out;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
  Section root(j, "");
  if (const json* p = root.child("scenario")) {
    Section s(*p, "scenario");
    s.get("name", c.name);
    s.get("seed", c.sim.seed);
    s.get("days", c.sim.days);
    s.get("dt_min", c.sim.dt_min);
    s.get("drain_limit_steps", c.sim.drain_limit_steps);
    s.finish();
  }
  if (const json* p = root.child("grid")) {
    Section s(*p, "grid");
    s.get("width", c.grid.width);
    s.get("height", c.grid.height);
    s.get("cell_km", c.grid.cell_km);
    s.get("random_weights", c.grid.random_weights);
    s.get("weight_min_km", c.grid.weight_min_km);
    s.get("weight_max_km", c.grid.weight_max_km);
    s.finish();
  }
  if (const json* p = root.child("fleet")) {
    Section s(*p, "fleet");
    s.get("size", c.fleet.size);
    s.get("spawn_fraction", c.fleet.spawn_fraction);
    s.get("speed_kmh", c.fleet.speed_kmh);
    s.get("idle_threshold_min", c.fleet.idle_threshold_min);
    s.get("passenger_share", c.fleet.passenger_share);
    if (const json* types = s.child("types")) {
      c.fleet.types.clear();
      each(types, "fleet.types", [&](Section t) {
        VehicleType v;
        t.get("name", v.name);
        t.get("seats", v.seats);
        t.get("trunk", v.trunk);
        t.get("base_price", v.base_price);
        t.get("mileage_km", v.mileage_km);
        t.get("surge_coeff", v.surge_coeff);
        t.get("utility_index", v.utility_index);
        t.get("share", v.share);
        t.finish();
        c.fleet.types.push_back(v);
      });
    }
    s.finish();
  }
  if (const json* p = root.child("demand")) {
    Section s(*p, "demand");
    auto& pass = c.demand.passengers;
    s.get("passenger_rate_per_min", pass.rate_per_min);
    if (const json* h = s.child("hotspots")) pass.hotspots = read_locations(h, "demand.hotspots", "weight");
    s.get("daily_amplitude", pass.daily_amplitude);
    s.get("daily_phase_min", pass.daily_phase_min);
    s.get("min_trip_km", pass.min_trip_km);
    s.get("max_trip_km", pass.max_trip_km);
    s.get("size_weights", pass.size_weights);
    if (const json* g = s.child("goods_locations")) {
      c.demand.goods.locations = read_locations(g, "demand.goods_locations", "rate_per_min");
    }
    s.get("goods_radius_km", c.demand.goods.radius_km);
    s.get("goods_max_size", c.demand.goods.max_size);
    s.get("trip_file", c.demand.trip_file);
    s.get("max_age_min", c.demand.max_age_min);
    s.get("history_days", c.demand.history_days);
    s.finish();
  }
  if (const json* p = root.child("hops")) {
    Section s(*p, "hops");
    s.get("count", c.hops.count);
    s.get("capacity", c.hops.capacity);
    s.get("file", c.hops.file);
    s.get("drop_radius_km", c.hops.rule.drop_radius_km);
    s.get("min_gain", c.hops.rule.min_gain);
    s.finish();
  }
  if (const json* p = root.child("matching")) {
    Section s(*p, "matching");
    s.get("radius_km", c.matching.radius_km);
    s.finish();
  }
  if (const json* p = root.child("pricing")) {
    Section s(*p, "pricing");
    s.get("per_km", c.pricing.per_km);
    s.get("fuel_weight", c.pricing.fuel_weight);
    s.get("wait_discount", c.pricing.wait_discount);
    s.get("gas_price", c.pricing.gas_price);
    s.get("top_zones", c.pricing.top_zones);
    s.get("utility_per_money", c.pricing.utility_per_money);
    s.get("printed_decision", c.pricing.printed_decision);
    s.get("sharing_weight", c.passenger.sharing_weight);
    s.get("waiting_weight", c.passenger.waiting_weight);
    s.get("type_weight", c.passenger.type_weight);
    s.get("flexibility_min", c.flexibility.flexibility_min);
    s.get("flexibility_max", c.flexibility.flexibility_max);
    s.finish();
  }
  if (const json* p = root.child("dispatch")) {
    Section s(*p, "dispatch");
    auto& d = c.dispatch;
    s.get("policy", d.policy);
    s.get("horizon", d.horizon);
    s.get("action_radius", d.action_radius);
    s.get("rank_interval", d.rank_interval);
    s.get("hidden", d.dqn.hidden);
    s.get("learning_rate", d.dqn.learning_rate);
    std::string optimizer = d.dqn.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    s.get("optimizer", optimizer);
    if (optimizer != "adam" && optimizer != "sgd") {
      throw Error(ErrorKind::config, "dispatch.optimizer: expected adam or sgd");
    }
    d.dqn.optimizer = optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    s.get("batch_size", d.dqn.batch_size);
    s.get("replay_capacity", d.dqn.replay_capacity);
    s.get("min_replay", d.dqn.min_replay);
    s.get("train_interval", d.dqn.train_interval);
    s.get("target_sync", d.dqn.target_sync);
    s.get("grad_clip", d.dqn.grad_clip);
    s.get("epsilon_start", d.dqn.epsilon_start);
    s.get("epsilon_end", d.dqn.epsilon_end);
    s.get("epsilon_decay_fraction", d.dqn.epsilon_decay_fraction);
    s.get("beta_service", d.reward.service);
    s.get("beta_detour", d.reward.detour);
    s.get("beta_delay", d.reward.delay);
    s.get("beta_profit", d.reward.profit);
    s.get("beta_activation", d.reward.activation);
    s.get("gamma", d.reward.gamma);
    s.get("passenger_urgency", d.reward.passenger_urgency);
    s.get("goods_urgency", d.reward.goods_urgency);
    s.get("printed_signs", d.reward.printed_signs);
    s.finish();
  }
  if (const json* p = root.child("variant")) {
    if (!p->is_string()) throw Error(ErrorKind::config, "variant: expected a string");
    try {
      c.variant = parse_variant(p->get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorKind::config, std::string("variant: ") + e.what());
    }
  }
  root.finish();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json types = json::array();
  for (const VehicleType& t : c.fleet.types) {
    types.push_back({{"name", t.name},
                     {"seats", t.seats},
                     {"trunk", t.trunk},
                     {"base_price", t.base_price},
                     {"mileage_km", t.mileage_km},
                     {"surge_coeff", t.surge_coeff},
                     {"utility_index", t.utility_index},
                     {"share", t.share}});
  }
  const auto& pass = c.demand.passengers;
  const auto& d = c.dispatch;
  return {
      {"scenario",
       {{"name", c.name},
        {"seed", c.sim.seed},
        {"days", c.sim.days},
        {"dt_min", c.sim.dt_min},
        {"drain_limit_steps", c.sim.drain_limit_steps}}},
      {"grid",
       {{"width", c.grid.width},
        {"height", c.grid.height},
        {"cell_km", c.grid.cell_km},
        {"random_weights", c.grid.random_weights},
        {"weight_min_km", c.grid.weight_min_km},
        {"weight_max_km", c.grid.weight_max_km}}},
      {"fleet",
       {{"size", c.fleet.size},
        {"spawn_fraction", c.fleet.spawn_fraction},
        {"speed_kmh", c.fleet.speed_kmh},
        {"idle_threshold_min", c.fleet.idle_threshold_min},
        {"passenger_share", c.fleet.passenger_share},
        {"types", types}}},
      {"demand",
       {{"passenger_rate_per_min", pass.rate_per_min},
        {"hotspots", locations_json(pass.hotspots, "weight")},
        {"daily_amplitude", pass.daily_amplitude},
        {"daily_phase_min", pass.daily_phase_min},
        {"min_trip_km", pass.min_trip_km},
        {"max_trip_km", pass.max_trip_km},
        {"size_weights", pass.size_weights},
        {"goods_locations", locations_json(c.demand.goods.locations, "rate_per_min")},
        {"goods_radius_km", c.demand.goods.radius_km},
        {"goods_max_size", c.demand.goods.max_size},
        {"trip_file", c.demand.trip_file.string()},
        {"max_age_min", c.demand.max_age_min},
        {"history_days", c.demand.history_days}}},
      {"hops",
       {{"count", c.hops.count},
        {"capacity", c.hops.capacity},
        {"file", c.hops.file.string()},
        {"drop_radius_km", c.hops.rule.drop_radius_km},
        {"min_gain", c.hops.rule.min_gain}}},
      {"matching", {{"radius_km", c.matching.radius_km}}},
      {"pricing",
       {{"per_km", c.pricing.per_km},
        {"fuel_weight", c.pricing.fuel_weight},
        {"wait_discount", c.pricing.wait_discount},
        {"gas_price", c.pricing.gas_price},
        {"top_zones", c.pricing.top_zones},
        {"utility_per_money", c.pricing.utility_per_money},
        {"printed_decision", c.pricing.printed_decision},
        {"sharing_weight", c.passenger.sharing_weight},
        {"waiting_weight", c.passenger.waiting_weight},
        {"type_weight", c.passenger.type_weight},
        {"flexibility_min", c.flexibility.flexibility_min},
        {"flexibility_max", c.flexibility.flexibility_max}}},
      {"dispatch",
       {{"policy", d.policy},
        {"horizon", d.horizon},
        {"action_radius", d.action_radius},
        {"rank_interval", d.rank_interval},
        {"hidden", d.dqn.hidden},
        {"learning_rate", d.dqn.learning_rate},
        {"optimizer", d.dqn.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
        {"batch_size", d.dqn.batch_size},
        {"replay_capacity", d.dqn.replay_capacity},
        {"min_replay", d.dqn.min_replay},
        {"train_interval", d.dqn.train_interval},
        {"target_sync", d.dqn.target_sync},
        {"grad_clip", d.dqn.grad_clip},
        {"epsilon_start", d.dqn.epsilon_start},
        {"epsilon_end", d.dqn.epsilon_end},
        {"epsilon_decay_fraction", d.dqn.epsilon_decay_fraction},
        {"beta_service", d.reward.service},
        {"beta_detour", d.reward.detour},
        {"beta_delay", d.reward.delay},
        {"beta_profit", d.reward.profit},
        {"beta_activation", d.reward.activation},
        {"gamma", d.reward.gamma},
        {"passenger_urgency", d.reward.passenger_urgency},
        {"goods_urgency", d.reward.goods_urgency},
        {"printed_signs", d.reward.printed_signs}}},
      {"variant", c.variant.name()},
  };
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  ScenarioConfig c = scenario_from_json(j);
  // Input files named in the config are relative to the config's directory.
  const std::filesystem::path base = path.parent_path();
  if (!c.demand.trip_file.empty() && c.demand.trip_file.is_relative()) c.demand.trip_file = base / c.demand.trip_file;
  if (!c.hops.file.empty() && c.hops.file.is_relative()) c.hops.file = base / c.hops.file;
  validate(c);
  return c;
}

}  // namespace fleetsim
