#include "fleetsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "fleetsim/error.hpp"

namespace fleetsim {

// ---- scenario ------------------------------------------------------------

std::string Variant::name() const {
  return std::string(combined ? "combined" : "independent") + (multi_hop ? "-dmh" : "");
}

Variant parse_variant(const std::string& name) {
  for (const Variant& v : all_variants()) {
    if (v.name() == name) return v;
  }
  throw Error(ErrorKind::usage,
              "unknown variant '" + name + "' (expected combined-dmh, combined, independent-dmh or independent)");
}

std::vector<Variant> all_variants() {
  return {{true, true}, {true, false}, {false, true}, {false, false}};
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.demand.passengers.rate_per_min = 1.2;
  c.demand.passengers.hotspots = {{22, 6.0}, {77, 6.0}, {27, 3.0}, {72, 3.0}, {45, 4.0}};
  c.demand.goods.locations = {{11, 0.15}, {18, 0.15}, {81, 0.15}, {88, 0.15}};
  return c;
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw Error(ErrorKind::config, std::string(key) + ": " + what);
  };
  require(c.grid.width >= 1 && c.grid.height >= 1, "grid.width/height", "must be >= 1");
  require(c.grid.cell_km > 0.0, "grid.cell_km", "must be > 0");
  require(!c.grid.random_weights || (c.grid.weight_min_km > 0.0 && c.grid.weight_max_km >= c.grid.weight_min_km),
          "grid.weight_min_km/weight_max_km", "need 0 < min <= max");
  require(c.fleet.size >= 0, "fleet.size", "must be >= 0");
  require(!c.fleet.types.empty(), "fleet.types", "must not be empty");
  for (const VehicleType& t : c.fleet.types) {
    require(t.seats >= 0 && t.trunk >= 0 && t.seats + t.trunk > 0, "fleet.types.seats/trunk", "need capacity");
    require(t.base_price >= 0.0, "fleet.types.base_price", "must be >= 0");
    require(t.mileage_km > 0.0, "fleet.types.mileage_km", "must be > 0");
    require(t.surge_coeff >= 0.0, "fleet.types.surge_coeff", "must be >= 0");
    require(t.utility_index >= 1, "fleet.types.utility_index", "must be >= 1");
    require(t.share > 0.0, "fleet.types.share", "must be > 0");
  }
  require(c.fleet.spawn_fraction > 0.0 && c.fleet.spawn_fraction <= 1.0, "fleet.spawn_fraction", "must be in (0, 1]");
  require(c.fleet.speed_kmh > 0.0, "fleet.speed_kmh", "must be > 0");
  require(c.fleet.idle_threshold_min >= 0.0, "fleet.idle_threshold_min", "must be >= 0");
  require(c.fleet.passenger_share >= 0.0 && c.fleet.passenger_share <= 1.0, "fleet.passenger_share",
          "must be in [0, 1]");
  require(c.demand.passengers.rate_per_min >= 0.0, "demand.passenger_rate_per_min", "must be >= 0");
  require(c.demand.passengers.min_trip_km <= c.demand.passengers.max_trip_km, "demand.min_trip_km",
          "must not exceed max_trip_km");
  require(c.demand.goods.radius_km > 0.0, "demand.goods_radius_km", "must be > 0");
  require(c.demand.goods.max_size >= 1, "demand.goods_max_size", "must be >= 1");
  const int zones = c.grid.width * c.grid.height;
  for (const ServiceLocation& l : c.demand.goods.locations) {
    require(l.zone >= 0 && l.zone < zones, "demand.goods_locations.zone", "outside the grid");
    require(l.rate_per_min >= 0.0, "demand.goods_locations.rate_per_min", "must be >= 0");
  }
  for (const ServiceLocation& h : c.demand.passengers.hotspots) {
    require(h.zone >= 0 && h.zone < zones, "demand.hotspots.zone", "outside the grid");
    require(h.rate_per_min >= 0.0, "demand.hotspots.weight", "must be >= 0");
  }
  require(c.demand.max_age_min > 0.0, "demand.max_age_min", "must be > 0");
  require(c.demand.history_days >= 0, "demand.history_days", "must be >= 0");
  require(c.hops.count >= 0, "hops.count", "must be >= 0");
  require(c.hops.capacity >= 1, "hops.capacity", "must be >= 1");
  require(c.hops.rule.drop_radius_km > 0.0, "hops.drop_radius_km", "must be > 0");
  require(c.hops.rule.min_gain >= 0.0, "hops.min_gain", "must be >= 0");
  require(c.matching.radius_km > 0.0, "matching.radius_km", "must be > 0");
  require(c.pricing.per_km >= 0.0 && c.pricing.fuel_weight >= 0.0 && c.pricing.gas_price >= 0.0,
          "pricing.per_km/fuel_weight/gas_price", "must be >= 0");
  require(c.pricing.top_zones >= 1, "pricing.top_zones", "must be >= 1");
  require(c.pricing.utility_per_money > 0.0, "pricing.utility_per_money", "must be > 0");
  require(c.flexibility.flexibility_min > 0.0 && c.flexibility.flexibility_max >= c.flexibility.flexibility_min,
          "passenger.flexibility_min/max", "need 0 < min <= max");
  require(c.dispatch.reward.gamma > 0.0 && c.dispatch.reward.gamma < 1.0, "dispatch.gamma", "must be in (0, 1)");
  require(c.dispatch.horizon >= 1, "dispatch.horizon", "must be >= 1");
  require(c.dispatch.action_radius >= 0 && c.dispatch.action_radius <= 3, "dispatch.action_radius",
          "must be in [0, 3]");
  require(c.dispatch.rank_interval >= 1, "dispatch.rank_interval", "must be >= 1");
  require(!c.dispatch.dqn.hidden.empty(), "dispatch.hidden", "must list at least one layer");
  for (int h : c.dispatch.dqn.hidden) require(h >= 1, "dispatch.hidden", "widths must be >= 1");
  require(c.dispatch.dqn.learning_rate > 0.0, "dispatch.learning_rate", "must be > 0");
  require(c.dispatch.dqn.batch_size >= 1, "dispatch.batch_size", "must be >= 1");
  require(c.dispatch.dqn.replay_capacity >= 1, "dispatch.replay_capacity", "must be >= 1");
  require(c.dispatch.dqn.train_interval >= 1, "dispatch.train_interval", "must be >= 1");
  require(c.dispatch.dqn.epsilon_start >= 0.0 && c.dispatch.dqn.epsilon_start <= 1.0 &&
              c.dispatch.dqn.epsilon_end >= 0.0 && c.dispatch.dqn.epsilon_end <= 1.0,
          "dispatch.epsilon_start/end", "must be in [0, 1]");
  parse_policy(c.dispatch.policy);
  require(c.sim.days >= 0, "sim.days", "must be >= 0");
  require(c.sim.dt_min > 0.0, "sim.dt_min", "must be > 0");
  require(std::fmod(1440.0, c.sim.dt_min) == 0.0, "sim.dt_min", "must divide a day evenly");
  require(c.sim.drain_limit_steps >= 0, "sim.drain_limit_steps", "must be >= 0");
}

// ---- events --------------------------------------------------------------

nlohmann::json to_json(const Event& e) {
  return {{"step", e.step},       {"type", e.type}, {"vehicle", e.vehicle},
          {"request", e.request}, {"zone", e.zone}, {"payload", e.payload}};
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.step = j.at("step").get<int>();
  e.type = j.at("type").get<std::string>();
  e.vehicle = j.at("vehicle").get<VehicleId>();
  e.request = j.at("request").get<RequestId>();
  e.zone = j.at("zone").get<ZoneId>();
  e.payload = j.at("payload");
  return e;
}

void JsonlSink::write(const Event& e) { out_ << to_json(e).dump() << '\n'; }

// ---- metrics -------------------------------------------------------------

void MetricsAccumulator::add(const Event& e) {
  const auto& p = e.payload;
  if (e.type == "start") {
    r_.fleet_size = p.at("fleet_size").get<int>();
    r_.days = p.at("days").get<int>();
  } else if (e.type == "request") {
    ++r_.generated;
  } else if (e.type == "accept") {
    const bool goods = p.at("goods").get<bool>();
    if (accepted_.emplace(e.request, goods).second) {
      ++r_.accepted;
      if (goods) ++r_.accepted_goods;
    }
  } else if (e.type == "expire") {
    ++r_.rejected;
  } else if (e.type == "dropoff") {
    r_.revenue += p.at("price").get<double>();
    if (p.at("goods").get<bool>()) {
      ++r_.delivered_goods;
      const auto hops = p.at("hops").get<std::size_t>();
      if (r_.hop_histogram.size() <= hops) r_.hop_histogram.resize(hops + 1, 0);
      ++r_.hop_histogram[hops];
    } else {
      ++r_.delivered_passengers;
    }
  } else if (e.type == "hop_drop") {
    r_.revenue += p.at("price").get<double>();
  } else if (e.type == "step") {
    r_.cruising_min += p.at("cruising_min").get<double>();
    r_.occupied_min += p.at("occupied_min").get<double>();
    r_.working_min += p.at("working_min").get<double>();
    r_.distance_km += p.at("distance_km").get<double>();
    r_.fuel_cost += p.at("fuel_cost").get<double>();
    r_.steps = e.step + 1;
    StepRow row;
    row.step = e.step;
    row.generated = r_.generated;
    row.accepted = r_.accepted;
    row.rejected = r_.rejected;
    row.pending = r_.generated - r_.accepted - r_.rejected;
    row.occupied_vehicles = p.at("occupied_vehicles").get<int>();
    row.active_vehicles = p.at("active_vehicles").get<int>();
    row.cruising_min = r_.cruising_min;
    row.occupied_min = r_.occupied_min;
    row.working_min = r_.working_min;
    row.distance_km = r_.distance_km;
    row.revenue = r_.revenue;
    row.fuel_cost = r_.fuel_cost;
    r_.series.push_back(row);
  }
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r = r_;
  r.pending = r.generated - r.accepted - r.rejected;
  r.profit = r.revenue - r.fuel_cost;
  const double vehicle_days = static_cast<double>(r.fleet_size) * r.days;
  r.profit_per_vehicle_day = vehicle_days > 0 ? r.profit / vehicle_days : 0.0;
  r.cruising_per_vehicle_min = r.fleet_size > 0 ? r.cruising_min / r.fleet_size : 0.0;
  r.occupancy_rate = r.working_min > 0 ? r.occupied_min / r.working_min : 0.0;
  r.accept_rate = r.generated > 0 ? static_cast<double>(r.accepted) / static_cast<double>(r.generated) : 0.0;
  return r;
}

MetricsReport replay_events(std::istream& jsonl) {
  MetricsAccumulator acc;
  std::string line;
  int line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      acc.add(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::schema, "event log line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return acc.report();
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << std::setprecision(12);
  out << "step,generated,accepted,rejected,pending,occupied_vehicles,active_vehicles,cruising_min,"
         "occupied_min,working_min,distance_km,revenue,fuel_cost,occupancy_rate\n";
  for (const StepRow& s : r.series) {
    const double occ = s.working_min > 0 ? s.occupied_min / s.working_min : 0.0;
    out << s.step << ',' << s.generated << ',' << s.accepted << ',' << s.rejected << ',' << s.pending << ','
        << s.occupied_vehicles << ',' << s.active_vehicles << ',' << s.cruising_min << ',' << s.occupied_min
        << ',' << s.working_min << ',' << s.distance_km << ',' << s.revenue << ',' << s.fuel_cost << ','
        << occ << '\n';
  }
  out << "# summary\n";
  out << "fleet_size," << r.fleet_size << '\n'
      << "days," << r.days << '\n'
      << "steps," << r.steps << '\n'
      << "generated," << r.generated << '\n'
      << "accepted," << r.accepted << '\n'
      << "rejected," << r.rejected << '\n'
      << "pending," << r.pending << '\n'
      << "accepted_goods," << r.accepted_goods << '\n'
      << "delivered_passengers," << r.delivered_passengers << '\n'
      << "delivered_goods," << r.delivered_goods << '\n'
      << "accept_rate," << r.accept_rate << '\n'
      << "revenue," << r.revenue << '\n'
      << "fuel_cost," << r.fuel_cost << '\n'
      << "profit," << r.profit << '\n'
      << "profit_per_vehicle_day," << r.profit_per_vehicle_day << '\n'
      << "cruising_min," << r.cruising_min << '\n'
      << "cruising_per_vehicle_min," << r.cruising_per_vehicle_min << '\n'
      << "distance_km," << r.distance_km << '\n'
      << "occupancy_rate," << r.occupancy_rate << '\n'
      << "hop_histogram,";
  for (std::size_t h = 0; h < r.hop_histogram.size(); ++h) out << (h ? ";" : "") << h << ':' << r.hop_histogram[h];
  out << '\n';
}

// ---- movement --------------------------------------------------------------

MoveResult step_vehicle(Vehicle& v, double dt_min, double speed_km_per_min, double fuel_per_km,
                        const RoadGraph& graph) {
  MoveResult res;
  if (!v.active()) return res;
  v.working_minutes += dt_min;
  if (v.route.empty() && v.dispatch_target < 0) {
    if (v.status == VehicleStatus::idle) v.idle_minutes += dt_min;
    if (v.loaded()) v.occupied_minutes += dt_min;
    return res;
  }

  constexpr double kEps = 1e-12;
  const double full_km = dt_min * speed_km_per_min;
  double budget_km = full_km;
  auto drive = [&](double km) {
    const double minutes = km / speed_km_per_min;
    (v.loaded() ? v.occupied_minutes : v.cruising_minutes) += minutes;
    v.distance_km += km;
    res.moved_km += km;
    budget_km -= km;
    v.pos.offset_km -= km;
    if (v.pos.offset_km < kEps) v.pos.offset_km = 0.0;
  };

  while (true) {
    ZoneId goal;
    if (!v.route.empty()) {
      goal = v.route.stops.front().node;
    } else if (v.dispatch_target >= 0) {
      goal = v.dispatch_target;
    } else {
      break;
    }
    if (v.pos.offset_km > 0.0) {
      if (budget_km <= kEps) break;
      drive(std::min(budget_km, v.pos.offset_km));
      continue;
    }
    if (v.pos.node == goal) {
      if (v.route.empty()) {
        v.dispatch_target = -1;
        res.reached_dispatch_target = true;
        break;
      }
      const Stop s = v.route.stops.front();
      v.route.stops.erase(v.route.stops.begin());
      v.onboard.seats += s.seat_delta;
      v.onboard.trunk += s.trunk_delta;
      if (s.seat_delta < 0) v.committed.seats += s.seat_delta;
      if (s.trunk_delta < 0) v.committed.trunk += s.trunk_delta;
      res.arrivals.push_back({s, (full_km - budget_km) / speed_km_per_min});
      continue;
    }
    if (budget_km <= kEps) break;
    const ZoneId next = graph.next_hop(v.pos.node, goal);
    v.pos = {next, graph.edge_weight(v.pos.node, next)};
  }

  // Time left in the step after the last movement is spent standing still.
  const double rest_min = budget_km / speed_km_per_min;
  if (v.loaded() && rest_min > 0.0) v.occupied_minutes += rest_min;
  v.fuel_cost += res.moved_km * fuel_per_km;
  double cost = v.route.empty() ? 0.0 : v.pos.offset_km;
  ZoneId at = v.pos.node;
  for (const Stop& s : v.route.stops) {
    cost += graph.dist(at, s.node);
    at = s.node;
  }
  v.route.cost_km = cost;
  return res;
}

// ---- engine ----------------------------------------------------------------

namespace {

struct Track {
  double ready_time = 0.0;   // when the current leg became available
  double flexibility = 0.0;  // delta_i
  double price = 0.0;        // price of the committed leg
  double pickup_time = 0.0;
  int hop_index = -1;        // hop-zone the committed leg ends at
  int staged_hop = -1;       // hop-zone currently holding the package
  VehicleId vehicle = -1;
};

struct OpenTransition {
  bool open = false;
  std::vector<float> state;
  int action = 0;
  double reward = 0.0;
  double discount = 1.0;
};

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

void fail(const std::string& what) { throw std::logic_error("invariant violated: " + what); }

}  // namespace

struct Engine::Impl {
  ScenarioConfig cfg;
  EngineOptions opt;
  City city;
  double speed = 0.0;  // km per minute
  double dt = 1.0;
  int steps_per_day = 1440;
  int total_steps = 0;
  int history_offset = 0;

  std::vector<VehicleType> types;
  std::vector<Vehicle> fleet;
  std::vector<Request> requests;
  std::vector<Track> track;
  std::vector<HopZone> hops;
  std::size_t next_arrival = 0;
  std::vector<RequestId> pending;
  long outstanding = 0;   // accepted, not yet delivered
  long unaccepted = 0;    // arrived, never accepted, not expired

  DemandHistory history{1, 1};
  StateLayout layout;
  ActionSpace actions;
  FeatureScale scale;
  HotspotRanking ranking;
  Rng dispatch_rng;
  Rng replay_rng;

  MetricsAccumulator metrics;
  std::vector<LossPoint> losses;
  std::vector<StepSummary> summary;
  std::vector<bool> prev_active;
  std::vector<OpenTransition> open;

  int step_index = 0;
  bool finished = false;
  int step_now = 0;
  std::optional<SupplyForecast> supply_now;
  std::optional<DemandForecast> demand_now;

  Impl(ScenarioConfig c, EngineOptions o);
  void emit(Event e);
  const Mlp* q() const { return opt.learner ? &opt.learner->online() : opt.q; }
  double epsilon() const;
  const SupplyForecast& supply();
  const DemandForecast& demand();
  void refresh_ranking();
  void dispatch(const std::vector<VehicleId>& ids, const char* reason);
  void plan_vehicle(Vehicle& v, const std::vector<Assignment>& list, std::vector<bool>& committed);
  void reject(const Request& r, VehicleId v, const char* reason);
  void move_all();
  void check();
  bool step();
};

Engine::Impl::Impl(ScenarioConfig c, EngineOptions o) : cfg(std::move(c)), opt(o) {
  validate(cfg);
  const std::uint64_t seed = cfg.sim.seed;
  cfg.grid.seed = stream_seed(seed, "road-weights");
  city = build_grid(cfg.grid);
  speed = cfg.fleet.speed_kmh / 60.0;
  cfg.matching.speed_km_per_min = speed;
  dt = cfg.sim.dt_min;
  steps_per_day = static_cast<int>(std::lround(1440.0 / dt));
  total_steps = cfg.sim.days * steps_per_day;
  types = cfg.fleet.types;

  if (opt.policy == PolicyKind::dqn && q() == nullptr) {
    throw Error(ErrorKind::config, "dispatch.policy: dqn policy needs a checkpoint");
  }

  // Demand for the run and for the forecaster's warm-up days.
  auto synth = [&](int steps, std::string_view tag) {
    SimClock clock(0.0, dt, steps);
    PassengerWorkloadConfig p = cfg.demand.passengers;
    GoodsWorkloadConfig g = cfg.demand.goods;
    p.seed = stream_seed(seed, std::string("demand-passengers") + std::string(tag));
    g.seed = stream_seed(seed, std::string("demand-goods") + std::string(tag));
    std::vector<Request> out = generate_passenger_requests(p, clock, city.graph);
    std::vector<Request> goods = generate_goods_requests(g, clock, city.graph);
    out.insert(out.end(), goods.begin(), goods.end());
    return out;
  };
  requests = synth(total_steps, "");
  if (!cfg.demand.trip_file.empty()) {
    const double horizon_min = total_steps * dt;
    for (Request r : load_requests(cfg.demand.trip_file, city.grid)) {
      if (r.request_time < horizon_min) requests.push_back(r);
    }
  }
  number_requests(requests);
  track.resize(requests.size());
  Rng flex = make_stream(seed, "flexibility");
  for (std::size_t i = 0; i < requests.size(); ++i) {
    track[i].ready_time = requests[i].request_time;
    track[i].flexibility = cfg.flexibility.flexibility_min +
                           (cfg.flexibility.flexibility_max - cfg.flexibility.flexibility_min) * uniform01(flex);
  }

  history = DemandHistory(city.grid.zone_count(), steps_per_day);
  history_offset = cfg.demand.history_days * steps_per_day;
  if (history_offset > 0) {
    for (const Request& r : synth(history_offset, "-history")) {
      history.record(static_cast<int>(std::lround(r.request_time / dt)), r.origin);
    }
    history.close_through(history_offset);
  }

  // Fleet.
  Rng init = make_stream(seed, "fleet-init");
  std::vector<double> shares;
  for (const VehicleType& t : types) shares.push_back(t.share);
  std::discrete_distribution<int> pick_type(shares.begin(), shares.end());
  const int n = cfg.fleet.size;
  const int passenger_only = static_cast<int>(std::lround(cfg.fleet.passenger_share * n));
  for (int i = 0; i < n; ++i) {
    Vehicle v;
    v.id = i;
    v.type = pick_type(init);
    v.pos = {static_cast<ZoneId>(uniform_index(init, static_cast<std::size_t>(city.grid.zone_count()))), 0.0};
    v.capacity = {types[static_cast<std::size_t>(v.type)].seats, types[static_cast<std::size_t>(v.type)].trunk};
    if (!cfg.variant.combined) v.service = i < passenger_only ? ServiceMode::passengers_only : ServiceMode::goods_only;
    fleet.push_back(v);
  }
  summary.resize(fleet.size());
  prev_active.assign(fleet.size(), false);
  open.resize(fleet.size());

  hops = cfg.hops.file.empty() ? evenly_spaced_hop_zones(city.grid, cfg.hops.count, cfg.hops.capacity)
                               : load_hop_zones(cfg.hops.file, city.grid);

  layout = {cfg.grid.width, cfg.grid.height, cfg.dispatch.horizon};
  actions = ActionSpace(cfg.grid.width, cfg.grid.height, cfg.dispatch.action_radius);
  const double zones = city.grid.zone_count();
  double arrivals_per_step = cfg.demand.passengers.rate_per_min;
  for (const ServiceLocation& l : cfg.demand.goods.locations) arrivals_per_step += l.rate_per_min;
  arrivals_per_step *= dt;
  scale.supply = n > 0 ? zones / n : 1.0;
  scale.demand = arrivals_per_step > 0 ? zones / arrivals_per_step : 1.0;
  if (const Mlp* net = q()) {
    if (net->input_size() != static_cast<int>(layout.size()) || net->output_size() != actions.size()) {
      throw Error(ErrorKind::layout, "network expects " + std::to_string(net->input_size()) + " features and " +
                                         std::to_string(net->output_size()) + " actions, scenario layout is " +
                                         layout.describe() + " actions=" + std::to_string(actions.size()));
    }
  }
  dispatch_rng = make_stream(seed, "exploration");
  replay_rng = make_stream(seed, "replay-sampling");
}

void Engine::Impl::emit(Event e) {
  metrics.add(e);
  if (opt.sink) opt.sink->write(e);
}

double Engine::Impl::epsilon() const {
  if (!opt.learner || total_steps == 0) return 0.0;
  return epsilon_at(opt.learner->config(), static_cast<double>(step_now) / total_steps);
}

const SupplyForecast& Engine::Impl::supply() {
  if (!supply_now) supply_now = project_supply(fleet, city.graph, speed, dt, layout.horizon);
  return *supply_now;
}

const DemandForecast& Engine::Impl::demand() {
  if (!demand_now) demand_now = predict_demand(history, history_offset + step_now, layout.horizon);
  return *demand_now;
}

void Engine::Impl::refresh_ranking() {
  const int top = std::min(cfg.pricing.top_zones, city.grid.zone_count());
  if (const Mlp* net = q()) {
    const std::vector<double> tmpl = encode_state(layout, {0, 1.0, 1.0}, supply(), demand(), scale);
    ranking = rank_zones(*net, layout, tmpl, actions, top);
    return;
  }
  // Without a value function, zones rank by forecast demand surplus.
  std::vector<double> values(static_cast<std::size_t>(city.grid.zone_count()), 0.0);
  for (ZoneId z = 0; z < city.grid.zone_count(); ++z) {
    for (int k = 0; k < layout.horizon; ++k) values[static_cast<std::size_t>(z)] += demand().at(k, z) - supply().at(k, z);
  }
  ranking = rank_by_value(values, top);
}

void Engine::Impl::dispatch(const std::vector<VehicleId>& ids, const char* reason) {
  for (VehicleId id : ids) {
    Vehicle& v = fleet[static_cast<std::size_t>(id)];
    const ZoneId zone = v.pos.node;
    const Load cap = v.capacity;
    int action = actions.stay_action();
    if (opt.policy == PolicyKind::dqn) {
      const StateInputs in{zone, cap.seats > 0 ? static_cast<double>(v.free_seats()) / cap.seats : 0.0,
                           cap.trunk > 0 ? static_cast<double>(v.free_trunk()) / cap.trunk : 0.0};
      std::vector<double> state = encode_state(layout, in, supply(), demand(), scale);
      const ActionMask valid = actions.valid(zone);
      action = select_action(*q(), state, valid, epsilon(), dispatch_rng);
      if (opt.learner) {
        OpenTransition& t = open[static_cast<std::size_t>(id)];
        std::vector<float> fstate = to_float(state);
        if (t.open) {
          opt.learner->replay().push({std::move(t.state), t.action, t.reward, fstate, valid, t.discount});
        }
        t = {true, std::move(fstate), action, 0.0, 1.0};
      }
    } else if (opt.policy == PolicyKind::random) {
      action = random_action(zone, actions, dispatch_rng);
    } else {
      action = nearest_demand_action(zone, actions, supply(), demand(), city.graph);
    }
    const ZoneId target = *actions.target(zone, action);
    v.idle_minutes = 0.0;
    if (target != zone) {
      v.status = VehicleStatus::dispatching;
      v.dispatch_target = target;
    } else {
      v.status = VehicleStatus::idle;
      v.dispatch_target = -1;
    }
    emit({step_now, "dispatch", id, -1, target, {{"action", action}, {"from", zone}, {"reason", reason}}});
  }
}

void Engine::Impl::reject(const Request& r, VehicleId v, const char* reason) {
  emit({step_now, "reject", v, r.id, r.location, {{"reason", reason}}});
}

void Engine::Impl::plan_vehicle(Vehicle& v, const std::vector<Assignment>& list, std::vector<bool>& committed) {
  const VehicleType& type = types[static_cast<std::size_t>(v.type)];
  const double now = step_now * dt;
  for (const Assignment& a : list) {
    Request& r = requests[static_cast<std::size_t>(a.request)];
    Track& tr = track[static_cast<std::size_t>(a.request)];
    const bool goods = r.kind == RequestKind::goods;
    emit({step_now, "assign", v.id, r.id, r.location, {{"gate_km", a.gate_km}, {"proximity_km", a.proximity_km}}});
    if ((goods ? v.free_trunk() : v.free_seats()) < r.size) {
      reject(r, v.id, "capacity");
      continue;
    }
    HopDecision hop{r.destination, -1, 0.0};
    if (goods && cfg.variant.multi_hop && !v.route.empty()) {
      std::vector<ZoneId> nodes{v.pos.node};
      for (const Stop& s : v.route.stops) nodes.push_back(s.node);
      hop = assign_hop_zone(r.location, r.destination, nodes, hops, cfg.hops.rule, city.graph, r.size);
    }
    const Leg leg = make_leg(r, hop.next, hop.is_hop() ? StopAction::hop_drop : StopAction::dropoff);
    const auto ins = insert_request(context_of(v), v.route, leg, city.graph);
    if (!ins) {
      reject(r, v.id, "infeasible");
      continue;
    }
    std::vector<RequestId> sharing;
    double to_pickup_km = v.pos.offset_km;
    ZoneId at = v.pos.node;
    bool reached = false;
    for (const Stop& s : ins->plan.stops) {
      if (std::find(sharing.begin(), sharing.end(), s.request) == sharing.end()) sharing.push_back(s.request);
      if (!reached) {
        to_pickup_km += city.graph.dist(at, s.node);
        at = s.node;
        reached = s.request == r.id && s.action == StopAction::pickup;
      }
    }
    const int k = static_cast<int>(sharing.size());
    const double wait = std::max(0.0, now - tr.ready_time) + to_pickup_km / speed;
    const double initial = initial_price(ins->plan.cost_km, k, type, wait, cfg.pricing);
    double price = initial;
    bool accept = true;
    nlohmann::json quote{{"goods", goods}, {"initial", initial}, {"cost_km", ins->plan.cost_km},
                         {"sharing", k},   {"wait_min", wait}};
    if (!goods) {
      price = proposed_price(initial, r.destination, ranking, type);
      PassengerProfile profile = cfg.passenger;
      profile.flexibility = tr.flexibility;
      const double utility = passenger_utility(profile, k, type.utility_index, wait);
      accept = decide(utility, price, profile, cfg.pricing);
      quote["utility"] = utility;
    }
    quote["proposed"] = price;
    quote["accepted"] = accept;
    emit({step_now, "quote", v.id, r.id, r.destination, quote});
    if (!accept) {
      reject(r, v.id, "price");
      continue;
    }

    v.route = ins->plan;
    v.committed.seats += leg.size.seats;
    v.committed.trunk += leg.size.trunk;
    v.status = VehicleStatus::occupied;
    v.dispatch_target = -1;
    v.idle_minutes = 0.0;
    if (!r.accepted) {
      ++outstanding;
      --unaccepted;
    }
    r.accepted = true;
    r.state = RequestState::assigned;
    tr.price = price;
    tr.hop_index = hop.hop_index;
    tr.vehicle = v.id;
    if (hop.is_hop()) hops[static_cast<std::size_t>(hop.hop_index)].reserved += r.size;
    committed[static_cast<std::size_t>(r.id)] = true;
    const double solo_km = city.graph.dist(r.location, hop.next);
    summary[static_cast<std::size_t>(v.id)].detour_min += std::max(0.0, ins->incremental_km - solo_km) / speed;
    emit({step_now, "accept", v.id, r.id, hop.next,
          {{"goods", goods}, {"price", price}, {"hop", hop.is_hop()}, {"incremental_km", ins->incremental_km}}});
  }
}

void Engine::Impl::move_all() {
  const double now = step_now * dt;
  double cruising = 0, occupied = 0, working = 0, distance = 0, fuel = 0;
  for (Vehicle& v : fleet) {
    if (!v.active()) continue;
    const VehicleType& type = types[static_cast<std::size_t>(v.type)];
    const double fuel_per_km = cfg.pricing.gas_price / type.mileage_km;
    const Vehicle before = v;
    const MoveResult res = step_vehicle(v, dt, speed, fuel_per_km, city.graph);
    cruising += v.cruising_minutes - before.cruising_minutes;
    occupied += v.occupied_minutes - before.occupied_minutes;
    working += v.working_minutes - before.working_minutes;
    distance += v.distance_km - before.distance_km;
    fuel += v.fuel_cost - before.fuel_cost;
    StepSummary& sum = summary[static_cast<std::size_t>(v.id)];
    sum.profit -= v.fuel_cost - before.fuel_cost;

    for (const StopArrival& arr : res.arrivals) {
      Request& r = requests[static_cast<std::size_t>(arr.stop.request)];
      Track& tr = track[static_cast<std::size_t>(r.id)];
      const double t = now + arr.elapsed_min;
      const bool goods = r.kind == RequestKind::goods;
      switch (arr.stop.action) {
        case StopAction::pickup:
          r.state = RequestState::onboard;
          tr.pickup_time = t;
          if (tr.staged_hop >= 0) {
            hops[static_cast<std::size_t>(tr.staged_hop)].held -= r.size;
            tr.staged_hop = -1;
          }
          (goods ? sum.packages : sum.served) += r.size;
          emit({step_now, "pickup", v.id, r.id, arr.stop.node, {{"goods", goods}, {"minute", t}}});
          break;
        case StopAction::dropoff: {
          const double extra = (t - tr.pickup_time) - city.graph.dist(r.location, r.destination) / speed;
          const double urgency = goods ? cfg.dispatch.reward.goods_urgency : cfg.dispatch.reward.passenger_urgency;
          sum.weighted_delay += urgency * std::max(0.0, extra);
          sum.profit += tr.price;
          v.revenue += tr.price;
          r.state = RequestState::delivered;
          r.location = r.destination;
          --outstanding;
          emit({step_now, "dropoff", v.id, r.id, arr.stop.node,
                {{"goods", goods}, {"price", tr.price}, {"hops", r.hop_count}, {"minute", t}}});
          break;
        }
        case StopAction::hop_drop: {
          const double extra = (t - tr.pickup_time) - city.graph.dist(r.location, arr.stop.node) / speed;
          sum.weighted_delay += cfg.dispatch.reward.goods_urgency * std::max(0.0, extra);
          sum.profit += tr.price;
          v.revenue += tr.price;
          HopZone& h = hops[static_cast<std::size_t>(tr.hop_index)];
          h.reserved -= r.size;
          h.held += r.size;
          tr.staged_hop = tr.hop_index;
          tr.hop_index = -1;
          ++r.hop_count;
          r.state = RequestState::at_hop_zone;
          emit({step_now, "hop_drop", v.id, r.id, arr.stop.node,
                {{"price", tr.price}, {"hop", tr.staged_hop}, {"minute", t}}});
          // The next leg starts here and joins the following step's pool.
          r.location = arr.stop.node;
          r.state = RequestState::pending;
          tr.ready_time = t;
          tr.vehicle = -1;
          pending.push_back(r.id);
          break;
        }
      }
    }

    if (!v.route.empty()) {
      v.status = VehicleStatus::occupied;
    } else if (v.status == VehicleStatus::occupied || res.reached_dispatch_target) {
      v.status = VehicleStatus::idle;
      v.idle_minutes = 0.0;
    }
  }

  int loaded = 0, active = 0;
  for (const Vehicle& v : fleet) {
    loaded += v.loaded() ? 1 : 0;
    active += v.active() ? 1 : 0;
  }
  emit({step_now, "step", -1, -1, -1,
        {{"cruising_min", cruising},
         {"occupied_min", occupied},
         {"working_min", working},
         {"distance_km", distance},
         {"fuel_cost", fuel},
         {"occupied_vehicles", loaded},
         {"active_vehicles", active},
         {"pending", static_cast<long>(pending.size())}}});
}

void Engine::Impl::check() {
  for (const Vehicle& v : fleet) {
    const std::string who = "vehicle " + std::to_string(v.id) + " at step " + std::to_string(step_now);
    if (!occupancy_profile(v, v.route).feasible) fail(who + ": route exceeds capacity");
    if (v.onboard.seats < 0 || v.onboard.trunk < 0 || v.onboard.seats > v.committed.seats ||
        v.onboard.trunk > v.committed.trunk || v.committed.seats > v.capacity.seats ||
        v.committed.trunk > v.capacity.trunk) {
      fail(who + ": load outside [0, capacity]");
    }
    if (v.service == ServiceMode::passengers_only && v.committed.trunk > 0) fail(who + ": passengers-only carries goods");
    if (v.service == ServiceMode::goods_only && v.committed.seats > 0) fail(who + ": goods-only carries passengers");
    if (v.occupied_minutes > v.working_minutes + 1e-9) fail(who + ": occupied longer than working");
  }
  for (const HopZone& h : hops) {
    if (h.held < 0 || h.reserved < 0 || h.held + h.reserved > h.capacity) fail("hop-zone holding out of range");
  }
  const MetricsReport r = metrics.report();
  if (r.generated != r.accepted + r.rejected + unaccepted) fail("request conservation");
  if (r.occupancy_rate < 0.0 || r.occupancy_rate > 1.0) fail("occupancy rate outside [0, 1]");
  if (r.accept_rate < 0.0 || r.accept_rate > 1.0) fail("accept rate outside [0, 1]");
}

bool Engine::Impl::step() {
  if (finished) return false;
  step_now = step_index;
  supply_now.reset();
  demand_now.reset();
  const bool in_horizon = step_now < total_steps;
  const double now = step_now * dt;
  if (step_now == 0) {
    emit({0, "start", -1, -1, -1,
          {{"fleet_size", cfg.fleet.size}, {"days", cfg.sim.days}, {"steps", total_steps}, {"seed", cfg.sim.seed},
           {"variant", cfg.variant.name()}}});
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    summary[i] = {};
    summary[i].was_active = prev_active[i];
  }

  // New vehicles enter and are dispatched.
  if (in_horizon) {
    const int per_step = std::max(1, static_cast<int>(std::ceil(cfg.fleet.spawn_fraction * cfg.fleet.size)));
    std::vector<VehicleId> fresh;
    for (Vehicle& v : fleet) {
      if (static_cast<int>(fresh.size()) == per_step) break;
      if (v.active()) continue;
      v.status = VehicleStatus::idle;
      fresh.push_back(v.id);
      emit({step_now, "spawn", v.id, -1, v.pos.node, {{"type", types[static_cast<std::size_t>(v.type)].name}}});
    }
    dispatch(fresh, "new");
  }

  // Arrivals and age-out.
  while (in_horizon && next_arrival < requests.size() &&
         requests[next_arrival].request_time < now + dt - 1e-9) {
    const Request& r = requests[next_arrival++];
    pending.push_back(r.id);
    ++unaccepted;
    history.record(history_offset + step_now, r.origin);
    emit({step_now, "request", -1, r.id, r.origin,
          {{"kind", std::string(to_string(r.kind))}, {"size", r.size}, {"destination", r.destination},
           {"time", r.request_time}}});
  }
  std::erase_if(pending, [&](RequestId id) {
    Request& r = requests[static_cast<std::size_t>(id)];
    if (r.accepted || now - r.request_time <= cfg.demand.max_age_min) return false;
    r.state = RequestState::rejected;
    --unaccepted;
    emit({step_now, "expire", -1, id, r.location, {{"age_min", now - r.request_time}}});
    return true;
  });

  if (step_now % cfg.dispatch.rank_interval == 0 || ranking.rank.empty()) refresh_ranking();

  // Matching and per-vehicle planning.
  std::vector<const Request*> queue;
  for (RequestId id : pending) {
    const Request& r = requests[static_cast<std::size_t>(id)];
    if (in_horizon || r.accepted) queue.push_back(&r);
  }
  std::sort(queue.begin(), queue.end(), [](const Request* a, const Request* b) {
    return a->request_time != b->request_time ? a->request_time < b->request_time : a->id < b->id;
  });
  std::vector<VehicleSnapshot> snaps;
  for (const Vehicle& v : fleet) {
    if (v.available()) snaps.push_back(snapshot(v));
  }
  if (!queue.empty() && !snaps.empty()) {
    const AssignmentBatch batch = greedy_match(snaps, queue, city.graph, cfg.matching);
    std::vector<bool> committed(requests.size(), false);
    for (std::size_t i = 0; i < batch.vehicles.size(); ++i) {
      if (batch.assigned[i].empty()) continue;
      plan_vehicle(fleet[static_cast<std::size_t>(batch.vehicles[i])], batch.assigned[i], committed);
    }
    std::erase_if(pending, [&](RequestId id) { return committed[static_cast<std::size_t>(id)]; });
  }

  move_all();

  // Reward accrual for the learner's open transitions.
  if (opt.learner) {
    const double step_discount = std::pow(cfg.dispatch.reward.gamma, dt);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      const Vehicle& v = fleet[i];
      summary[i].is_active = v.loaded() || !v.route.empty();
      OpenTransition& t = open[i];
      if (!t.open) continue;
      t.reward += t.discount * compute_reward(summary[i], cfg.dispatch.reward).total;
      t.discount *= step_discount;
    }
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) prev_active[i] = fleet[i].loaded() || !fleet[i].route.empty();

  // Vehicles idle for too long get dispatched.
  supply_now.reset();
  dispatch(mark_idle_and_collect(fleet, cfg.fleet.idle_threshold_min), "idle");

  if (opt.learner && step_now % opt.learner->config().train_interval == 0) {
    if (auto loss = opt.learner->train_from_replay(replay_rng)) {
      losses.push_back({opt.learner->steps(), step_now, *loss});
    }
  }
  if (opt.check_invariants) check();

  ++step_index;
  if (step_index >= total_steps && (outstanding == 0 || step_index >= total_steps + cfg.sim.drain_limit_steps)) {
    finished = true;
  }
  return true;
}

Engine::Engine(ScenarioConfig config, EngineOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), options)) {}
Engine::~Engine() = default;

bool Engine::step() { return impl_->step(); }

MetricsReport Engine::run() {
  while (impl_->step()) {
  }
  return report();
}

MetricsReport Engine::report() const { return impl_->metrics.report(); }
const std::vector<LossPoint>& Engine::losses() const { return impl_->losses; }
const std::vector<Vehicle>& Engine::fleet() const { return impl_->fleet; }
const std::vector<Request>& Engine::requests() const { return impl_->requests; }
const std::vector<HopZone>& Engine::hop_zones() const { return impl_->hops; }
const City& Engine::city() const { return impl_->city; }
const StateLayout& Engine::layout() const { return impl_->layout; }
const ActionSpace& Engine::actions() const { return impl_->actions; }

MetricsReport run(const ScenarioConfig& config, const EngineOptions& options) {
  Engine engine(config, options);
  return engine.run();
}

std::vector<VariantReport> run_baseline_matrix(const ScenarioConfig& config, const std::vector<Variant>& variants,
                                               const EngineOptions& options) {
  std::vector<VariantReport> out;
  for (const Variant& v : variants) {
    ScenarioConfig c = config;
    c.variant = v;
    out.push_back({v, run(c, options)});
  }
  return out;
}

}  // namespace fleetsim
