#include "fleetsim/fleet.hpp"

#include <cmath>

#include "fleetsim/error.hpp"

namespace fleetsim {

std::string_view to_string(StopAction action) {
  switch (action) {
    case StopAction::pickup: return "pickup";
    case StopAction::dropoff: return "dropoff";
    case StopAction::hop_drop: return "hop-drop";
  }
  return "unknown";
}

std::string_view to_string(VehicleStatus status) {
  switch (status) {
    case VehicleStatus::inactive: return "inactive";
    case VehicleStatus::idle: return "idle";
    case VehicleStatus::dispatching: return "dispatching";
    case VehicleStatus::occupied: return "occupied";
  }
  return "unknown";
}

std::vector<VehicleType> default_vehicle_types() {
  return {
      {"hatchback", 4, 3, 2.0, 14.0, 0.8, 1, 1.0},
      {"sedan", 4, 5, 2.5, 12.0, 0.8, 2, 1.0},
      {"luxury", 4, 3, 4.0, 9.0, 0.8, 4, 1.0},
      {"van", 6, 8, 3.0, 8.0, 0.8, 3, 1.0},
  };
}

OccupancyProfile occupancy_profile(Load start, Load capacity, std::span<const Stop> stops) {
  OccupancyProfile profile;
  profile.loads.reserve(stops.size());
  Load load = start;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    load.seats += stops[i].seat_delta;
    load.trunk += stops[i].trunk_delta;
    profile.loads.push_back(load);
    const bool ok = load.seats >= 0 && load.trunk >= 0 && load.seats <= capacity.seats &&
                    load.trunk <= capacity.trunk;
    if (!ok && profile.feasible) {
      profile.feasible = false;
      profile.first_violation = static_cast<int>(i);
    }
  }
  return profile;
}

OccupancyProfile occupancy_profile(const Vehicle& vehicle, const RoutePlan& route) {
  return occupancy_profile(vehicle.onboard, vehicle.capacity, route.stops);
}

RouteCompletion route_completion(const Vehicle& vehicle, const RoadGraph& graph, double speed_km_per_min) {
  const Position& p = vehicle.pos;
  if (vehicle.route.empty()) return {p.offset_km / speed_km_per_min, p.node};
  double km = p.offset_km;
  ZoneId at = p.node;
  for (const Stop& s : vehicle.route.stops) {
    km += graph.dist(at, s.node);
    at = s.node;
  }
  return {km / speed_km_per_min, at};
}

SupplyForecast project_supply(std::span<const Vehicle> fleet, const RoadGraph& graph,
                              double speed_km_per_min, double dt_min, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::invalid_argument, "supply horizon must be >= 1");
  SupplyForecast f;
  f.horizon = horizon;
  f.zones = graph.node_count();
  f.counts.assign(static_cast<std::size_t>(horizon) * f.zones, 0.0);
  auto add_from = [&](int first_k, ZoneId zone) {
    for (int k = std::max(first_k, 0); k < horizon; ++k) {
      f.counts[static_cast<std::size_t>(k) * f.zones + zone] += 1.0;
    }
  };
  for (const Vehicle& v : fleet) {
    if (!v.active()) continue;
    if (v.status == VehicleStatus::occupied) {
      const RouteCompletion done = route_completion(v, graph, speed_km_per_min);
      add_from(static_cast<int>(std::ceil(done.eta_min / dt_min)), done.terminal);
    } else {
      add_from(0, v.pos.node);
    }
  }
  return f;
}

std::vector<VehicleId> mark_idle_and_collect(std::span<const Vehicle> fleet, double threshold_min) {
  std::vector<VehicleId> out;
  for (const Vehicle& v : fleet) {
    if (v.status == VehicleStatus::idle && v.idle_minutes > threshold_min) out.push_back(v.id);
  }
  return out;
}

}  // namespace fleetsim
