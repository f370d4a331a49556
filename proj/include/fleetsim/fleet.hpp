#pragma once

// Vehicles, their type table, and the fleet-level state projections (X_t and
// the per-zone supply forecast V_{t:T}).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/route_plan.hpp"

namespace fleetsim {

using VehicleId = std::int32_t;

struct VehicleType {
  std::string name;
  int seats = 4;
  int trunk = 5;
  double base_price = 2.0;      // B_j per trip
  double mileage_km = 12.0;     // M_j, km per fuel unit
  double surge_coeff = 0.8;     // b_j, dimensionless surcharge factor
  int utility_index = 1;        // V_T in the passenger utility
  double share = 1.0;           // relative weight in the fleet mix
};

// hatchback, sedan, luxury, van.
std::vector<VehicleType> default_vehicle_types();

enum class VehicleStatus { inactive, idle, dispatching, occupied };

std::string_view to_string(VehicleStatus status);

// Which request kinds a vehicle may serve. Independent-load baselines split
// the fleet into passenger-only and goods-only vehicles.
enum class ServiceMode { mixed, passengers_only, goods_only };

struct Vehicle {
  VehicleId id = 0;
  int type = 0;  // index into the type table
  ServiceMode service = ServiceMode::mixed;
  VehicleStatus status = VehicleStatus::inactive;
  Position pos;

  Load capacity;
  Load onboard;    // currently in the vehicle
  Load committed;  // onboard plus accepted but not yet picked up

  RoutePlan route;
  ZoneId dispatch_target = -1;
  double idle_minutes = 0.0;

  // Cumulative accounting; all nondecreasing.
  double revenue = 0.0;
  double fuel_cost = 0.0;
  double cruising_minutes = 0.0;
  double occupied_minutes = 0.0;
  double working_minutes = 0.0;
  double distance_km = 0.0;

  bool active() const { return status != VehicleStatus::inactive; }
  int free_seats() const { return service == ServiceMode::goods_only ? 0 : capacity.seats - committed.seats; }
  int free_trunk() const { return service == ServiceMode::passengers_only ? 0 : capacity.trunk - committed.trunk; }

  // Eligible for matching and dispatch: active with some residual capacity.
  bool available() const { return active() && (free_seats() > 0 || free_trunk() > 0); }
  bool loaded() const { return onboard.seats > 0 || onboard.trunk > 0; }
};

// ---- occupancy along a route --------------------------------------------

struct OccupancyProfile {
  std::vector<Load> loads;  // running load after each stop
  bool feasible = true;
  int first_violation = -1;  // stop index, -1 when feasible
};

OccupancyProfile occupancy_profile(Load start, Load capacity, std::span<const Stop> stops);
OccupancyProfile occupancy_profile(const Vehicle& vehicle, const RoutePlan& route);

// ---- fleet state X_t -----------------------------------------------------

struct OnboardOrder {
  RequestId request = -1;
  double pickup_time = 0.0;
  ZoneId destination_zone = 0;
};

struct VehicleState {
  VehicleId id = 0;
  ZoneId zone = 0;
  int free_seats = 0;
  int free_trunk = 0;
  std::vector<OnboardOrder> orders;
};

// ---- supply projection V_{t:T} ------------------------------------------

struct SupplyForecast {
  int horizon = 0;
  int zones = 0;
  std::vector<double> counts;  // [k * zones + zone]

  double at(int k, ZoneId z) const { return counts[static_cast<std::size_t>(k) * zones + z]; }
};

// Free vehicles (idle or dispatching) count in their current zone at every
// step. A vehicle busy until ETA e joins its terminal zone from step
// ceil(e / dt) on. Inactive vehicles are ignored.
SupplyForecast project_supply(std::span<const Vehicle> fleet, const RoadGraph& graph,
                              double speed_km_per_min, double dt_min, int horizon);

// Remaining route time in minutes and the zone where the route ends.
struct RouteCompletion {
  double eta_min = 0.0;
  ZoneId terminal = 0;
};
RouteCompletion route_completion(const Vehicle& vehicle, const RoadGraph& graph, double speed_km_per_min);

// ---- idle collection -----------------------------------------------------

// Idle vehicles whose idle duration strictly exceeds the threshold, by id.
std::vector<VehicleId> mark_idle_and_collect(std::span<const Vehicle> fleet, double threshold_min);

}  // namespace fleetsim
