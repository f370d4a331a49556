#pragma once

// Route planning: hop-zone selection for goods and order-preserving insertion
// of a request's pickup/drop pair into a vehicle route, plus an exhaustive
// planner used as a test oracle.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/route_plan.hpp"

namespace fleetsim {

// ---- hop-zones -----------------------------------------------------------

struct HopZone {
  ZoneId node = 0;
  int capacity = 1000;
  int held = 0;      // packages staged here now
  int reserved = 0;  // packages on their way here

  int spare() const { return capacity - held - reserved; }
};

// `count` zones spread over the grid on a near-square lattice.
std::vector<HopZone> evenly_spaced_hop_zones(const ZoneGrid& grid, int count, int capacity);

// CSV with header `x_km,y_km,capacity`.
std::vector<HopZone> load_hop_zones(std::istream& in, const ZoneGrid& grid);
std::vector<HopZone> load_hop_zones(const std::filesystem::path& path, const ZoneGrid& grid);

struct HopConfig {
  double drop_radius_km = 2.0;  // d_drop
  double min_gain = 0.0;        // d_gain_min, fraction of remaining distance
};

struct HopDecision {
  ZoneId next = 0;
  int hop_index = -1;  // index into the hop-zone list; -1 means final destination
  double gain = 0.0;

  bool is_hop() const { return hop_index >= 0; }
};

// Next destination for a goods leg currently at `current` with final
// destination `destination`, given the node sequence of the carrying
// vehicle's route (its position first, then its stops).
//   * within drop radius of the destination -> destination
//   * s* = route node closest to the destination (falls back to `current`)
//   * h* = hop-zone with room for `size` more packages closest to s*
//   * gain = (dist(current, d) - dist(h*, d)) / dist(current, d)
//   * h* within drop radius of d, gain < min_gain, or no progress -> destination
HopDecision assign_hop_zone(ZoneId current, ZoneId destination, std::span<const ZoneId> route_nodes,
                            std::span<const HopZone> hops, const HopConfig& config,
                            const RoadGraph& graph, int size = 1);

// ---- insertion -----------------------------------------------------------

// A pickup/drop pair to place in a route. `drop_action` is dropoff for a
// final delivery and hop_drop when the leg ends at a hop-zone.
struct Leg {
  RequestId request = -1;
  ZoneId origin = 0;
  ZoneId destination = 0;
  StopAction drop_action = StopAction::dropoff;
  Load size;  // seats for passengers, trunk for goods

  Stop pickup() const { return {origin, StopAction::pickup, request, size.seats, size.trunk}; }
  Stop drop() const { return {destination, drop_action, request, -size.seats, -size.trunk}; }
};

Leg make_leg(const Request& request, ZoneId destination, StopAction drop_action);

struct VehicleContext {
  Position pos;
  Load onboard;
  Load capacity;
};

VehicleContext context_of(const Vehicle& vehicle);

// offset + path weight from the position node through every stop; 0 when empty.
double route_cost(const RoadGraph& graph, Position pos, std::span<const Stop> stops);
double route_cost(const RoadGraph& graph, Position pos, const RoutePlan& route);

struct Insertion {
  RoutePlan plan;             // cost_km recomputed over the full route
  double incremental_km = 0;  // plan.cost_km - previous cost
  std::size_t pickup_slot = 0;  // existing stops placed before the pickup
  std::size_t drop_slot = 0;    // existing stops placed before the drop
};

// Every order-preserving placement, in search order: pickup slot x ascending,
// then drop slot y >= x ascending.
std::vector<std::vector<Stop>> enumerate_insertions(const RoutePlan& route, const Leg& leg);

// Cheapest capacity-feasible placement of the leg; ties keep the earliest
// placement in search order. nullopt when no placement is feasible.
std::optional<Insertion> insert_request(const VehicleContext& vehicle, const RoutePlan& route,
                                        const Leg& leg, const RoadGraph& graph);

// Exact minimum-cost feasible plan for up to 3 legs from an empty route, by
// enumerating every ordering with each pickup before its drop.
std::optional<RoutePlan> brute_force_plan(const VehicleContext& vehicle, std::span<const Leg> legs,
                                          const RoadGraph& graph);

}  // namespace fleetsim
