#pragma once

// The platform's greedy initial vehicle-request assignment.

#include <span>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/route_plan.hpp"

namespace fleetsim {

struct MatchConfig {
  double radius_km = 5.0;  // reject radius around the request origin
  double speed_km_per_min = 20.0 / 60.0;
};

// What the matcher needs to know about a candidate vehicle.
struct VehicleSnapshot {
  VehicleId id = 0;
  Position pos;
  int free_seats = 0;
  int free_trunk = 0;
};

VehicleSnapshot snapshot(const Vehicle& v);

struct Assignment {
  RequestId request = -1;
  double proximity_km = 0.0;  // from the vehicle's position before matching
  double gate_km = 0.0;       // from the provisional location used for the radius check
};

// A_t: per-vehicle request lists, each sorted by ascending proximity.
struct AssignmentBatch {
  std::vector<VehicleId> vehicles;                // same order as the input snapshots
  std::vector<std::vector<Assignment>> assigned;  // parallel to `vehicles`
  std::vector<RequestId> unmatched;               // no candidate this step

  const std::vector<Assignment>* for_vehicle(VehicleId id) const;
};

// Requests are taken in the given order (callers sort by request time, then
// id). Each goes to the candidate with minimum ETA from its provisional
// location among those within radius with enough residual capacity of the
// right compartment; ties go to the lower vehicle id. The winner's provisional
// location moves to the request origin and its residual capacity shrinks.
AssignmentBatch greedy_match(std::span<const VehicleSnapshot> vehicles,
                             std::span<const Request* const> pending, const RoadGraph& graph,
                             const MatchConfig& config);

}  // namespace fleetsim
