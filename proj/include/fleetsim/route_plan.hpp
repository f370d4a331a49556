#pragma once

#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"

namespace fleetsim {

// A vehicle is always heading to `node`, `offset_km` away from it; offset 0
// means it is at the node. Distances from a position go through `node`.
struct Position {
  ZoneId node = 0;
  double offset_km = 0.0;
};

inline double distance_from(const RoadGraph& graph, Position p, ZoneId to) {
  return p.offset_km + graph.dist(p.node, to);
}

enum class StopAction { pickup, dropoff, hop_drop };

std::string_view to_string(StopAction action);

struct Stop {
  ZoneId node = 0;
  StopAction action = StopAction::pickup;
  RequestId request = -1;
  int seat_delta = 0;   // load change on arrival
  int trunk_delta = 0;
};

// Ordered stop sequence S_Vj with its cached cost from the vehicle position.
struct RoutePlan {
  std::vector<Stop> stops;
  double cost_km = 0.0;

  bool empty() const { return stops.empty(); }
};

struct Load {
  int seats = 0;
  int trunk = 0;

  friend bool operator==(const Load&, const Load&) = default;
};

}  // namespace fleetsim
