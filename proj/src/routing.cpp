#include "fleetsim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>

#include "fleetsim/error.hpp"

namespace fleetsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---- hop-zones -----------------------------------------------------------

std::vector<HopZone> evenly_spaced_hop_zones(const ZoneGrid& grid, int count, int capacity) {
  std::vector<HopZone> out;
  count = std::min(count, grid.zone_count());
  if (count <= 0) return out;
  const double aspect = static_cast<double>(grid.width()) / grid.height();
  const int cols = std::clamp(static_cast<int>(std::ceil(std::sqrt(count * aspect))), 1, grid.width());
  const int rows = std::clamp((count + cols - 1) / cols, 1, grid.height());
  std::vector<bool> used(static_cast<std::size_t>(grid.zone_count()), false);
  for (int j = 0; j < rows && static_cast<int>(out.size()) < count; ++j) {
    const int row = static_cast<int>((j + 0.5) * grid.height() / rows);
    for (int i = 0; i < cols && static_cast<int>(out.size()) < count; ++i) {
      const int col = static_cast<int>((i + 0.5) * grid.width() / cols);
      const ZoneId z = grid.zone_at(col, row);
      if (used[static_cast<std::size_t>(z)]) continue;
      used[static_cast<std::size_t>(z)] = true;
      out.push_back({z, capacity, 0, 0});
    }
  }
  // Lattice rounding can leave the set short on very small grids.
  for (ZoneId z = 0; z < grid.zone_count() && static_cast<int>(out.size()) < count; ++z) {
    if (!used[static_cast<std::size_t>(z)]) out.push_back({z, capacity, 0, 0});
  }
  return out;
}

std::vector<HopZone> load_hop_zones(std::istream& in, const ZoneGrid& grid) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("x_km,y_km,capacity", 0) != 0) {
    throw Error(ErrorKind::schema, "line 1: expected header 'x_km,y_km,capacity'");
  }
  std::vector<HopZone> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x = 0, y = 0;
    int capacity = 0;
    std::string extra;
    if (!(fields >> x >> y >> capacity) || (fields >> extra) || capacity < 1) {
      throw Error(ErrorKind::schema, "line " + std::to_string(line_no) + ": expected x_km,y_km,capacity");
    }
    try {
      out.push_back({grid.zone_of({x, y}), capacity, 0, 0});
    } catch (const Error&) {
      throw Error(ErrorKind::schema, "line " + std::to_string(line_no) + ": hop-zone outside the grid");
    }
  }
  return out;
}

std::vector<HopZone> load_hop_zones(const std::filesystem::path& path, const ZoneGrid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open hop-zone file " + path.string());
  return load_hop_zones(in, grid);
}

HopDecision assign_hop_zone(ZoneId current, ZoneId destination, std::span<const ZoneId> route_nodes,
                            std::span<const HopZone> hops, const HopConfig& config,
                            const RoadGraph& graph, int size) {
  const HopDecision direct{destination, -1, 0.0};
  const double remaining = graph.dist(current, destination);
  if (remaining < config.drop_radius_km) return direct;

  ZoneId best_stop = current;
  double best_stop_dist = kInf;
  for (ZoneId s : route_nodes) {
    const double d = graph.dist(s, destination);
    if (d < best_stop_dist) {
      best_stop_dist = d;
      best_stop = s;
    }
  }

  int best_hop = -1;
  double best_hop_dist = kInf;
  for (std::size_t h = 0; h < hops.size(); ++h) {
    if (hops[h].spare() < size) continue;
    const double d = graph.dist(hops[h].node, best_stop);
    if (d < best_hop_dist) {
      best_hop_dist = d;
      best_hop = static_cast<int>(h);
    }
  }
  if (best_hop < 0) return direct;

  const ZoneId hop = hops[static_cast<std::size_t>(best_hop)].node;
  const double hop_to_dest = graph.dist(hop, destination);
  const double gain = (remaining - hop_to_dest) / remaining;
  if (hop_to_dest < config.drop_radius_km || gain < config.min_gain || !(gain > 0.0)) {
    return {destination, -1, gain};
  }
  return {hop, best_hop, gain};
}

// ---- insertion -----------------------------------------------------------

Leg make_leg(const Request& request, ZoneId destination, StopAction drop_action) {
  Leg leg;
  leg.request = request.id;
  leg.origin = request.location;
  leg.destination = destination;
  leg.drop_action = drop_action;
  if (request.kind == RequestKind::passenger) {
    leg.size.seats = request.size;
  } else {
    leg.size.trunk = request.size;
  }
  return leg;
}

VehicleContext context_of(const Vehicle& vehicle) {
  return {vehicle.pos, vehicle.onboard, vehicle.capacity};
}

double route_cost(const RoadGraph& graph, Position pos, std::span<const Stop> stops) {
  if (stops.empty()) return 0.0;
  double total = pos.offset_km;
  ZoneId at = pos.node;
  for (const Stop& s : stops) {
    total += graph.dist(at, s.node);
    at = s.node;
  }
  return total;
}

double route_cost(const RoadGraph& graph, Position pos, const RoutePlan& route) {
  return route_cost(graph, pos, route.stops);
}

namespace {

std::vector<Stop> splice(const std::vector<Stop>& stops, const Leg& leg, std::size_t x, std::size_t y) {
  std::vector<Stop> out;
  out.reserve(stops.size() + 2);
  out.insert(out.end(), stops.begin(), stops.begin() + static_cast<std::ptrdiff_t>(x));
  out.push_back(leg.pickup());
  out.insert(out.end(), stops.begin() + static_cast<std::ptrdiff_t>(x),
             stops.begin() + static_cast<std::ptrdiff_t>(y));
  out.push_back(leg.drop());
  out.insert(out.end(), stops.begin() + static_cast<std::ptrdiff_t>(y), stops.end());
  return out;
}

}  // namespace

std::vector<std::vector<Stop>> enumerate_insertions(const RoutePlan& route, const Leg& leg) {
  std::vector<std::vector<Stop>> out;
  const std::size_t n = route.stops.size();
  for (std::size_t x = 0; x <= n; ++x) {
    for (std::size_t y = x; y <= n; ++y) out.push_back(splice(route.stops, leg, x, y));
  }
  return out;
}

std::optional<Insertion> insert_request(const VehicleContext& vehicle, const RoutePlan& route,
                                        const Leg& leg, const RoadGraph& graph) {
  const std::vector<Stop>& stops = route.stops;
  const std::size_t n = stops.size();

  // point(i): node after i existing stops (0 = vehicle position node).
  auto point = [&](std::size_t i) { return i == 0 ? vehicle.pos.node : stops[i - 1].node; };
  // Running load after i existing stops.
  std::vector<Load> load(n + 1);
  load[0] = vehicle.onboard;
  for (std::size_t i = 0; i < n; ++i) {
    load[i + 1] = {load[i].seats + stops[i].seat_delta, load[i].trunk + stops[i].trunk_delta};
  }
  const Load cap = vehicle.capacity;
  const ZoneId o = leg.origin;
  const ZoneId d = leg.destination;

  double best_delta = kInf;
  std::size_t best_x = 0;
  std::size_t best_y = 0;
  for (std::size_t x = 0; x <= n; ++x) {
    const ZoneId px = point(x);
    const double base_x = x < n ? graph.dist(px, point(x + 1)) : 0.0;
    const double with_o = graph.dist(px, o) + (x < n ? graph.dist(o, point(x + 1)) : 0.0) - base_x;
    int max_seats = load[x].seats;
    int max_trunk = load[x].trunk;
    for (std::size_t y = x; y <= n; ++y) {
      max_seats = std::max(max_seats, load[y].seats);
      max_trunk = std::max(max_trunk, load[y].trunk);
      if (max_seats + leg.size.seats > cap.seats || max_trunk + leg.size.trunk > cap.trunk) break;
      double delta;
      if (y == x) {
        delta = graph.dist(px, o) + graph.dist(o, d) + (x < n ? graph.dist(d, point(x + 1)) : 0.0) - base_x;
      } else {
        const ZoneId py = point(y);
        const double base_y = y < n ? graph.dist(py, point(y + 1)) : 0.0;
        delta = with_o + graph.dist(py, d) + (y < n ? graph.dist(d, point(y + 1)) : 0.0) - base_y;
      }
      if (delta < best_delta) {
        best_delta = delta;
        best_x = x;
        best_y = y;
      }
    }
  }
  if (best_delta == kInf) return std::nullopt;

  Insertion result;
  result.plan.stops = splice(stops, leg, best_x, best_y);
  result.plan.cost_km = route_cost(graph, vehicle.pos, result.plan.stops);
  result.incremental_km = std::max(0.0, result.plan.cost_km - route_cost(graph, vehicle.pos, stops));
  result.pickup_slot = best_x;
  result.drop_slot = best_y;
  return result;
}

std::optional<RoutePlan> brute_force_plan(const VehicleContext& vehicle, std::span<const Leg> legs,
                                          const RoadGraph& graph) {
  if (legs.size() > 3) throw Error(ErrorKind::invalid_argument, "brute-force planner takes at most 3 legs");
  const std::size_t k = legs.size();
  std::vector<Stop> order;
  std::vector<int> stage(k, 0);  // 0 = not picked, 1 = picked, 2 = dropped
  std::optional<RoutePlan> best;

  auto recurse = [&](auto&& self, Load load) -> void {
    if (order.size() == 2 * k) {
      const double cost = route_cost(graph, vehicle.pos, order);
      if (!best || cost < best->cost_km) best = RoutePlan{order, cost};
      return;
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (stage[i] == 2) continue;
      const Stop next = stage[i] == 0 ? legs[i].pickup() : legs[i].drop();
      const Load after{load.seats + next.seat_delta, load.trunk + next.trunk_delta};
      if (after.seats > vehicle.capacity.seats || after.trunk > vehicle.capacity.trunk) continue;
      ++stage[i];
      order.push_back(next);
      self(self, after);
      order.pop_back();
      --stage[i];
    }
  };
  recurse(recurse, vehicle.onboard);
  return best;
}

}  // namespace fleetsim
