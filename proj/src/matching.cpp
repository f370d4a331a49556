#include "fleetsim/matching.hpp"

#include <algorithm>
#include <limits>

namespace fleetsim {

VehicleSnapshot snapshot(const Vehicle& v) {
  return {v.id, v.pos, std::max(v.free_seats(), 0), std::max(v.free_trunk(), 0)};
}

const std::vector<Assignment>* AssignmentBatch::for_vehicle(VehicleId id) const {
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (vehicles[i] == id) return &assigned[i];
  }
  return nullptr;
}

AssignmentBatch greedy_match(std::span<const VehicleSnapshot> vehicles,
                             std::span<const Request* const> pending, const RoadGraph& graph,
                             const MatchConfig& config) {
  AssignmentBatch batch;
  batch.assigned.resize(vehicles.size());
  batch.vehicles.reserve(vehicles.size());
  for (const VehicleSnapshot& v : vehicles) batch.vehicles.push_back(v.id);

  std::vector<Position> provisional;
  std::vector<int> seats;
  std::vector<int> trunk;
  for (const VehicleSnapshot& v : vehicles) {
    provisional.push_back(v.pos);
    seats.push_back(v.free_seats);
    trunk.push_back(v.free_trunk);
  }

  for (const Request* r : pending) {
    const bool passenger = r->kind == RequestKind::passenger;
    std::size_t best = vehicles.size();
    double best_eta = std::numeric_limits<double>::infinity();
    double best_gate = 0.0;
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
      const int residual = passenger ? seats[j] : trunk[j];
      if (residual < r->size) continue;
      const double gate = distance_from(graph, provisional[j], r->location);
      if (gate > config.radius_km) continue;
      const double eta = gate / config.speed_km_per_min;
      if (eta < best_eta || (eta == best_eta && vehicles[j].id < vehicles[best].id)) {
        best = j;
        best_eta = eta;
        best_gate = gate;
      }
    }
    if (best == vehicles.size()) {
      batch.unmatched.push_back(r->id);
      continue;
    }
    const double proximity = distance_from(graph, vehicles[best].pos, r->location);
    batch.assigned[best].push_back({r->id, proximity, best_gate});
    provisional[best] = Position{r->location, 0.0};
    (passenger ? seats[best] : trunk[best]) -= r->size;
  }

  for (auto& list : batch.assigned) {
    std::stable_sort(list.begin(), list.end(), [](const Assignment& a, const Assignment& b) {
      return a.proximity_km < b.proximity_km;
    });
  }
  return batch;
}

}  // namespace fleetsim
