#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/matching.hpp"
#include "fleetsim/random.hpp"

using namespace fleetsim;

namespace {

Request req(RequestId id, ZoneId at, RequestKind kind = RequestKind::passenger, int size = 1) {
  Request r;
  r.id = id;
  r.kind = kind;
  r.origin = r.location = at;
  r.destination = at;
  r.size = size;
  return r;
}

std::vector<const Request*> ptrs(const std::vector<Request>& rs) {
  std::vector<const Request*> out;
  for (const Request& r : rs) out.push_back(&r);
  return out;
}

// Sequential hand simulation: for each request, scan vehicles by id and keep
// the strictly closer one; vehicles move to the request origin once matched.
std::vector<VehicleId> oracle_winners(std::vector<VehicleSnapshot> vs, const std::vector<Request>& rs,
                                      const RoadGraph& g, double radius) {
  std::vector<VehicleId> winners;
  for (const Request& r : rs) {
    int best = -1;
    double best_d = 0;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      const int room = r.kind == RequestKind::passenger ? vs[j].free_seats : vs[j].free_trunk;
      if (room < r.size) continue;
      const double d = vs[j].pos.offset_km + g.dist(vs[j].pos.node, r.location);
      if (d > radius) continue;
      if (best < 0 || d < best_d || (d == best_d && vs[j].id < vs[static_cast<std::size_t>(best)].id)) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    if (best < 0) {
      winners.push_back(-1);
      continue;
    }
    auto& w = vs[static_cast<std::size_t>(best)];
    winners.push_back(w.id);
    w.pos = {r.location, 0.0};
    (r.kind == RequestKind::passenger ? w.free_seats : w.free_trunk) -= r.size;
  }
  return winners;
}

std::vector<VehicleId> winners_of(const AssignmentBatch& b, const std::vector<Request>& rs) {
  std::vector<VehicleId> out(rs.size(), -1);
  for (std::size_t j = 0; j < b.vehicles.size(); ++j) {
    for (const Assignment& a : b.assigned[j]) {
      for (std::size_t i = 0; i < rs.size(); ++i) {
        if (rs[i].id == a.request) out[i] = b.vehicles[j];
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single vehicle in range gets the request") {
  const City city = build_grid(GridConfig{});
  const std::vector<VehicleSnapshot> vs = {{0, {0, 0.0}, 4, 5}};
  const std::vector<Request> rs = {req(7, 2)};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  REQUIRE(b.assigned[0].size() == 1);
  CHECK(b.assigned[0][0].request == 7);
  CHECK(b.assigned[0][0].proximity_km == 2.0);
  CHECK(b.unmatched.empty());
}

TEST_CASE("a vehicle 6 km away is outside the radius") {
  const City city = build_grid(GridConfig{});
  const std::vector<VehicleSnapshot> vs = {{0, {0, 0.0}, 4, 5}};
  const std::vector<Request> rs = {req(1, 6)};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  CHECK(b.assigned[0].empty());
  REQUIRE(b.unmatched.size() == 1);
  CHECK(b.unmatched[0] == 1);
  const std::vector<Request> edge = {req(2, 5)};
  CHECK(greedy_match(vs, ptrs(edge), city.graph, MatchConfig{}).assigned[0].size() == 1);
}

TEST_CASE("the closer vehicle wins") {
  const City city = build_grid(GridConfig{});
  const std::vector<Request> rs = {req(0, 5)};
  const std::vector<VehicleSnapshot> vs = {{0, {2, 0.0}, 4, 5}, {1, {7, 0.0}, 4, 5}};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  CHECK(b.for_vehicle(0)->empty());  // 3 km
  CHECK(b.for_vehicle(1)->size() == 1);  // 2 km
}

TEST_CASE("the lower vehicle id wins an exact tie") {
  const City city = build_grid(GridConfig{});
  const std::vector<Request> rs = {req(0, 5)};
  const std::vector<VehicleSnapshot> vs = {{9, {8, 0.0}, 4, 5}, {2, {2, 0.0}, 4, 5}};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  CHECK(b.for_vehicle(2)->size() == 1);
  CHECK(b.for_vehicle(9)->empty());
}

TEST_CASE("capacity is checked per compartment") {
  const City city = build_grid(GridConfig{});
  const std::vector<VehicleSnapshot> vs = {{0, {0, 0.0}, 1, 0}, {1, {9, 0.0}, 0, 3}};
  const std::vector<Request> rs = {req(0, 1, RequestKind::goods, 2), req(1, 1, RequestKind::passenger, 2),
                                   req(2, 1, RequestKind::passenger, 1)};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  CHECK(winners_of(b, rs) == std::vector<VehicleId>{-1, -1, 0});
}

TEST_CASE("three same-step requests follow the provisional location") {
  const City city = build_grid(GridConfig{});
  // Vehicle 0 at zone 0, vehicle 1 at zone 9. Requests at 1, 3, 7.
  const std::vector<VehicleSnapshot> vs = {{0, {0, 0.0}, 4, 5}, {1, {9, 0.0}, 4, 5}};
  const std::vector<Request> rs = {req(0, 1), req(1, 3), req(2, 7)};
  const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
  // r0: v0 at 1 km. r1: v0 now at zone 1 -> 2 km, v1 6 km. r2: v0 at zone 3 -> 4 km, v1 2 km.
  CHECK(winners_of(b, rs) == std::vector<VehicleId>{0, 0, 1});
  const auto& list = *b.for_vehicle(0);
  REQUIRE(list.size() == 2);
  CHECK(list[0].request == 0);  // proximity from the original position, ascending
  CHECK(list[1].request == 1);
  CHECK(list[1].proximity_km == 3.0);
  CHECK(list[1].gate_km == 2.0);
}

TEST_CASE("greedy matching agrees with a sequential hand simulation") {
  const City city = build_grid(GridConfig{});
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<VehicleSnapshot> vs;
    const int nv = 1 + static_cast<int>(uniform_index(rng, 6));
    for (int j = 0; j < nv; ++j) {
      vs.push_back({static_cast<VehicleId>(j * 3 + 1),
                    {static_cast<ZoneId>(uniform_index(rng, 100)), uniform01(rng) < 0.3 ? 0.5 : 0.0},
                    static_cast<int>(uniform_index(rng, 4)), static_cast<int>(uniform_index(rng, 4))});
    }
    std::vector<Request> rs;
    const int nr = static_cast<int>(uniform_index(rng, 8));
    for (int i = 0; i < nr; ++i) {
      rs.push_back(req(i, static_cast<ZoneId>(uniform_index(rng, 100)),
                       uniform01(rng) < 0.5 ? RequestKind::passenger : RequestKind::goods,
                       1 + static_cast<int>(uniform_index(rng, 2))));
    }
    const auto b = greedy_match(vs, ptrs(rs), city.graph, MatchConfig{});
    CHECK(winners_of(b, rs) == oracle_winners(vs, rs, city.graph, 5.0));
    for (const auto& list : b.assigned) {
      for (std::size_t k = 0; k < list.size(); ++k) {
        CHECK(list[k].gate_km <= 5.0);
        if (k > 0) CHECK(list[k - 1].proximity_km <= list[k].proximity_km);
      }
    }
  }
}

TEST_CASE("no vehicles or no requests") {
  const City city = build_grid(GridConfig{});
  const std::vector<Request> rs = {req(0, 1)};
  const auto b = greedy_match({}, ptrs(rs), city.graph, MatchConfig{});
  CHECK(b.unmatched.size() == 1);
  const std::vector<VehicleSnapshot> vs = {{0, {0, 0.0}, 4, 5}};
  CHECK(greedy_match(vs, {}, city.graph, MatchConfig{}).assigned[0].empty());
}
