#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/error.hpp"

using namespace fleetsim;

namespace {

std::vector<int> per_step_counts(const std::vector<Request>& rs, int steps) {
  std::vector<int> counts(static_cast<std::size_t>(steps), 0);
  for (const Request& r : rs) ++counts[static_cast<std::size_t>(r.request_time)];
  return counts;
}

}  // namespace

TEST_CASE("poisson draws: mean and dispersion for lambda 4") {
  const City city = build_grid(GridConfig{});
  GoodsWorkloadConfig cfg;
  cfg.locations = {{44, 4.0}};
  cfg.seed = 2024;
  const int steps = 10000;
  const auto rs = generate_goods_requests(cfg, SimClock(0.0, 1.0, steps), city.graph);
  const auto counts = per_step_counts(rs, steps);
  double mean = 0.0;
  for (int c : counts) mean += c;
  mean /= steps;
  double var = 0.0;
  for (int c : counts) var += (c - mean) * (c - mean);
  var /= steps - 1;
  CHECK(std::abs(mean - 4.0) <= 3.0 * std::sqrt(4.0 / steps));
  CHECK(var / mean >= 0.9);
  CHECK(var / mean <= 1.1);
}

TEST_CASE("zero rate yields an empty stream") {
  const City city = build_grid(GridConfig{});
  GoodsWorkloadConfig cfg;
  cfg.locations = {{44, 0.0}};
  CHECK(generate_goods_requests(cfg, SimClock(0.0, 1.0, 500), city.graph).empty());
  PassengerWorkloadConfig p;
  p.rate_per_min = 0.0;
  CHECK(generate_passenger_requests(p, SimClock(0.0, 1.0, 500), city.graph).empty());
  Rng rng(1);
  const Rng before = rng;
  CHECK(draw_poisson(0.0, rng) == 0);
  CHECK(rng == before);
}

TEST_CASE("goods destinations stay within the delivery radius") {
  const City city = build_grid(GridConfig{});
  GoodsWorkloadConfig cfg;
  cfg.locations = {{0, 1.0}, {55, 1.0}};
  cfg.max_size = 3;
  cfg.seed = 3;
  const auto rs = generate_goods_requests(cfg, SimClock(0.0, 1.0, 2000), city.graph);
  REQUIRE(rs.size() > 1000);
  bool far_seen = false;
  for (const Request& r : rs) {
    CHECK(r.kind == RequestKind::goods);
    CHECK(r.origin != r.destination);
    CHECK(city.graph.dist(r.origin, r.destination) <= 8.05);
    CHECK(r.size >= 1);
    CHECK(r.size <= 3);
    far_seen = far_seen || city.graph.dist(r.origin, r.destination) == 8.0;
  }
  CHECK(far_seen);
}

TEST_CASE("same seed gives an identical stream, another seed does not") {
  const City city = build_grid(GridConfig{});
  PassengerWorkloadConfig p;
  p.rate_per_min = 2.0;
  p.hotspots = {{22, 6.0}};
  p.seed = 9;
  const SimClock clock(0.0, 1.0, 300);
  const auto a = generate_passenger_requests(p, clock, city.graph);
  const auto b = generate_passenger_requests(p, clock, city.graph);
  p.seed = 10;
  const auto c = generate_passenger_requests(p, clock, city.graph);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].origin == b[i].origin);
    CHECK(a[i].destination == b[i].destination);
    CHECK(a[i].size == b[i].size);
    CHECK(a[i].request_time == b[i].request_time);
  }
  bool differs = a.size() != c.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i) differs = a[i].origin != c[i].origin;
  CHECK(differs);
}

TEST_CASE("passenger trips respect the trip length window") {
  const City city = build_grid(GridConfig{});
  PassengerWorkloadConfig p;
  p.rate_per_min = 3.0;
  p.seed = 4;
  for (const Request& r : generate_passenger_requests(p, SimClock(0.0, 1.0, 200), city.graph)) {
    const double d = city.graph.dist(r.origin, r.destination);
    CHECK(d >= p.min_trip_km);
    CHECK(d <= p.max_trip_km);
  }
}

TEST_CASE("number_requests orders and numbers") {
  std::vector<Request> rs(3);
  rs[0].request_time = 5;
  rs[1].request_time = 1;
  rs[2].request_time = 1;
  rs[2].kind = RequestKind::goods;
  number_requests(rs);
  CHECK(rs[0].request_time == 1);
  CHECK(rs[0].kind == RequestKind::passenger);
  CHECK(rs[1].kind == RequestKind::goods);
  CHECK(rs[2].request_time == 5);
  for (std::size_t i = 0; i < rs.size(); ++i) CHECK(rs[i].id == static_cast<RequestId>(i));
}

TEST_CASE("trip file: header only gives no requests") {
  const ZoneGrid g(10, 10, 1.0);
  std::istringstream in(std::string(kRequestCsvHeader) + "\n");
  CHECK(load_requests(in, g).empty());
}

TEST_CASE("trip file: single row and time ordering") {
  const ZoneGrid g(10, 10, 1.0);
  std::istringstream in(std::string(kRequestCsvHeader) +
                        "\n7.5,goods,2,0.5,0.5,3.5,0.5\n"
                        "2,passenger,1,1.5,1.5,9.5,9.5\n");
  const auto rs = load_requests(in, g);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].request_time == 2.0);
  CHECK(rs[0].kind == RequestKind::passenger);
  CHECK(rs[0].origin == 11);
  CHECK(rs[0].destination == 99);
  CHECK(rs[1].kind == RequestKind::goods);
  CHECK(rs[1].size == 2);
  CHECK(rs[1].destination == 3);
}

TEST_CASE("trip file: every malformed row is reported with its line number") {
  const ZoneGrid g(10, 10, 1.0);
  std::istringstream in(std::string(kRequestCsvHeader) +
                        "\n1,passenger,1,0.5,0.5,2.5,0.5\n"
                        "x,passenger,1,0.5,0.5,2.5,0.5\n"
                        "3,bike,1,0.5,0.5,2.5,0.5\n"
                        "4,goods,1,0.5,0.5\n");
  try {
    load_requests(in, g);
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("line 5") != std::string::npos);
    CHECK(msg.find("line 2") == std::string::npos);
  }
}

TEST_CASE("trip file: wrong header and missing file") {
  const ZoneGrid g(10, 10, 1.0);
  std::istringstream in("a,b,c\n");
  CHECK_THROWS_AS(load_requests(in, g), Error);
  try {
    load_requests(std::filesystem::path("/nonexistent/trips.csv"), g);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
}

TEST_CASE("trip file round trip through write_requests") {
  const City city = build_grid(GridConfig{});
  PassengerWorkloadConfig p;
  p.rate_per_min = 1.0;
  p.seed = 2;
  auto rs = generate_passenger_requests(p, SimClock(0.0, 1.0, 60), city.graph);
  number_requests(rs);
  std::stringstream buf;
  write_requests(buf, rs, city.grid);
  const auto back = load_requests(buf, city.grid);
  REQUIRE(back.size() == rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(back[i].origin == rs[i].origin);
    CHECK(back[i].destination == rs[i].destination);
    CHECK(back[i].size == rs[i].size);
  }
}

TEST_CASE("forecast: no history gives zeros") {
  const DemandHistory h(4, 10);
  const auto f = predict_demand(h, 3, 2);
  CHECK(f.counts.size() == 8);
  for (double c : f.counts) CHECK(c == 0.0);
}

TEST_CASE("forecast: constant history predicts the constant") {
  DemandHistory h(2, 5);
  for (int step = 0; step < 15; ++step) h.record(step, 1, 3);
  h.close_through(15);
  CHECK(h.completed_days() == 3);
  const auto f = predict_demand(h, 15, 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(f.at(k, 1) == 3.0);
    CHECK(f.at(k, 0) == 0.0);
  }
}

TEST_CASE("forecast: two prior days with 2 and 4 requests give 3") {
  DemandHistory h(3, 10);
  h.record(4, 2, 2);
  h.record(14, 2, 4);
  h.close_through(24);
  const auto f = predict_demand(h, 23, 2);
  CHECK(f.at(1, 2) == 3.0);  // step 24 is step-of-day 4
  CHECK(f.at(0, 2) == 0.0);
}

TEST_CASE("forecast is invariant to the order observations arrive within a step") {
  DemandHistory a(5, 4), b(5, 4);
  const std::vector<std::pair<int, ZoneId>> obs = {{0, 1}, {0, 3}, {1, 1}, {2, 4}, {3, 0}, {3, 1}};
  for (const auto& [s, z] : obs) a.record(s, z);
  // Same observations, zones shuffled within each step.
  b.record(0, 3);
  b.record(0, 1);
  b.record(1, 1);
  b.record(2, 4);
  b.record(3, 1);
  b.record(3, 0);
  a.close_through(4);
  b.close_through(4);
  CHECK(predict_demand(a, 4, 4).counts == predict_demand(b, 4, 4).counts);
}

TEST_CASE("history rejects going back in time") {
  DemandHistory h(2, 5);
  h.record(7, 0);
  CHECK_THROWS_AS(h.record(3, 0), Error);
  CHECK_THROWS_AS(h.record(8, 2), Error);
}
