#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "fleetsim/error.hpp"
#include "fleetsim/pricing.hpp"
#include "fleetsim/random.hpp"

using namespace fleetsim;

namespace {

VehicleType type_with(double base, double mileage, double surge = 0.8) {
  VehicleType t;
  t.base_price = base;
  t.mileage_km = mileage;
  t.surge_coeff = surge;
  return t;
}

// Unit price-to-utility scale so U compares directly with P * delta.
PricingConfig unit_scale() {
  PricingConfig c;
  c.utility_per_money = 1.0;
  return c;
}

}  // namespace

TEST_CASE("initial price: degenerate trip costs the base fare") {
  CHECK(initial_price(0.0, 1, type_with(2.0, 12.0), 0.0, PricingConfig{}) == 2.0);
}

TEST_CASE("initial price: hand substitution gives 5.1") {
  PricingConfig c;
  c.per_km = 1.0;
  c.fuel_weight = 0.5;
  c.wait_discount = 0.05;
  c.gas_price = 3.0;  // 3 / 15 = 0.2 per km
  CHECK(initial_price(6.0, 2, type_with(2.0, 15.0), 4.0, c) == doctest::Approx(5.1));
}

TEST_CASE("initial price: long waits floor at the base fare") {
  CHECK(initial_price(2.0, 1, type_with(2.0, 12.0), 1000.0, PricingConfig{}) == 2.0);
}

TEST_CASE("initial price: invalid inputs") {
  CHECK_THROWS_AS(initial_price(-1.0, 1, type_with(2, 12), 0, PricingConfig{}), Error);
  CHECK_THROWS_AS(initial_price(1.0, 0, type_with(2, 12), 0, PricingConfig{}), Error);
  CHECK_THROWS_AS(initial_price(1.0, 1, type_with(2, 12), -1, PricingConfig{}), Error);
}

TEST_CASE("initial price monotonicity") {
  const VehicleType t = type_with(2.0, 12.0);
  for (double c = 0; c < 20; c += 0.5) {
    CHECK(initial_price(c + 0.5, 1, t, 3, PricingConfig{}) >= initial_price(c, 1, t, 3, PricingConfig{}));
  }
  for (double w = 0; w < 60; w += 1) {
    CHECK(initial_price(10, 1, t, w + 1, PricingConfig{}) <= initial_price(10, 1, t, w, PricingConfig{}));
  }
}

TEST_CASE("zone ranking: descending, ties to the lower id") {
  const auto r = rank_by_value({1.0, 3.0, 3.0, 2.0}, 2);
  CHECK(r.order == std::vector<ZoneId>{1, 2, 3, 0});
  CHECK(r.rank == std::vector<int>{3, 0, 1, 2});
  CHECK(r.in_top(1));
  CHECK(r.in_top(2));
  CHECK_FALSE(r.in_top(3));
}

TEST_CASE("proposed price: destination in the top set keeps the initial price") {
  const auto r = rank_by_value({5.0, 1.0}, 1);
  CHECK(proposed_price(5.1, 0, r, type_with(2, 12)) == 5.1);
}

TEST_CASE("proposed price: best rank outside the top set adds nothing") {
  const auto r = rank_by_value({5.0, 1.0}, 0);
  CHECK(proposed_price(5.1, 0, r, type_with(2, 12)) == 5.1);
}

TEST_CASE("proposed price: half-way rank with surge 0.8 gives 6.12") {
  std::vector<double> values(100);
  for (int z = 0; z < 100; ++z) values[static_cast<std::size_t>(z)] = 100.0 - z;
  const auto r = rank_by_value(values, 10);
  REQUIRE(r.rank[50] == 50);
  CHECK(proposed_price(5.1, 50, r, type_with(2, 12, 0.8)) == doctest::Approx(6.12));
}

TEST_CASE("proposed price never undercuts the initial price") {
  Rng rng(1);
  std::vector<double> values(36);
  for (double& v : values) v = uniform01(rng);
  const auto r = rank_by_value(values, 5);
  for (ZoneId z = 0; z < 36; ++z) {
    const double p = proposed_price(4.0, z, r, type_with(2, 12));
    CHECK(p >= 4.0);
    CHECK((p == 4.0) == (r.in_top(z) || r.rank[static_cast<std::size_t>(z)] == 0));
  }
}

TEST_CASE("utility examples") {
  PassengerProfile zero{0, 0, 0, 0.5};
  CHECK(passenger_utility(zero, 1, 1, 3) == 0.0);
  PassengerProfile p{1, 4, 1, 0.5};
  CHECK(passenger_utility(p, 2, 1, 4) == doctest::Approx(2.5));
  CHECK(passenger_utility(p, 1, 1, 0) == doctest::Approx(1 + 4 + 1));  // wait guarded at one minute
  CHECK_THROWS_AS(passenger_utility(p, 0, 1, 1), Error);
}

TEST_CASE("decision examples") {
  PassengerProfile p;
  p.flexibility = 0.5;
  CHECK_FALSE(decide(0.0, 1.0, p, unit_scale()));
  CHECK(decide(2.5, 5.0, p, unit_scale()));  // P * delta = 2.5, inclusive
  CHECK_FALSE(decide(2.5, 6.0, p, unit_scale()));
  PricingConfig printed = unit_scale();
  printed.printed_decision = true;
  CHECK_FALSE(decide(2.5, 5.0, p, printed));
  CHECK(decide(2.5, 6.0, p, printed));
}

TEST_CASE("raising the price never turns a rejection into an acceptance") {
  PassengerProfile p;
  for (double u = 0; u < 5; u += 0.25) {
    bool accepted = true;
    for (double price = 0; price < 40; price += 0.5) {
      const bool now = decide(u, price, p, PricingConfig{});
      CHECK((accepted || !now));
      accepted = now;
    }
  }
}
