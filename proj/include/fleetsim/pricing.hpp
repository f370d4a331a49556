#pragma once

// Platform initial price, vehicle surge proposal from the zone ranking, and the
// passenger's utility-based accept/reject decision.

#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/fleet.hpp"

namespace fleetsim {

struct PricingConfig {
  double per_km = 1.0;             // w1
  double fuel_weight = 0.5;        // w2
  double wait_discount = 0.05;     // w3, per minute of waiting
  double gas_price = 3.0;          // P_gas per fuel unit
  int top_zones = 10;              // lambda: size of the no-surcharge set L
  double utility_per_money = 0.25; // converts price into utility units for the decision
  // false: accept iff U >= P * delta. true: the comparator as printed, accept iff U < P * delta.
  bool printed_decision = false;
};

struct PassengerProfile {
  double sharing_weight = 1.0;  // w4
  double waiting_weight = 4.0;  // w5
  double type_weight = 1.0;     // w6
  double flexibility = 0.45;    // delta_i
};

struct PassengerProfileRange {
  double flexibility_min = 0.3;
  double flexibility_max = 0.6;
};

// Zones ordered by descending value; rank[z] is z's 0-based position.
struct HotspotRanking {
  std::vector<ZoneId> order;
  std::vector<int> rank;
  std::vector<bool> top;  // membership in L

  int zone_count() const { return static_cast<int>(rank.size()); }
  bool in_top(ZoneId z) const { return top[static_cast<std::size_t>(z)]; }
};

// Descending by value, ties by lower zone id; the first `top_count` form L.
HotspotRanking rank_by_value(const std::vector<double>& values, int top_count);

struct PriceQuote {
  RequestId request = -1;
  double initial = 0.0;
  double proposed = 0.0;
  double route_cost_km = 0.0;
  int sharing = 1;
};

// B_j + w1 * c/k + w2 * (c/k) * (P_gas / M_j) - w3 * T_i, floored at B_j, where
// c is the route cost in km and k the number of requests sharing the route.
double initial_price(double route_cost_km, int sharing, const VehicleType& type, double wait_min,
                     const PricingConfig& config);

// P_init when the destination is in L, else P_init * (1 + (alpha / M) / 2 * b_j).
double proposed_price(double initial, ZoneId destination, const HotspotRanking& ranking,
                      const VehicleType& type);

// w4 / V_C + w5 / max(T_i, 1 minute) + w6 / V_T.
double passenger_utility(const PassengerProfile& profile, int vehicle_occupancy, int type_index,
                         double wait_min);

bool decide(double utility, double price, const PassengerProfile& profile, const PricingConfig& config);

}  // namespace fleetsim
