#include "fleetsim/pricing.hpp"

#include <algorithm>
#include <numeric>

#include "fleetsim/error.hpp"

namespace fleetsim {

HotspotRanking rank_by_value(const std::vector<double>& values, int top_count) {
  HotspotRanking r;
  const auto m = values.size();
  r.order.resize(m);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](ZoneId a, ZoneId b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  r.rank.assign(m, 0);
  r.top.assign(m, false);
  for (std::size_t pos = 0; pos < m; ++pos) {
    const auto z = static_cast<std::size_t>(r.order[pos]);
    r.rank[z] = static_cast<int>(pos);
    r.top[z] = static_cast<int>(pos) < top_count;
  }
  return r;
}

double initial_price(double route_cost_km, int sharing, const VehicleType& type, double wait_min,
                     const PricingConfig& config) {
  if (route_cost_km < 0.0 || sharing < 1 || wait_min < 0.0) {
    throw Error(ErrorKind::invalid_argument, "initial price needs cost >= 0, sharing >= 1, wait >= 0");
  }
  const double per_rider_km = route_cost_km / sharing;
  const double price = type.base_price + config.per_km * per_rider_km +
                       config.fuel_weight * per_rider_km * (config.gas_price / type.mileage_km) -
                       config.wait_discount * wait_min;
  return std::max(price, type.base_price);
}

double proposed_price(double initial, ZoneId destination, const HotspotRanking& ranking,
                      const VehicleType& type) {
  if (ranking.in_top(destination)) return initial;
  const double alpha_norm =
      static_cast<double>(ranking.rank[static_cast<std::size_t>(destination)]) / ranking.zone_count();
  return initial * (1.0 + alpha_norm / 2.0 * type.surge_coeff);
}

double passenger_utility(const PassengerProfile& profile, int vehicle_occupancy, int type_index,
                         double wait_min) {
  if (vehicle_occupancy < 1 || type_index < 1 || wait_min < 0.0) {
    throw Error(ErrorKind::invalid_argument, "utility needs occupancy >= 1, type index >= 1, wait >= 0");
  }
  constexpr double kMinWait = 1.0;
  return profile.sharing_weight / vehicle_occupancy +
         profile.waiting_weight / std::max(wait_min, kMinWait) + profile.type_weight / type_index;
}

bool decide(double utility, double price, const PassengerProfile& profile, const PricingConfig& config) {
  const double threshold = price * profile.flexibility * config.utility_per_money;
  return config.printed_decision ? utility < threshold : utility >= threshold;
}

}  // namespace fleetsim
