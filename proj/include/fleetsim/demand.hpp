#pragma once

// Requests and where they come from: trip-file replay, Poisson workload
// synthesis for goods and passengers, and the historical-average forecaster.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/random.hpp"

namespace fleetsim {

using RequestId = std::int64_t;

enum class RequestKind { passenger, goods };

// pending -> assigned -> onboard -> delivered, or
// onboard -> at_hop_zone -> pending (next leg starts at the hop-zone).
enum class RequestState { pending, assigned, onboard, at_hop_zone, delivered, rejected };

std::string_view to_string(RequestKind kind);
std::string_view to_string(RequestState state);

struct Request {
  RequestId id = 0;
  RequestKind kind = RequestKind::passenger;
  ZoneId origin = 0;
  ZoneId destination = 0;
  ZoneId location = 0;  // where the current leg starts
  int size = 1;
  double request_time = 0.0;  // minutes
  RequestState state = RequestState::pending;
  int hop_count = 0;
  bool accepted = false;  // committed to a vehicle at least once
};

// ---- workload synthesis -------------------------------------------------

struct ServiceLocation {
  ZoneId zone = 0;
  double rate_per_min = 0.0;  // Poisson lambda per minute
};

struct GoodsWorkloadConfig {
  std::vector<ServiceLocation> locations;
  double radius_km = 8.05;  // 5 miles
  int max_size = 1;         // package count drawn uniformly from [1, max_size]
  std::uint64_t seed = 0;
};

// Hotspot-weighted passenger arrivals with a daily rate profile.
struct PassengerWorkloadConfig {
  double rate_per_min = 0.0;  // fleet-wide mean arrival rate
  // Extra relative weight for selected zones; every zone has base weight 1.
  std::vector<ServiceLocation> hotspots;
  double daily_amplitude = 0.5;  // rate(t) = rate * (1 + a * sin(2 pi (t - phase) / day))
  double daily_phase_min = 360.0;
  double min_trip_km = 1.0;
  double max_trip_km = 8.0;
  std::vector<double> size_weights{0.7, 0.2, 0.1};  // P(size = 1, 2, 3, ...)
  std::uint64_t seed = 0;
};

// Draws a Poisson(lambda) count; lambda == 0 yields 0 without consuming state.
int draw_poisson(double lambda, Rng& rng);

// Per service location, per step: Poisson(rate * dt) new requests, each with a
// drop-off zone drawn uniformly among zones within radius_km of the location.
// Request ids are left at 0; the demand source numbers them after merging.
std::vector<Request> generate_goods_requests(const GoodsWorkloadConfig& config,
                                             const SimClock& clock, const RoadGraph& graph);

std::vector<Request> generate_passenger_requests(const PassengerWorkloadConfig& config,
                                                 const SimClock& clock, const RoadGraph& graph);

// ---- trip files ----------------------------------------------------------

inline constexpr std::string_view kRequestCsvHeader =
    "time_min,kind,size,origin_x,origin_y,dest_x,dest_y";

// Parses the request CSV. Output is sorted by request time (stable). All
// malformed rows are reported together, each with its line number.
std::vector<Request> load_requests(std::istream& in, const ZoneGrid& grid);
std::vector<Request> load_requests(const std::filesystem::path& path, const ZoneGrid& grid);

// Writes requests using zone-center coordinates.
void write_requests(std::ostream& out, std::span<const Request> requests, const ZoneGrid& grid);

// Sorts by (request_time, kind, origin, destination) and assigns ids 0..n-1.
void number_requests(std::vector<Request>& requests);

// ---- forecasting ---------------------------------------------------------

struct DemandForecast {
  int horizon = 0;
  int zones = 0;
  std::vector<double> counts;  // [k * zones + zone]

  double at(int k, ZoneId z) const { return counts[static_cast<std::size_t>(k) * zones + z]; }
};

// Per-zone request counts per step, folded into per-step-of-day sums as each
// day completes.
class DemandHistory {
 public:
  DemandHistory(int zones, int steps_per_day);

  int zones() const { return zones_; }
  int steps_per_day() const { return steps_per_day_; }
  int completed_days() const { return completed_days_; }

  // Adds observations for absolute step `step`. Steps must be non-decreasing;
  // crossing a day boundary folds the finished day into the history.
  void record(int step, ZoneId zone, int count = 1);

  // Folds every day strictly before the one containing `step`.
  void close_through(int step);

  double mean(int step_of_day, ZoneId zone) const;

 private:
  void fold_current_day();

  int zones_;
  int steps_per_day_;
  int completed_days_ = 0;
  int current_day_ = 0;
  std::vector<double> sums_;     // [step_of_day * zones + zone]
  std::vector<int> current_;     // counts for current_day_
};

// Forecast for zone z at step t+k is the mean count at the same step-of-day
// over completed prior days; all zeros without history.
DemandForecast predict_demand(const DemandHistory& history, int step, int horizon);

}  // namespace fleetsim
