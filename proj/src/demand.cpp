#include "fleetsim/demand.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "fleetsim/error.hpp"

namespace fleetsim {

std::string_view to_string(RequestKind kind) {
  return kind == RequestKind::passenger ? "passenger" : "goods";
}

std::string_view to_string(RequestState state) {
  switch (state) {
    case RequestState::pending: return "pending";
    case RequestState::assigned: return "assigned";
    case RequestState::onboard: return "onboard";
    case RequestState::at_hop_zone: return "at-hop-zone";
    case RequestState::delivered: return "delivered";
    case RequestState::rejected: return "rejected";
  }
  return "unknown";
}

int draw_poisson(double lambda, Rng& rng) {
  if (!(lambda > 0.0)) return 0;
  return std::poisson_distribution<int>(lambda)(rng);
}

namespace {

// Zones reachable from `from` within [min_km, max_km], excluding `from`.
std::vector<ZoneId> zones_within(const RoadGraph& graph, ZoneId from, double min_km, double max_km) {
  std::vector<ZoneId> out;
  for (ZoneId z = 0; z < graph.node_count(); ++z) {
    if (z == from) continue;
    const double d = graph.dist(from, z);
    if (d >= min_km && d <= max_km) out.push_back(z);
  }
  return out;
}

}  // namespace

std::vector<Request> generate_goods_requests(const GoodsWorkloadConfig& config,
                                             const SimClock& clock, const RoadGraph& graph) {
  if (!(config.radius_km > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "goods delivery radius must be positive");
  }
  std::vector<std::vector<ZoneId>> drop_zones;
  for (const ServiceLocation& loc : config.locations) {
    if (loc.rate_per_min < 0.0) throw Error(ErrorKind::invalid_argument, "negative goods rate");
    if (loc.zone < 0 || loc.zone >= graph.node_count()) {
      throw Error(ErrorKind::invalid_argument, "goods service location outside the grid");
    }
    drop_zones.push_back(zones_within(graph, loc.zone, 0.0, config.radius_km));
  }

  Rng rng(config.seed);
  std::vector<Request> out;
  for (int step = 0; step < clock.total_steps(); ++step) {
    for (std::size_t i = 0; i < config.locations.size(); ++i) {
      const ServiceLocation& loc = config.locations[i];
      const int count = draw_poisson(loc.rate_per_min * clock.dt(), rng);
      for (int c = 0; c < count; ++c) {
        if (drop_zones[i].empty()) continue;
        Request r;
        r.kind = RequestKind::goods;
        r.origin = r.location = loc.zone;
        r.destination = drop_zones[i][uniform_index(rng, drop_zones[i].size())];
        r.size = config.max_size > 1
                     ? 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(config.max_size)))
                     : 1;
        r.request_time = clock.time_at(step);
        out.push_back(r);
      }
    }
  }
  return out;
}

std::vector<Request> generate_passenger_requests(const PassengerWorkloadConfig& config,
                                                 const SimClock& clock, const RoadGraph& graph) {
  const int zones = graph.node_count();
  if (config.rate_per_min < 0.0) throw Error(ErrorKind::invalid_argument, "negative passenger rate");
  if (config.size_weights.empty()) {
    throw Error(ErrorKind::invalid_argument, "passenger size distribution is empty");
  }
  std::vector<double> weight(static_cast<std::size_t>(zones), 1.0);
  for (const ServiceLocation& h : config.hotspots) {
    if (h.zone < 0 || h.zone >= zones) {
      throw Error(ErrorKind::invalid_argument, "passenger hotspot outside the grid");
    }
    weight[static_cast<std::size_t>(h.zone)] += h.rate_per_min;
  }
  double total_weight = 0.0;
  for (double w : weight) total_weight += w;

  std::vector<std::vector<ZoneId>> destinations(static_cast<std::size_t>(zones));
  for (ZoneId z = 0; z < zones; ++z) {
    destinations[static_cast<std::size_t>(z)] =
        zones_within(graph, z, config.min_trip_km, config.max_trip_km);
  }

  Rng rng(config.seed);
  std::discrete_distribution<int> size_dist(config.size_weights.begin(), config.size_weights.end());
  constexpr double kDay = 1440.0;
  std::vector<Request> out;
  for (int step = 0; step < clock.total_steps(); ++step) {
    const double t = clock.time_at(step);
    const double profile =
        std::max(0.0, 1.0 + config.daily_amplitude *
                                std::sin(2.0 * std::numbers::pi * (t - config.daily_phase_min) / kDay));
    const double step_rate = config.rate_per_min * profile * clock.dt();
    for (ZoneId z = 0; z < zones; ++z) {
      const auto& dests = destinations[static_cast<std::size_t>(z)];
      const int count = draw_poisson(step_rate * weight[static_cast<std::size_t>(z)] / total_weight, rng);
      for (int c = 0; c < count; ++c) {
        if (dests.empty()) continue;
        Request r;
        r.kind = RequestKind::passenger;
        r.origin = r.location = z;
        r.destination = dests[uniform_index(rng, dests.size())];
        r.size = 1 + size_dist(rng);
        r.request_time = t;
        out.push_back(r);
      }
    }
  }
  return out;
}

void number_requests(std::vector<Request>& requests) {
  std::stable_sort(requests.begin(), requests.end(), [](const Request& a, const Request& b) {
    if (a.request_time != b.request_time) return a.request_time < b.request_time;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.destination < b.destination;
  });
  for (std::size_t i = 0; i < requests.size(); ++i) requests[i].id = static_cast<RequestId>(i);
}

// ---- trip files ----------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<Request> load_requests(std::istream& in, const ZoneGrid& grid) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kRequestCsvHeader) {
    throw Error(ErrorKind::schema, "line 1: expected header '" + std::string(kRequestCsvHeader) + "'");
  }
  std::vector<Request> out;
  std::vector<std::string> problems;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    auto bad = [&](const std::string& why) {
      problems.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 7) {
      bad("expected 7 fields, got " + std::to_string(fields.size()));
      continue;
    }
    Request r;
    double ox = 0, oy = 0, dx = 0, dy = 0;
    if (!parse_double(fields[0], r.request_time) || r.request_time < 0.0) {
      bad("time_min must be a non-negative number");
      continue;
    }
    const std::string_view kind = trim(fields[1]);
    if (kind == "passenger") {
      r.kind = RequestKind::passenger;
    } else if (kind == "goods") {
      r.kind = RequestKind::goods;
    } else {
      bad("kind must be passenger or goods");
      continue;
    }
    if (!parse_int(fields[2], r.size) || r.size < 1) {
      bad("size must be an integer >= 1");
      continue;
    }
    if (!parse_double(fields[3], ox) || !parse_double(fields[4], oy) ||
        !parse_double(fields[5], dx) || !parse_double(fields[6], dy)) {
      bad("coordinates must be numbers");
      continue;
    }
    try {
      r.origin = r.location = grid.zone_of({ox, oy});
      r.destination = grid.zone_of({dx, dy});
    } catch (const Error&) {
      bad("coordinates outside the grid");
      continue;
    }
    if (r.origin == r.destination) {
      bad("origin and destination fall in the same zone");
      continue;
    }
    out.push_back(r);
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " malformed row(s)";
    for (const auto& p : problems) msg += "; " + p;
    throw Error(ErrorKind::schema, msg);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Request& a, const Request& b) { return a.request_time < b.request_time; });
  return out;
}

std::vector<Request> load_requests(const std::filesystem::path& path, const ZoneGrid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open trip file " + path.string());
  return load_requests(in, grid);
}

void write_requests(std::ostream& out, std::span<const Request> requests, const ZoneGrid& grid) {
  out << kRequestCsvHeader << '\n';
  for (const Request& r : requests) {
    const Point o = grid.center(r.origin);
    const Point d = grid.center(r.destination);
    out << r.request_time << ',' << to_string(r.kind) << ',' << r.size << ',' << o.x_km << ','
        << o.y_km << ',' << d.x_km << ',' << d.y_km << '\n';
  }
}

// ---- forecasting ---------------------------------------------------------

DemandHistory::DemandHistory(int zones, int steps_per_day)
    : zones_(zones),
      steps_per_day_(steps_per_day),
      sums_(static_cast<std::size_t>(zones) * static_cast<std::size_t>(steps_per_day), 0.0),
      current_(sums_.size(), 0) {
  if (zones < 1 || steps_per_day < 1) {
    throw Error(ErrorKind::invalid_argument, "demand history needs zones, steps_per_day >= 1");
  }
}

void DemandHistory::fold_current_day() {
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += current_[i];
  std::fill(current_.begin(), current_.end(), 0);
  ++completed_days_;
  ++current_day_;
}

void DemandHistory::close_through(int step) {
  const int day = step / steps_per_day_;
  while (current_day_ < day) fold_current_day();
}

void DemandHistory::record(int step, ZoneId zone, int count) {
  if (zone < 0 || zone >= zones_) throw Error(ErrorKind::invalid_argument, "zone outside history");
  if (step / steps_per_day_ < current_day_) {
    throw Error(ErrorKind::invalid_argument, "demand history steps must be non-decreasing");
  }
  close_through(step);
  current_[static_cast<std::size_t>(step % steps_per_day_) * zones_ + zone] += count;
}

double DemandHistory::mean(int step_of_day, ZoneId zone) const {
  if (completed_days_ == 0) return 0.0;
  return sums_[static_cast<std::size_t>(step_of_day) * zones_ + zone] / completed_days_;
}

DemandForecast predict_demand(const DemandHistory& history, int step, int horizon) {
  DemandForecast f;
  f.horizon = horizon;
  f.zones = history.zones();
  f.counts.assign(static_cast<std::size_t>(horizon) * history.zones(), 0.0);
  for (int k = 0; k < horizon; ++k) {
    const int sod = (step + k) % history.steps_per_day();
    for (ZoneId z = 0; z < history.zones(); ++z) {
      f.counts[static_cast<std::size_t>(k) * f.zones + z] = history.mean(sod, z);
    }
  }
  return f;
}

}  // namespace fleetsim
