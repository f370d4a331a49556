#include "fleetsim/city.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "fleetsim/error.hpp"
#include "fleetsim/kernels.hpp"
#include "fleetsim/random.hpp"

namespace fleetsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ZoneGrid::ZoneGrid(int width, int height, double cell_km)
    : width_(width), height_(height), cell_km_(cell_km) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::invalid_argument, "zone grid needs width, height >= 1");
  }
  if (!(cell_km > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "zone grid needs cell_km > 0");
  }
}

Point ZoneGrid::center(ZoneId z) const {
  return {(col(z) + 0.5) * cell_km_, (row(z) + 0.5) * cell_km_};
}

ZoneId ZoneGrid::zone_of(Point p) const {
  const double max_x = width_ * cell_km_;
  const double max_y = height_ * cell_km_;
  if (!(p.x_km >= 0.0 && p.x_km <= max_x && p.y_km >= 0.0 && p.y_km <= max_y)) {
    throw Error(ErrorKind::invalid_argument,
                "location (" + std::to_string(p.x_km) + ", " + std::to_string(p.y_km) +
                    ") is outside the grid");
  }
  // ceil(v / cell) - 1 puts an edge point in the lower cell.
  auto cell_index = [&](double v, int limit) {
    const int idx = static_cast<int>(std::ceil(v / cell_km_)) - 1;
    return std::clamp(idx, 0, limit - 1);
  };
  return zone_at(cell_index(p.x_km, width_), cell_index(p.y_km, height_));
}

SimClock::SimClock(double t0_min, double dt_min, int total_steps)
    : t0_(t0_min), dt_(dt_min), total_steps_(total_steps) {
  if (!(dt_min > 0.0)) throw Error(ErrorKind::invalid_argument, "clock step must be positive");
  if (total_steps < 0) throw Error(ErrorKind::invalid_argument, "clock step count must be >= 0");
}

void SimClock::advance() {
  if (step_ < total_steps_) ++step_;
}

RoadGraph::RoadGraph(int node_count, std::vector<RoadEdge> edges)
    : n_(node_count), edges_(std::move(edges)) {
  if (n_ < 1) throw Error(ErrorKind::invalid_argument, "road graph needs at least one node");
  const auto n = static_cast<std::size_t>(n_);
  dist_.assign(n * n, kInf);
  next_.assign(n * n, -1);
  direct_.assign(n * n, kInf);
  for (ZoneId a = 0; a < n_; ++a) {
    dist_[index(a, a)] = 0.0;
    next_[index(a, a)] = a;
  }
  for (const RoadEdge& e : edges_) {
    check_node(e.from);
    check_node(e.to);
    if (!(e.weight_km > 0.0)) {
      throw Error(ErrorKind::invalid_argument, "road edge weights must be positive");
    }
    if (e.from == e.to) continue;
    const std::size_t i = index(e.from, e.to);
    direct_[i] = std::min(direct_[i], e.weight_km);
    if (e.weight_km < dist_[i]) {
      dist_[i] = e.weight_km;
      next_[i] = e.to;
    }
  }

  const kernels::KernelTable& k = kernels::active();
  for (std::size_t via = 0; via < n; ++via) {
    const double* row_via = dist_.data() + via * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double to_via = dist_[i * n + via];
      if (to_via == kInf || i == via) continue;
      k.relax_row(dist_.data() + i * n, next_.data() + i * n, row_via, to_via, next_[i * n + via], n);
    }
  }

  for (double d : dist_) {
    if (d == kInf) throw Error(ErrorKind::invalid_argument, "road graph is not strongly connected");
  }
}

void RoadGraph::check_node(ZoneId z) const {
  if (z < 0 || z >= n_) {
    throw Error(ErrorKind::invalid_argument, "unknown location " + std::to_string(z));
  }
}

double RoadGraph::edge_weight(ZoneId a, ZoneId b) const {
  check_node(a);
  check_node(b);
  return direct_[index(a, b)];
}

double RoadGraph::path_weight(std::span<const ZoneId> stops) const {
  if (stops.empty()) throw Error(ErrorKind::invalid_argument, "path needs at least one stop");
  check_node(stops.front());
  double total = 0.0;
  for (std::size_t i = 1; i < stops.size(); ++i) {
    check_node(stops[i]);
    total += dist(stops[i - 1], stops[i]);
  }
  return total;
}

double RoadGraph::eta(ZoneId a, ZoneId b, double speed_km_per_min) const {
  if (!(speed_km_per_min > 0.0)) throw Error(ErrorKind::invalid_argument, "speed must be positive");
  check_node(a);
  check_node(b);
  return dist(a, b) / speed_km_per_min;
}

void RoadGraph::write_edge_list(std::ostream& out) const {
  for (const RoadEdge& e : edges_) out << e.from << ' ' << e.to << ' ' << e.weight_km << '\n';
}

City build_grid(const GridConfig& config) {
  ZoneGrid grid(config.width, config.height, config.cell_km);
  if (config.random_weights &&
      !(config.weight_min_km > 0.0 && config.weight_max_km >= config.weight_min_km)) {
    throw Error(ErrorKind::invalid_argument, "random edge weights need 0 < min <= max");
  }
  Rng rng = make_stream(config.seed, "road-weights");
  std::vector<RoadEdge> edges;
  auto link = [&](ZoneId a, ZoneId b) {
    double w = config.cell_km;
    if (config.random_weights) {
      w = config.weight_min_km + (config.weight_max_km - config.weight_min_km) * uniform01(rng);
    }
    edges.push_back({a, b, w});
    edges.push_back({b, a, w});
  };
  for (int row = 0; row < grid.height(); ++row) {
    for (int col = 0; col < grid.width(); ++col) {
      const ZoneId z = grid.zone_at(col, row);
      if (col + 1 < grid.width()) link(z, grid.zone_at(col + 1, row));
      if (row + 1 < grid.height()) link(z, grid.zone_at(col, row + 1));
    }
  }
  RoadGraph graph(grid.zone_count(), std::move(edges));
  return City{grid, std::move(graph)};
}

}  // namespace fleetsim
