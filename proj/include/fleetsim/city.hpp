#pragma once

// Synthetic urban model: a rectangular zone grid whose zone centers are the
// nodes of a weighted road graph with precomputed all-pairs shortest paths.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace fleetsim {

using ZoneId = std::int32_t;  // zones and road nodes share ids, row-major from 0

struct Point {
  double x_km = 0.0;
  double y_km = 0.0;
};

class ZoneGrid {
 public:
  ZoneGrid() = default;
  ZoneGrid(int width, int height, double cell_km);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_km() const { return cell_km_; }
  int zone_count() const { return width_ * height_; }

  ZoneId zone_at(int col, int row) const { return row * width_ + col; }
  int col(ZoneId z) const { return z % width_; }
  int row(ZoneId z) const { return z / width_; }
  Point center(ZoneId z) const;

  // Zone containing `p`. A point on a shared cell edge belongs to the zone with
  // the smaller id. Throws Error(invalid_argument) outside the grid.
  ZoneId zone_of(Point p) const;

  bool contains(ZoneId z) const { return z >= 0 && z < zone_count(); }

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_km_ = 1.0;
};

struct RoadEdge {
  ZoneId from;
  ZoneId to;
  double weight_km;
};

class RoadGraph {
 public:
  RoadGraph() = default;

  // Builds the graph and its all-pairs shortest distances. Throws if any weight
  // is non-positive, an endpoint is out of range, or the graph is not strongly
  // connected.
  RoadGraph(int node_count, std::vector<RoadEdge> edges);

  int node_count() const { return n_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }

  double dist(ZoneId a, ZoneId b) const { return dist_[index(a, b)]; }

  // First node after `a` on a shortest path from `a` to `b`; `b` when a == b.
  ZoneId next_hop(ZoneId a, ZoneId b) const { return next_[index(a, b)]; }

  double edge_weight(ZoneId a, ZoneId b) const;

  // Sum of shortest distances between consecutive stops; 0 for a single stop.
  double path_weight(std::span<const ZoneId> stops) const;

  // Travel time in minutes at `speed_km_per_min`; throws on non-positive speed.
  double eta(ZoneId a, ZoneId b, double speed_km_per_min) const;

  // One `src dst weight_km` triple per line.
  void write_edge_list(std::ostream& out) const;

  std::span<const double> distance_matrix() const { return dist_; }

 private:
  std::size_t index(ZoneId a, ZoneId b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b);
  }
  void check_node(ZoneId z) const;

  int n_ = 0;
  std::vector<RoadEdge> edges_;
  std::vector<double> dist_;
  std::vector<std::int32_t> next_;
  std::vector<double> direct_;  // direct edge weights, +inf when absent
};

struct GridConfig {
  int width = 10;
  int height = 10;
  double cell_km = 1.0;
  // When set, every undirected lattice edge gets an independent weight drawn
  // uniformly from [weight_min_km, weight_max_km] instead of cell_km.
  bool random_weights = false;
  double weight_min_km = 1.0;
  double weight_max_km = 2.0;
  std::uint64_t seed = 0;
};

// Discrete simulation time: step tau in [0, total_steps], each dt_min long.
class SimClock {
 public:
  SimClock() = default;
  SimClock(double t0_min, double dt_min, int total_steps);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  int total_steps() const { return total_steps_; }
  int step() const { return step_; }
  double now() const { return t0_ + dt_ * step_; }
  double time_at(int step) const { return t0_ + dt_ * step; }
  bool finished() const { return step_ >= total_steps_; }

  void advance();

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  int total_steps_ = 0;
  int step_ = 0;
};

struct City {
  ZoneGrid grid;
  RoadGraph graph;
};

// 4-neighbour lattice over zone centers, symmetric edges.
City build_grid(const GridConfig& config);

}  // namespace fleetsim
