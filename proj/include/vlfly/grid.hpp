#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vlfly/geometry.hpp"

namespace vlfly {

struct Scenario;

/// Occupancy grid over the scenario bounds. A cell is blocked when its centre
/// lies within `inflation` of an obstacle or a boundary wall.
class OccupancyGrid {
 public:
  OccupancyGrid(const Scenario& scenario, double cell, double inflation);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double cell() const { return cell_; }

  bool blocked(int ix, int iy) const { return blocked_[index(ix, iy)] != 0; }
  bool inside(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }
  Vec2 center(int ix, int iy) const;

  /// Cell containing p (clamped to the grid).
  std::pair<int, int> cell_of(Vec2 p) const;

  /// 8-connected A* with the octile heuristic. The endpoint cells are always
  /// treated as traversable. Returns the polyline start, interior cell
  /// centres, goal; nullopt when no route exists.
  std::optional<std::vector<Vec2>> shortest_path(Vec2 start, Vec2 goal) const;

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) +
           static_cast<std::size_t>(ix);
  }

  Vec2 origin_;
  double cell_;
  int nx_;
  int ny_;
  std::vector<std::uint8_t> blocked_;
};

double polyline_length(const std::vector<Vec2>& path);

}  // namespace vlfly
