#include "vlfly/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "vlfly/world.hpp"

namespace vlfly {

OccupancyGrid::OccupancyGrid(const Scenario& scenario, double cell, double inflation)
    : origin_(scenario.bounds.min), cell_(cell) {
  nx_ = std::max(1, static_cast<int>(std::ceil(scenario.bounds.width() / cell - 1e-9)));
  ny_ = std::max(1, static_cast<int>(std::ceil(scenario.bounds.height() / cell - 1e-9)));
  blocked_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), 0);
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      blocked_[index(ix, iy)] = clearance(scenario, center(ix, iy)) < inflation ? 1 : 0;
    }
  }
}

Vec2 OccupancyGrid::center(int ix, int iy) const {
  return {origin_.x + (ix + 0.5) * cell_, origin_.y + (iy + 0.5) * cell_};
}

std::pair<int, int> OccupancyGrid::cell_of(Vec2 p) const {
  const int ix = static_cast<int>(std::floor((p.x - origin_.x) / cell_));
  const int iy = static_cast<int>(std::floor((p.y - origin_.y) / cell_));
  return {std::clamp(ix, 0, nx_ - 1), std::clamp(iy, 0, ny_ - 1)};
}

std::optional<std::vector<Vec2>> OccupancyGrid::shortest_path(Vec2 start, Vec2 goal) const {
  const auto [sx, sy] = cell_of(start);
  const auto [gx, gy] = cell_of(goal);
  if (sx == gx && sy == gy) return std::vector<Vec2>{start, goal};

  const std::size_t n = blocked_.size();
  const std::size_t s_idx = index(sx, sy);
  const std::size_t g_idx = index(gx, gy);
  auto passable = [&](int ix, int iy) {
    if (!inside(ix, iy)) return false;
    const std::size_t i = index(ix, iy);
    return blocked_[i] == 0 || i == s_idx || i == g_idx;
  };
  auto heuristic = [&](int ix, int iy) {
    const double dx = std::abs(ix - gx), dy = std::abs(iy - gy);
    return (std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy));
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, kInf);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  using Entry = std::tuple<double, double, std::size_t>;  // f, h, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  g[s_idx] = 0.0;
  open.emplace(heuristic(sx, sy), heuristic(sx, sy), s_idx);
  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    const auto [f, h, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == g_idx) break;
    const int cx = static_cast<int>(cur % static_cast<std::size_t>(nx_));
    const int cy = static_cast<int>(cur / static_cast<std::size_t>(nx_));
    for (int k = 0; k < 8; ++k) {
      const int x = cx + kDx[k], y = cy + kDy[k];
      if (!passable(x, y)) continue;
      const bool diagonal = kDx[k] != 0 && kDy[k] != 0;
      // no corner cutting
      if (diagonal && (!passable(cx + kDx[k], cy) || !passable(cx, cy + kDy[k]))) continue;
      const std::size_t nb = index(x, y);
      if (closed[nb]) continue;
      const double cand = g[cur] + (diagonal ? std::sqrt(2.0) : 1.0);
      if (cand < g[nb]) {
        g[nb] = cand;
        parent[nb] = static_cast<std::int64_t>(cur);
        const double hn = heuristic(x, y);
        open.emplace(cand + hn, hn, nb);
      }
    }
  }
  if (!closed[g_idx]) return std::nullopt;

  std::vector<std::size_t> cells;
  for (std::int64_t c = static_cast<std::int64_t>(g_idx); c >= 0; c = parent[static_cast<std::size_t>(c)]) {
    cells.push_back(static_cast<std::size_t>(c));
  }
  std::reverse(cells.begin(), cells.end());

  std::vector<Vec2> path;
  path.reserve(cells.size());
  path.push_back(start);
  for (std::size_t i = 1; i + 1 < cells.size(); ++i) {
    const std::size_t c = cells[i];
    path.push_back(center(static_cast<int>(c % static_cast<std::size_t>(nx_)),
                          static_cast<int>(c / static_cast<std::size_t>(nx_))));
  }
  path.push_back(goal);
  return path;
}

double polyline_length(const std::vector<Vec2>& path) {
  double len = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) len += distance(path[i - 1], path[i]);
  return len;
}

}  // namespace vlfly
