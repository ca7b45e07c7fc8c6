#include "vlfly/planner.hpp"

#include <algorithm>
#include <cmath>

#include "vlfly/error.hpp"

namespace vlfly {

void WaypointPlan::validate(std::size_t horizon) const {
  if (waypoints.size() != horizon) {
    throw Error(ErrorCode::ShapeMismatch, "plan has " + std::to_string(waypoints.size()) +
                                              " waypoints, expected " + std::to_string(horizon));
  }
  if (!std::isfinite(temporal_distance) || temporal_distance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "temporal distance must be finite and >= 0");
  }
  for (const Vec2& w : waypoints) {
    if (!(std::abs(w.x) <= 1.0) || !(std::abs(w.y) <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "waypoint component outside [-1, 1]");
    }
  }
}

OraclePlanner::OraclePlanner(const Scenario& scenario, const PlannerConfig& cfg)
    : scenario_(&scenario),
      cfg_(cfg),
      grid_(scenario, cfg.grid_cell, cfg.uav_radius + cfg.inflation_margin) {}

std::vector<Vec2> OraclePlanner::grid_path(Vec2 from, Vec2 to) const {
  auto path = grid_.shortest_path(from, to);
  if (!path) {
    throw Error(ErrorCode::UnreachableGoal, "no grid route from (" + std::to_string(from.x) + ", " +
                                                std::to_string(from.y) + ") to (" +
                                                std::to_string(to.x) + ", " + std::to_string(to.y) + ")");
  }
  return *std::move(path);
}

double OraclePlanner::grid_path_length(Vec2 from, Vec2 to) const {
  return polyline_length(grid_path(from, to));
}

std::vector<Vec2> OraclePlanner::route(Vec2 from, Vec2 to) const {
  const auto raw = grid_path(from, to);
  const double radius = cfg_.uav_radius + cfg_.inflation_margin;
  std::vector<Vec2> out{raw.front()};
  std::size_t i = 0;
  while (i + 1 < raw.size()) {
    std::size_t j = i + 1;
    while (j + 1 < raw.size() && segment_clear(*scenario_, raw[i], raw[j + 1], radius)) ++j;
    out.push_back(raw[j]);
    i = j;
  }
  return out;
}

WaypointPlan plan_from_route(const std::vector<Vec2>& route, const Pose& pose,
                             const PlannerConfig& cfg) {
  WaypointPlan plan;
  const double length = polyline_length(route);
  plan.temporal_distance = length / cfg.step_length();
  const double spacing = cfg.step_length() * cfg.waypoint_stride;

  std::size_t seg = 0;
  double seg_start = 0.0;  // arc length at route[seg]
  for (int k = 1; k <= cfg.horizon; ++k) {
    const double s = std::min(k * spacing, length);
    while (seg + 2 < route.size() && seg_start + distance(route[seg], route[seg + 1]) < s) {
      seg_start += distance(route[seg], route[seg + 1]);
      ++seg;
    }
    Vec2 p = route.back();
    if (route.size() >= 2) {
      const double seg_len = distance(route[seg], route[seg + 1]);
      const double t = seg_len > 0.0 ? std::clamp((s - seg_start) / seg_len, 0.0, 1.0) : 1.0;
      p = route[seg] + t * (route[seg + 1] - route[seg]);
    }
    const Vec2 body = to_body(p - pose.position(), pose.heading);
    plan.waypoints.push_back({std::clamp(body.x / cfg.norm_scale, -1.0, 1.0),
                              std::clamp(body.y / cfg.norm_scale, -1.0, 1.0)});
  }
  return plan;
}

WaypointPlan OraclePlanner::plan(const Pose& pose, const GoalObject& goal) const {
  return plan_from_route(route(pose.position(), goal.position), pose, cfg_);
}

WaypointPlan oracle_plan(const Pose& pose, const GoalObject& goal, const Scenario& scenario,
                         const PlannerConfig& cfg) {
  return OraclePlanner(scenario, cfg).plan(pose, goal);
}

}  // namespace vlfly
