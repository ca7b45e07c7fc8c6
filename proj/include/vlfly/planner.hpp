#pragma once

#include <memory>
#include <vector>

#include "vlfly/geometry.hpp"
#include "vlfly/grid.hpp"
#include "vlfly/world.hpp"

namespace vlfly {

/// Temporal distance plus H body-frame waypoints (+x forward, +y left),
/// each component in [-1, 1].
struct WaypointPlan {
  double temporal_distance = 0.0;  ///< expected control steps to the goal
  std::vector<Vec2> waypoints;

  /// Throws ShapeMismatch / InvalidArgument when the invariants fail.
  void validate(std::size_t horizon) const;
};

/// P+1 frames, oldest first.
struct ObsContext {
  std::vector<EgoObservation> frames;
};

struct PlannerConfig {
  int horizon = 5;
  int waypoint_stride = 8;
  double norm_scale = 4.0;  ///< meters mapped to 1.0
  double grid_cell = 0.25;
  double uav_radius = 0.2;
  double inflation_margin = 0.2;
  double v_max = 1.0;
  double f_c = 15.0;

  double step_length() const { return v_max / f_c; }
};

/// Grid-search planner over a fixed scenario. Building the occupancy grid is
/// the expensive part, so it is done once per scenario.
class OraclePlanner {
 public:
  OraclePlanner(const Scenario& scenario, const PlannerConfig& cfg);

  /// Shortest collision-free route (string-pulled grid path), metric polyline.
  std::vector<Vec2> route(Vec2 from, Vec2 to) const;

  WaypointPlan plan(const Pose& pose, const GoalObject& goal) const;

  /// Unsmoothed grid path length, the shortest-path reference for SPL.
  double grid_path_length(Vec2 from, Vec2 to) const;

  const PlannerConfig& config() const { return cfg_; }

 private:
  std::vector<Vec2> grid_path(Vec2 from, Vec2 to) const;

  const Scenario* scenario_;
  PlannerConfig cfg_;
  OccupancyGrid grid_;
};

WaypointPlan oracle_plan(const Pose& pose, const GoalObject& goal, const Scenario& scenario,
                         const PlannerConfig& cfg);

/// Converts a metric route into a plan as seen from `pose`.
WaypointPlan plan_from_route(const std::vector<Vec2>& route, const Pose& pose,
                             const PlannerConfig& cfg);

}  // namespace vlfly
