#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vlfly/geometry.hpp"

namespace vlfly {

class Rng;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  ///< radians, kept in (-pi, pi]

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Body-frame command: forward speed (m/s) and yaw rate (rad/s).
struct ContinuousAction {
  double v = 0.0;
  double omega = 0.0;
  friend bool operator==(const ContinuousAction&, const ContinuousAction&) = default;
};

struct GoalObject {
  std::string id;
  std::string descriptor;
  Vec2 position;
  double radius = 0.3;
  friend bool operator==(const GoalObject&, const GoalObject&) = default;
};

enum class ScenarioKind { Box, Furniture, Barrier };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::Box;
  std::uint64_t seed = 0;
  Rect bounds;
  std::vector<Polygon> obstacles;
  std::vector<GoalObject> goals;
  Pose spawn;

  /// 1-based semantic id of a goal, 0 if absent.
  int goal_semantic_id(std::string_view goal_id) const;
  const GoalObject* find_goal(std::string_view goal_id) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ArenaLayout {
  double size = 10.0;  ///< square arena side, meters
  int min_obstacles = 0;
  int max_obstacles = 2;
};

struct GenerationConfig {
  ArenaLayout box{10.0, 0, 2};
  ArenaLayout furniture{15.0, 4, 8};
  ArenaLayout barrier{20.0, 8, 16};
  int goal_count = 3;
  double goal_radius = 0.3;
  double uav_radius = 0.2;
  /// Extra clearance around spawn/goals beyond the UAV radius.
  double placement_clearance = 0.5;
  double min_goal_separation = 2.0;
  /// Minimum spawn-goal distance as a fraction of the arena side.
  double min_spawn_goal_fraction = 0.3;
  double grid_cell = 0.25;
  double inflation_margin = 0.2;
  int max_attempts = 500;
  std::vector<std::string> items;  ///< empty -> default_items()

  const ArenaLayout& layout(ScenarioKind kind) const;
};

const std::vector<std::string>& default_items();

struct SensorConfig {
  int rays = 64;
  double fov = 82.6 * kPi / 180.0;
  double d_max = 10.0;
};

inline constexpr std::uint8_t kSemanticFree = 0;
inline constexpr std::uint8_t kSemanticObstacle = 255;

struct RayHit {
  double depth = 0.0;
  std::uint8_t semantic = kSemanticFree;
  friend bool operator==(const RayHit&, const RayHit&) = default;
};

/// Ray i looks at image-column bearing -fov/2 + i*fov/(R-1); bearings grow
/// clockwise, so ray 0 is the leftmost.
struct EgoObservation {
  std::vector<RayHit> rays;
  double fov = 0.0;
  std::int64_t timestamp_step = 0;
  friend bool operator==(const EgoObservation&, const EgoObservation&) = default;
};

enum class EpisodeStatus { Running, Success, Collision, Timeout };

std::string_view to_string(EpisodeStatus status);

/// Optional Gaussian actuation noise, off by default.
struct ActuationNoise {
  bool enabled = false;
  double sigma_v = 0.05;
  double sigma_omega = 0.05;
};

Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, const GenerationConfig& cfg = {});

/// Euler-integrated unicycle.
Pose step_dynamics(const Pose& pose, const ContinuousAction& action, double dt);

/// step_dynamics with actuation noise drawn from rng when enabled.
Pose step_dynamics_noisy(const Pose& pose, const ContinuousAction& action, double dt,
                         const ActuationNoise& noise, Rng& rng);

EgoObservation render_observation(const Pose& pose, const Scenario& scenario,
                                  const SensorConfig& cfg, std::int64_t step = 0);

/// Panorama seen from a standoff viewpoint facing the goal.
EgoObservation render_goal_view(const GoalObject& goal, const Scenario& scenario,
                                const SensorConfig& cfg, double standoff = 1.0,
                                double uav_radius = 0.2);

/// Smallest distance from p to any obstacle or the boundary walls.
double clearance(const Scenario& scenario, Vec2 p);

/// True when a disk of the given radius centred at p touches an obstacle or wall.
bool in_collision(const Scenario& scenario, Vec2 p, double radius);

/// True when the whole segment keeps at least `radius` from obstacles and walls.
bool segment_clear(const Scenario& scenario, Vec2 a, Vec2 b, double radius);

EpisodeStatus episode_status(const Pose& pose, const Scenario& scenario, const GoalObject& goal,
                             double delta, std::int64_t step, std::int64_t max_steps,
                             double uav_radius = 0.2);

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Pose& pose);
nlohmann::json to_json(const EgoObservation& obs);
EgoObservation observation_from_json(const nlohmann::json& j);

}  // namespace vlfly
