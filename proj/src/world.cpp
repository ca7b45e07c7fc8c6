#include "vlfly/world.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "vlfly/error.hpp"
#include "vlfly/grid.hpp"
#include "vlfly/rng.hpp"

namespace vlfly {

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Box: return "box";
    case ScenarioKind::Furniture: return "furniture";
    case ScenarioKind::Barrier: return "barrier";
  }
  return "box";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  if (name == "box") return ScenarioKind::Box;
  if (name == "furniture") return ScenarioKind::Furniture;
  if (name == "barrier") return ScenarioKind::Barrier;
  throw Error(ErrorCode::InvalidArgument, "unknown scenario kind '" + std::string(name) + "'");
}

std::string_view to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::Running: return "running";
    case EpisodeStatus::Success: return "success";
    case EpisodeStatus::Collision: return "collision";
    case EpisodeStatus::Timeout: return "timeout";
  }
  return "running";
}

const GoalObject* Scenario::find_goal(std::string_view goal_id) const {
  for (const auto& g : goals) {
    if (g.id == goal_id) return &g;
  }
  return nullptr;
}

int Scenario::goal_semantic_id(std::string_view goal_id) const {
  for (std::size_t i = 0; i < goals.size(); ++i) {
    if (goals[i].id == goal_id) return static_cast<int>(i) + 1;
  }
  return 0;
}

const ArenaLayout& GenerationConfig::layout(ScenarioKind kind) const {
  switch (kind) {
    case ScenarioKind::Box: return box;
    case ScenarioKind::Furniture: return furniture;
    case ScenarioKind::Barrier: return barrier;
  }
  return box;
}

const std::vector<std::string>& default_items() {
  static const std::vector<std::string> items = {
      "blue backpack", "pink toy",    "apriltag",        "wooden chair", "red ball",
      "green plant",   "bookshelf",   "yellow umbrella", "white mug",    "black laptop",
  };
  return items;
}

// ---------------------------------------------------------------------------
// geometry queries

double clearance(const Scenario& scenario, Vec2 p) {
  const Rect& b = scenario.bounds;
  double c = std::min({p.x - b.min.x, b.max.x - p.x, p.y - b.min.y, b.max.y - p.y});
  for (const auto& poly : scenario.obstacles) c = std::min(c, distance_to_polygon(poly, p));
  return c;
}

bool in_collision(const Scenario& scenario, Vec2 p, double radius) {
  return clearance(scenario, p) < radius;
}

bool segment_clear(const Scenario& scenario, Vec2 a, Vec2 b, double radius) {
  const Rect& r = scenario.bounds;
  for (Vec2 p : {a, b}) {
    if (p.x - r.min.x < radius || r.max.x - p.x < radius || p.y - r.min.y < radius ||
        r.max.y - p.y < radius) {
      return false;
    }
  }
  for (const auto& poly : scenario.obstacles) {
    if (segment_polygon_distance(a, b, poly) < radius) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// generation

namespace {

Polygon translate_rotate(const Polygon& local, Vec2 c, double theta) {
  Polygon out;
  out.vertices.reserve(local.vertices.size());
  for (Vec2 v : local.vertices) out.vertices.push_back(c + to_world(v, theta));
  return out;
}

Polygon random_box(Rng& rng, const Rect& bounds, double lo, double hi) {
  const double w = rng.uniform(lo, hi);
  const double h = rng.uniform(lo, hi);
  const double cx = rng.uniform(bounds.min.x + 1.0, bounds.max.x - 1.0);
  const double cy = rng.uniform(bounds.min.y + 1.0, bounds.max.y - 1.0);
  return make_box({cx - w / 2, cy - h / 2}, {cx + w / 2, cy + h / 2});
}

Polygon random_barrier(Rng& rng, const Rect& bounds) {
  const double len = rng.uniform(2.0, 5.0);
  const double wid = rng.uniform(0.3, 0.9);
  const double theta = rng.uniform(-kPi, kPi);
  const Vec2 c{rng.uniform(bounds.min.x + 1.5, bounds.max.x - 1.5),
               rng.uniform(bounds.min.y + 1.5, bounds.max.y - 1.5)};
  std::vector<Vec2> pts;
  const double jitter = 0.25 * wid;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      pts.push_back({sx * len / 2 + rng.uniform(-jitter, jitter),
                     sy * wid / 2 + rng.uniform(-jitter, jitter)});
    }
  }
  for (double sy : {-1.0, 1.0}) {
    pts.push_back({rng.uniform(-len / 2, len / 2), sy * wid / 2 * rng.uniform(1.0, 1.5)});
  }
  Polygon hull = convex_hull(std::move(pts));
  return translate_rotate(hull, c, theta);
}

std::optional<Vec2> sample_free_point(Rng& rng, const Scenario& s, double margin,
                                      double min_clearance, int tries) {
  for (int i = 0; i < tries; ++i) {
    const Vec2 p{rng.uniform(s.bounds.min.x + margin, s.bounds.max.x - margin),
                 rng.uniform(s.bounds.min.y + margin, s.bounds.max.y - margin)};
    if (clearance(s, p) >= min_clearance) return p;
  }
  return std::nullopt;
}

std::optional<Scenario> try_generate(ScenarioKind kind, std::uint64_t seed,
                                     const GenerationConfig& cfg, Rng& rng,
                                     const std::vector<std::string>& items) {
  const ArenaLayout& layout = cfg.layout(kind);
  Scenario s;
  s.kind = kind;
  s.seed = seed;
  s.bounds = Rect{{0.0, 0.0}, {layout.size, layout.size}};

  const int n_obs = static_cast<int>(rng.uniform_int(layout.min_obstacles, layout.max_obstacles));
  for (int i = 0; i < n_obs; ++i) {
    switch (kind) {
      case ScenarioKind::Box: s.obstacles.push_back(random_box(rng, s.bounds, 0.8, 2.0)); break;
      case ScenarioKind::Furniture: s.obstacles.push_back(random_box(rng, s.bounds, 0.6, 2.2)); break;
      case ScenarioKind::Barrier: s.obstacles.push_back(random_barrier(rng, s.bounds)); break;
    }
  }

  // distinct descriptors: partial Fisher-Yates over the item list
  std::vector<std::string> pool = items;
  const double min_clear = cfg.uav_radius + cfg.placement_clearance;
  for (int k = 0; k < cfg.goal_count; ++k) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(k, static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
    std::optional<Vec2> pos;
    for (int tries = 0; tries < 200 && !pos; ++tries) {
      auto cand = sample_free_point(rng, s, 1.0, min_clear, 1);
      if (!cand) continue;
      const bool separated = std::all_of(s.goals.begin(), s.goals.end(), [&](const GoalObject& g) {
        return distance(g.position, *cand) >= cfg.min_goal_separation;
      });
      if (separated) pos = cand;
    }
    if (!pos) return std::nullopt;
    s.goals.push_back(GoalObject{"g" + std::to_string(k + 1), pool[static_cast<std::size_t>(k)],
                                 *pos, cfg.goal_radius});
  }

  std::optional<Vec2> spawn;
  const double min_sep = cfg.min_spawn_goal_fraction * layout.size;
  for (int tries = 0; tries < 200 && !spawn; ++tries) {
    auto cand = sample_free_point(rng, s, 1.0, min_clear, 1);
    if (!cand) continue;
    const bool far = std::all_of(s.goals.begin(), s.goals.end(), [&](const GoalObject& g) {
      return distance(g.position, *cand) >= min_sep;
    });
    if (far) spawn = cand;
  }
  if (!spawn) return std::nullopt;
  s.spawn = Pose{spawn->x, spawn->y, wrap_angle(rng.uniform(-kPi, kPi))};

  const OccupancyGrid grid(s, cfg.grid_cell, cfg.uav_radius + cfg.inflation_margin);
  for (const auto& g : s.goals) {
    if (!grid.shortest_path(s.spawn.position(), g.position)) return std::nullopt;
  }
  return s;
}

}  // namespace

Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, const GenerationConfig& cfg) {
  const ArenaLayout& layout = cfg.layout(kind);
  if (layout.min_obstacles < 0 || layout.max_obstacles < layout.min_obstacles) {
    throw Error(ErrorCode::InvalidArgument, "obstacle counts must satisfy 0 <= min <= max");
  }
  if (!(layout.size > 2.0)) throw Error(ErrorCode::InvalidArgument, "arena too small");
  const auto& items = cfg.items.empty() ? default_items() : cfg.items;
  if (static_cast<int>(items.size()) < cfg.goal_count || cfg.goal_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "item list smaller than goal count");
  }

  Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(kind) + 1);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    if (auto s = try_generate(kind, seed, cfg, rng, items)) return *std::move(s);
  }
  throw Error(ErrorCode::GenerationFailure,
              "no valid " + std::string(to_string(kind)) + " layout after " +
                  std::to_string(cfg.max_attempts) + " attempts (seed " + std::to_string(seed) + ")");
}

// ---------------------------------------------------------------------------
// dynamics and sensing

Pose step_dynamics(const Pose& pose, const ContinuousAction& action, double dt) {
  return Pose{pose.x + action.v * std::cos(pose.heading) * dt,
              pose.y + action.v * std::sin(pose.heading) * dt,
              wrap_angle(pose.heading + action.omega * dt)};
}

Pose step_dynamics_noisy(const Pose& pose, const ContinuousAction& action, double dt,
                         const ActuationNoise& noise, Rng& rng) {
  if (!noise.enabled) return step_dynamics(pose, action, dt);
  ContinuousAction noisy = action;
  noisy.v += noise.sigma_v * rng.normal();
  noisy.omega += noise.sigma_omega * rng.normal();
  return step_dynamics(pose, noisy, dt);
}

EgoObservation render_observation(const Pose& pose, const Scenario& scenario,
                                  const SensorConfig& cfg, std::int64_t step) {
  EgoObservation obs;
  obs.fov = cfg.fov;
  obs.timestamp_step = step;
  obs.rays.resize(static_cast<std::size_t>(cfg.rays));
  const Vec2 origin = pose.position();
  const Rect& b = scenario.bounds;
  const Vec2 corners[4] = {b.min, {b.max.x, b.min.y}, b.max, {b.min.x, b.max.y}};

  for (int i = 0; i < cfg.rays; ++i) {
    const double bearing = cfg.rays > 1 ? -cfg.fov / 2 + i * cfg.fov / (cfg.rays - 1) : 0.0;
    const double angle = pose.heading - bearing;
    const Vec2 dir{std::cos(angle), std::sin(angle)};

    double best = std::numeric_limits<double>::infinity();
    std::uint8_t sem = kSemanticFree;
    for (int w = 0; w < 4; ++w) {
      if (auto t = ray_segment(origin, dir, corners[w], corners[(w + 1) % 4]); t && *t < best) {
        best = *t;
        sem = kSemanticFree;
      }
    }
    for (const auto& poly : scenario.obstacles) {
      if (auto t = ray_polygon(origin, dir, poly); t && *t < best) {
        best = *t;
        sem = kSemanticObstacle;
      }
    }
    for (std::size_t k = 0; k < scenario.goals.size(); ++k) {
      const auto& g = scenario.goals[k];
      if (auto t = ray_circle(origin, dir, g.position, g.radius); t && *t < best) {
        best = *t;
        sem = static_cast<std::uint8_t>(k + 1);
      }
    }
    RayHit& hit = obs.rays[static_cast<std::size_t>(i)];
    if (best > cfg.d_max) {
      hit = RayHit{cfg.d_max, kSemanticFree};
    } else {
      hit = RayHit{best, sem};
    }
  }
  return obs;
}

EgoObservation render_goal_view(const GoalObject& goal, const Scenario& scenario,
                                const SensorConfig& cfg, double standoff, double uav_radius) {
  const Vec2 to_goal = goal.position - scenario.spawn.position();
  const double base = std::atan2(to_goal.y, to_goal.x);
  for (int k = 0; k < 12; ++k) {
    // 0, +30, -30, +60, ... degrees around the spawn bearing
    const int step = (k + 1) / 2;
    const double theta = base + (k % 2 == 1 ? 1.0 : -1.0) * step * kPi / 6.0;
    const Vec2 p = goal.position - standoff * Vec2{std::cos(theta), std::sin(theta)};
    if (clearance(scenario, p) >= uav_radius) {
      return render_observation(Pose{p.x, p.y, wrap_angle(theta)}, scenario, cfg);
    }
  }
  const Vec2 p = goal.position - standoff * Vec2{std::cos(base), std::sin(base)};
  return render_observation(Pose{p.x, p.y, wrap_angle(base)}, scenario, cfg);
}

EpisodeStatus episode_status(const Pose& pose, const Scenario& scenario, const GoalObject& goal,
                             double delta, std::int64_t step, std::int64_t max_steps,
                             double uav_radius) {
  if (distance(pose.position(), goal.position) <= delta) return EpisodeStatus::Success;
  if (in_collision(scenario, pose.position(), uav_radius)) return EpisodeStatus::Collision;
  if (step >= max_steps) return EpisodeStatus::Timeout;
  return EpisodeStatus::Running;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

nlohmann::json point(Vec2 p) { return nlohmann::json::array({p.x, p.y}); }
Vec2 point_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

nlohmann::json to_json(const Pose& pose) {
  return {{"x", pose.x}, {"y", pose.y}, {"heading", pose.heading}};
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(s.kind));
  j["seed"] = s.seed;
  j["bounds"] = {{"min", point(s.bounds.min)}, {"max", point(s.bounds.max)}};
  auto obstacles = nlohmann::json::array();
  for (const auto& poly : s.obstacles) {
    auto verts = nlohmann::json::array();
    for (Vec2 v : poly.vertices) verts.push_back(point(v));
    obstacles.push_back(std::move(verts));
  }
  j["obstacles"] = std::move(obstacles);
  auto goals = nlohmann::json::array();
  for (const auto& g : s.goals) {
    goals.push_back({{"id", g.id},
                     {"descriptor", g.descriptor},
                     {"position", point(g.position)},
                     {"radius", g.radius}});
  }
  j["goals"] = std::move(goals);
  j["spawn"] = to_json(s.spawn);
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    s.bounds = Rect{point_from(j.at("bounds").at("min")), point_from(j.at("bounds").at("max"))};
    for (const auto& verts : j.at("obstacles")) {
      std::vector<Vec2> pts;
      for (const auto& v : verts) pts.push_back(point_from(v));
      Polygon poly{pts};
      // accept clockwise input
      double area = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) area += cross(pts[i], pts[(i + 1) % pts.size()]);
      if (area < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
      s.obstacles.push_back(std::move(poly));
    }
    for (const auto& g : j.at("goals")) {
      GoalObject goal{g.at("id").get<std::string>(), g.at("descriptor").get<std::string>(),
                      point_from(g.at("position")), g.value("radius", 0.3)};
      if (!(goal.radius > 0.0)) throw Error(ErrorCode::ParseError, "goal radius must be positive");
      if (s.find_goal(goal.id)) throw Error(ErrorCode::ParseError, "duplicate goal id " + goal.id);
      s.goals.push_back(std::move(goal));
    }
    const auto& sp = j.at("spawn");
    s.spawn = Pose{sp.at("x").get<double>(), sp.at("y").get<double>(),
                   wrap_angle(sp.at("heading").get<double>())};
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
}

nlohmann::json to_json(const EgoObservation& obs) {
  auto depth = nlohmann::json::array();
  auto sem = nlohmann::json::array();
  for (const auto& r : obs.rays) {
    depth.push_back(r.depth);
    sem.push_back(r.semantic);
  }
  return {{"depth", std::move(depth)}, {"semantic", std::move(sem)}, {"fov", obs.fov},
          {"step", obs.timestamp_step}};
}

EgoObservation observation_from_json(const nlohmann::json& j) {
  EgoObservation obs;
  const auto& depth = j.at("depth");
  const auto& sem = j.at("semantic");
  if (depth.size() != sem.size()) throw Error(ErrorCode::ParseError, "ray arrays differ in length");
  obs.rays.resize(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    obs.rays[i] = RayHit{depth[i].get<double>(), sem[i].get<std::uint8_t>()};
  }
  obs.fov = j.value("fov", 0.0);
  obs.timestamp_step = j.value("step", std::int64_t{0});
  return obs;
}

}  // namespace vlfly
