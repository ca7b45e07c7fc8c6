#include <doctest.h>

#include <cmath>
#include <queue>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vlfly/grid.hpp"
#include "vlfly/rng.hpp"
#include "vlfly/world.hpp"

using namespace vlfly;

namespace {

// Independent reachability check: plain Dijkstra over cell centres, with a
// cell free when its centre has `inflation` clearance.
double dijkstra_length(const Scenario& s, Vec2 from, Vec2 to, double cell, double inflation) {
  const int nx = static_cast<int>(std::ceil(s.bounds.width() / cell));
  const int ny = static_cast<int>(std::ceil(s.bounds.height() / cell));
  auto centre = [&](int i, int j) {
    return Vec2{s.bounds.min.x + (i + 0.5) * cell, s.bounds.min.y + (j + 0.5) * cell};
  };
  auto cell_of = [&](Vec2 p) {
    return std::pair{std::clamp(static_cast<int>((p.x - s.bounds.min.x) / cell), 0, nx - 1),
                     std::clamp(static_cast<int>((p.y - s.bounds.min.y) / cell), 0, ny - 1)};
  };
  const auto [si, sj] = cell_of(from);
  const auto [gi, gj] = cell_of(to);
  std::vector<double> dist(static_cast<std::size_t>(nx * ny), INFINITY);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[static_cast<std::size_t>(sj * nx + si)] = 0.0;
  open.push({0.0, sj * nx + si});
  while (!open.empty()) {
    const auto [d, k] = open.top();
    open.pop();
    if (d > dist[static_cast<std::size_t>(k)]) continue;
    const int i = k % nx, j = k / nx;
    if (i == gi && j == gj) return d;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (!di && !dj) continue;
        const int a = i + di, b = j + dj;
        if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
        const bool endpoint = (a == gi && b == gj);
        if (!endpoint && clearance(s, centre(a, b)) < inflation) continue;
        const double nd = d + cell * std::hypot(di, dj);
        if (nd < dist[static_cast<std::size_t>(b * nx + a)]) {
          dist[static_cast<std::size_t>(b * nx + a)] = nd;
          open.push({nd, b * nx + a});
        }
      }
    }
  }
  return INFINITY;
}

}  // namespace

TEST_CASE("unicycle step closed forms") {
  Pose p = step_dynamics({0, 0, 0}, {1.0, 0.0}, 1.0 / 15.0);
  CHECK(p.x == doctest::Approx(1.0 / 15.0).epsilon(1e-15));
  CHECK(p.y == 0.0);
  CHECK(p.heading == 0.0);

  p = step_dynamics({0, 0, 0}, {0.0, kPi}, 0.5);
  CHECK(p.x == 0.0);
  CHECK(p.y == 0.0);
  CHECK(p.heading == doctest::Approx(kPi / 2).epsilon(1e-15));

  p = step_dynamics({1, 1, kPi}, {2.0, 0.0}, 0.1);
  CHECK(p.x == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.heading == doctest::Approx(kPi));
}

TEST_CASE("straight steps move exactly v dt and headings stay wrapped") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose start{rng.uniform(-5, 5), rng.uniform(-5, 5), wrap_angle(rng.uniform(-10, 10))};
    const double v = rng.uniform(-1, 1), dt = rng.uniform(0.01, 0.2);
    const Pose straight = step_dynamics(start, {v, 0.0}, dt);
    CHECK(std::abs(distance(start.position(), straight.position()) - std::abs(v) * dt) < 1e-12);
    const Pose turned = step_dynamics(start, {v, rng.uniform(-20, 20)}, dt);
    CHECK(turned.heading > -kPi);
    CHECK(turned.heading <= kPi);
  }
  CHECK(wrap_angle(-kPi) == kPi);
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
}

TEST_CASE("identical action sequences give bit-identical trajectories") {
  auto roll = [] {
    Rng rng(5);
    Pose p{};
    std::vector<Pose> out;
    for (int i = 0; i < 200; ++i) {
      p = step_dynamics(p, {rng.uniform(0, 1), rng.uniform(-2, 2)}, 1.0 / 15.0);
      out.push_back(p);
    }
    return out;
  };
  CHECK(roll() == roll());
}

TEST_CASE("noise is off by default and seeded when on") {
  Rng a(3), b(3);
  ActuationNoise off;
  const Pose p{1, 2, 0.3};
  CHECK(step_dynamics_noisy(p, {0.5, 0.2}, 0.1, off, a) == step_dynamics(p, {0.5, 0.2}, 0.1));
  ActuationNoise on{true, 0.1, 0.1};
  Rng c(9), d(9);
  CHECK(step_dynamics_noisy(p, {0.5, 0.2}, 0.1, on, c) == step_dynamics_noisy(p, {0.5, 0.2}, 0.1, on, d));
}

TEST_CASE("empty arena rays see walls or nothing") {
  const Scenario s = test::empty_arena(30.0);
  SensorConfig cfg;
  const Pose pose{0, 0, 0.4};
  const EgoObservation obs = render_observation(pose, s, cfg, 3);
  REQUIRE(obs.rays.size() == 64);
  CHECK(obs.timestamp_step == 3);
  for (std::size_t i = 0; i < obs.rays.size(); ++i) {
    const double bearing = -cfg.fov / 2 + static_cast<double>(i) * cfg.fov / 63.0;
    const double a = pose.heading - bearing;
    // distance to the square's wall along this direction
    const double tx = std::abs(std::cos(a)) > 1e-12 ? 15.0 / std::abs(std::cos(a)) : INFINITY;
    const double ty = std::abs(std::sin(a)) > 1e-12 ? 15.0 / std::abs(std::sin(a)) : INFINITY;
    CHECK(obs.rays[i].depth == doctest::Approx(std::min({tx, ty, 10.0})));
    CHECK(obs.rays[i].semantic == kSemanticFree);
  }
}

TEST_CASE("goal disk straight ahead hits the centre ray at range minus radius") {
  Scenario s = test::empty_arena(30.0);
  s.goals.push_back({"g1", "pink toy", {5.0, 0.0}, 0.3});
  s.goals.push_back({"g2", "apriltag", {-2.0, 0.0}, 0.3});
  s.goals.push_back({"g3", "red ball", {3.0, 2.0}, 0.3});
  SensorConfig cfg;
  cfg.rays = 65;  // odd count puts a ray on the optical axis
  const double heading = 0.7;
  const Vec2 ahead{std::cos(heading), std::sin(heading)};
  s.goals[1].position = 2.0 * ahead;  // 2 m straight ahead
  const EgoObservation obs = render_observation({0, 0, heading}, s, cfg);
  const auto& centre = obs.rays[32];
  // analytic ray/circle intersection: the near root of |t d - c|^2 = r^2
  const double b = dot(ahead, s.goals[1].position);
  const double t = b - std::sqrt(b * b - dot(s.goals[1].position, s.goals[1].position) + 0.09);
  CHECK(t == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(centre.depth == doctest::Approx(t).epsilon(1e-12));
  CHECK(centre.semantic == s.goal_semantic_id("g2"));
  CHECK(centre.semantic == 2);
}

TEST_CASE("ray zero is the leftmost bearing") {
  Scenario s = test::empty_arena(30.0);
  s.obstacles.push_back(make_box({2, 1}, {3, 3}));  // ahead-left for heading 0
  const EgoObservation obs = render_observation({0, 0, 0}, s, SensorConfig{});
  CHECK(obs.rays.front().semantic == kSemanticObstacle);
  CHECK(obs.rays.back().semantic == kSemanticFree);
}

TEST_CASE("render is deterministic and depth shrinks with d_max") {
  const Scenario s = generate_scenario(ScenarioKind::Furniture, 4);
  SensorConfig big;
  SensorConfig small = big;
  small.d_max = 3.0;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Pose p{rng.uniform(s.bounds.min.x + 1, s.bounds.max.x - 1),
                 rng.uniform(s.bounds.min.y + 1, s.bounds.max.y - 1), rng.uniform(-kPi, kPi)};
    if (in_collision(s, p.position(), 0.2)) continue;
    const auto a = render_observation(p, s, big);
    CHECK(a == render_observation(p, s, big));
    const auto b = render_observation(p, s, small);
    for (std::size_t k = 0; k < a.rays.size(); ++k) {
      CHECK(b.rays[k].depth <= a.rays[k].depth);
      CHECK(b.rays[k].depth >= 0.0);
      CHECK(b.rays[k].depth <= 3.0);
    }
  }
}

TEST_CASE("generated scenarios meet their invariants") {
  const GenerationConfig cfg;
  for (ScenarioKind kind : {ScenarioKind::Box, ScenarioKind::Furniture, ScenarioKind::Barrier}) {
    const auto& layout = cfg.layout(kind);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Scenario s = generate_scenario(kind, seed, cfg);
      CHECK(s.kind == kind);
      CHECK(s.seed == seed);
      CHECK(static_cast<int>(s.obstacles.size()) >= layout.min_obstacles);
      CHECK(static_cast<int>(s.obstacles.size()) <= layout.max_obstacles);
      REQUIRE(s.goals.size() == 3);
      CHECK(s.goals[0].descriptor != s.goals[1].descriptor);
      CHECK(s.goals[1].descriptor != s.goals[2].descriptor);
      CHECK(s.goals[0].descriptor != s.goals[2].descriptor);
      CHECK(s.bounds.contains(s.spawn.position()));
      CHECK(!in_collision(s, s.spawn.position(), cfg.uav_radius));
      for (const auto& g : s.goals) {
        CHECK(s.bounds.contains(g.position));
        for (const auto& poly : s.obstacles) CHECK(!contains(poly, g.position));
      }
      if (kind != ScenarioKind::Barrier) {
        // axis-aligned boxes
        for (const auto& poly : s.obstacles) CHECK(poly.vertices.size() == 4);
      }
    }
  }
}

TEST_CASE("generation is deterministic per kind and seed") {
  CHECK(generate_scenario(ScenarioKind::Barrier, 7) == generate_scenario(ScenarioKind::Barrier, 7));
  CHECK(!(generate_scenario(ScenarioKind::Barrier, 7) == generate_scenario(ScenarioKind::Barrier, 8)));
  const Scenario b = generate_scenario(ScenarioKind::Box, 0);
  CHECK(b.obstacles.size() <= 2);
}

TEST_CASE("every generated goal is reachable by an independent grid search") {
  for (ScenarioKind kind : {ScenarioKind::Box, ScenarioKind::Furniture, ScenarioKind::Barrier}) {
    for (std::uint64_t seed : {3ULL, 11ULL, 29ULL}) {
      const Scenario s = generate_scenario(kind, seed);
      for (const auto& g : s.goals) {
        const double len = dijkstra_length(s, s.spawn.position(), g.position, 0.25, 0.4);
        CHECK(std::isfinite(len));
        const OccupancyGrid grid(s, 0.25, 0.4);
        const auto path = grid.shortest_path(s.spawn.position(), g.position);
        REQUIRE(path.has_value());
      }
    }
  }
}

TEST_CASE("impossible layouts report generation failure with the seed") {
  GenerationConfig cfg;
  cfg.box.size = 3.0;  // too small for three separated goals
  cfg.max_attempts = 20;
  try {
    generate_scenario(ScenarioKind::Box, 42, cfg);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GenerationFailure);
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
}

TEST_CASE("episode status priorities") {
  Scenario s = test::empty_arena(10.0);
  s.obstacles.push_back(make_box({1, -1}, {2, 1}));
  const GoalObject goal{"g", "pink toy", {-3, 0}, 0.3};
  CHECK(episode_status({-2.6, 0, 0}, s, goal, 0.5, 0, 600) == EpisodeStatus::Success);
  CHECK(episode_status({1.1, 0, 0}, s, goal, 0.5, 0, 600) == EpisodeStatus::Collision);
  CHECK(episode_status({4.9, 0, 0}, s, goal, 0.5, 0, 600) == EpisodeStatus::Collision);  // wall
  CHECK(episode_status({3.5, 3, 0}, s, goal, 0.5, 600, 600) == EpisodeStatus::Timeout);
  CHECK(episode_status({3.5, 3, 0}, s, goal, 0.5, 5, 600) == EpisodeStatus::Running);
  // success outranks timeout
  CHECK(episode_status({-2.6, 0, 0}, s, goal, 0.5, 600, 600) == EpisodeStatus::Success);
}

TEST_CASE("scenario json round trip") {
  const Scenario s = generate_scenario(ScenarioKind::Barrier, 2);
  CHECK(scenario_from_json(to_json(s)) == s);
  const EgoObservation o = render_observation(s.spawn, s, SensorConfig{}, 4);
  CHECK(observation_from_json(to_json(o)) == o);
}
