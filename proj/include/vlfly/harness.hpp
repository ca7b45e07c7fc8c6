#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlfly/baselines.hpp"
#include "vlfly/controller.hpp"
#include "vlfly/instruction.hpp"
#include "vlfly/model.hpp"
#include "vlfly/planner.hpp"
#include "vlfly/retrieval.hpp"
#include "vlfly/world.hpp"

namespace vlfly {

enum class PlannerKind { Oracle, Learned, APF, StraightLine, Random };

std::string_view to_string(PlannerKind kind);
PlannerKind parse_planner_kind(std::string_view name);

/// Everything tunable about the simulated system; loaded from the master
/// JSON config.
struct SimConfig {
  GenerationConfig generation;
  SensorConfig sensor;
  ControllerConfig controller;
  PlannerConfig planner;  ///< v_max / f_c / radius are synced from the others
  APFParams apf;
  RetrievalConfig retrieval;
  ActuationNoise noise;
  double delta = 0.5;
  std::int64_t max_steps = 600;
  int context = 5;  ///< P for the oracle and scripted planners
  double goal_standoff = 1.0;

  /// Copies shared quantities (caps, radius, grid) into the sub-configs.
  SimConfig& sync();
  /// The real-world success radius preset.
  static SimConfig real_world_preset();
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);

struct EpisodeConfig {
  ScenarioKind kind = ScenarioKind::Box;
  std::uint64_t seed = 0;
  std::optional<Scenario> scenario;  ///< overrides generation (fixtures)
  std::string instruction;
  std::vector<std::string> items;  ///< empty -> default_items()
  AffordanceTable affordances = AffordanceTable::builtin();
  std::optional<GoalPool> pool;  ///< empty -> built from the scenario goals
  std::optional<std::filesystem::path> pool_path;
  PlannerKind planner = PlannerKind::Oracle;
  std::shared_ptr<const PlannerParams> params;
  std::optional<std::filesystem::path> params_path;
  std::optional<LlmProvider> provider;
  bool bypass_prompting = false;
  /// Goal the instruction refers to; metrics are measured against it. When
  /// unset, the retrieved goal is used.
  std::optional<std::string> target_goal_id;
  SimConfig sim;
};

struct StepRecord {
  std::int64_t step = 0;
  Pose pose;  ///< pose after the action
  Vec2 waypoint;  ///< executed normalized waypoint (zero for direct-action baselines)
  double temporal_distance = 0.0;
  ContinuousAction action;
  EpisodeStatus status = EpisodeStatus::Running;
};

struct EpisodeLog {
  nlohmann::json config_echo;
  Scenario scenario;
  Prompt prompt;
  std::optional<RetrievalResult> retrieval;
  std::string navigated_goal_id;  ///< chosen by retrieval
  std::string target_goal_id;     ///< used for evaluation
  Vec2 target_position;
  Pose spawn;
  std::vector<StepRecord> steps;
  EpisodeStatus outcome = EpisodeStatus::Running;
  double path_length = 0.0;
  double min_goal_distance = 0.0;
  double final_goal_distance = 0.0;
  double shortest_path = 0.0;
  std::optional<std::string> error;  ///< structured error line when the episode aborted

  std::vector<Pose> trajectory() const;
};

nlohmann::json to_json(const EpisodeLog& log, bool with_steps = true);

/// Called once per control step with the frames seen so far, the goal
/// view, and the oracle's plan from the current pose.
using StepObserver = std::function<void(std::int64_t step, const ObsContext& context,
                                        const EgoObservation& goal_obs,
                                        const WaypointPlan& supervision)>;

EpisodeLog run_episode(const EpisodeConfig& cfg);
EpisodeLog run_episode(const EpisodeConfig& cfg, const StepObserver& observer);

/// Grid shortest-path length from the spawn to the goal (same grid as the oracle).
double shortest_path_length(const Scenario& scenario, const GoalObject& goal,
                            const PlannerConfig& cfg = {});

struct Metrics {
  double sr = 0.0;   ///< percent
  double os = 0.0;   ///< percent
  double spl = 0.0;  ///< fraction
  double ne = 0.0;   ///< meters
  std::size_t n = 0;
};

Metrics compute_metrics(const std::vector<EpisodeLog>& logs, double delta);

enum class InstructionMode { Direct, Indirect };

struct SuiteConfig {
  std::vector<ScenarioKind> scenarios;
  std::vector<PlannerKind> planners;
  std::size_t episodes = 10;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  InstructionMode instructions = InstructionMode::Direct;
  bool bypass_prompting = false;
  std::optional<std::filesystem::path> params_path;
  std::optional<std::filesystem::path> pool_path;
  std::optional<Scenario> fixture;  ///< replaces generated scenarios when set
  std::vector<std::string> items;
  AffordanceTable affordances = AffordanceTable::builtin();
  SimConfig sim;
};

SuiteConfig suite_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct BenchmarkCell {
  ScenarioKind scenario;
  PlannerKind planner;
  Metrics metrics;
  std::size_t successes = 0, collisions = 0, timeouts = 0;
  std::vector<std::string> failures;  ///< structured error lines
  std::vector<EpisodeLog> logs;       ///< ordered by seed
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Instruction for the seed's goal: "fly to the <descriptor>" or an
/// affordance cue that maps to it.
std::string benchmark_instruction(const GoalObject& goal, InstructionMode mode,
                                  const AffordanceTable& table);

/// Goal index assigned to an episode seed.
std::size_t benchmark_goal_index(std::uint64_t seed, std::size_t goal_count);

BenchmarkReport run_benchmark(const SuiteConfig& suite);

/// Formats like the tables in navigation papers: one decimal for percentages.
std::string format_percent(double value);

}  // namespace vlfly
