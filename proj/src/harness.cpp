#include "vlfly/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "vlfly/error.hpp"
#include "vlfly/rng.hpp"

namespace vlfly {

using nlohmann::json;

std::string_view to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Oracle: return "oracle";
    case PlannerKind::Learned: return "learned";
    case PlannerKind::APF: return "apf";
    case PlannerKind::StraightLine: return "straight";
    case PlannerKind::Random: return "random";
  }
  return "oracle";
}

PlannerKind parse_planner_kind(std::string_view name) {
  if (name == "oracle") return PlannerKind::Oracle;
  if (name == "learned") return PlannerKind::Learned;
  if (name == "apf") return PlannerKind::APF;
  if (name == "straight") return PlannerKind::StraightLine;
  if (name == "random") return PlannerKind::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown planner '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// config

SimConfig& SimConfig::sync() {
  planner.v_max = controller.v_max;
  planner.f_c = controller.f_c;
  planner.uav_radius = generation.uav_radius;
  planner.grid_cell = generation.grid_cell;
  planner.inflation_margin = generation.inflation_margin;
  apf.uav_radius = generation.uav_radius;
  return *this;
}

SimConfig SimConfig::real_world_preset() {
  SimConfig cfg;
  cfg.delta = 0.8;
  return cfg.sync();
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_layout(const json& j, const char* key, ArenaLayout& out) {
  if (!j.contains(key)) return;
  const auto& l = j.at(key);
  read_opt(l, "size", out.size);
  read_opt(l, "min_obstacles", out.min_obstacles);
  read_opt(l, "max_obstacles", out.max_obstacles);
}

json layout_json(const ArenaLayout& l) {
  return {{"size", l.size}, {"min_obstacles", l.min_obstacles}, {"max_obstacles", l.max_obstacles}};
}

}  // namespace

SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  try {
    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      read_layout(g, "box", c.generation.box);
      read_layout(g, "furniture", c.generation.furniture);
      read_layout(g, "barrier", c.generation.barrier);
      read_opt(g, "goal_count", c.generation.goal_count);
      read_opt(g, "goal_radius", c.generation.goal_radius);
      read_opt(g, "uav_radius", c.generation.uav_radius);
      read_opt(g, "placement_clearance", c.generation.placement_clearance);
      read_opt(g, "min_goal_separation", c.generation.min_goal_separation);
      read_opt(g, "min_spawn_goal_fraction", c.generation.min_spawn_goal_fraction);
      read_opt(g, "grid_cell", c.generation.grid_cell);
      read_opt(g, "inflation_margin", c.generation.inflation_margin);
      read_opt(g, "max_attempts", c.generation.max_attempts);
      read_opt(g, "items", c.generation.items);
    }
    if (j.contains("sensor")) {
      const auto& s = j.at("sensor");
      read_opt(s, "rays", c.sensor.rays);
      if (s.contains("fov_deg")) c.sensor.fov = s.at("fov_deg").get<double>() * kPi / 180.0;
      read_opt(s, "d_max", c.sensor.d_max);
    }
    if (j.contains("controller")) {
      const auto& s = j.at("controller");
      read_opt(s, "v_max", c.controller.v_max);
      read_opt(s, "omega_max", c.controller.omega_max);
      read_opt(s, "f_c", c.controller.f_c);
      if (s.contains("gains")) {
        const auto& g = s.at("gains");
        auto& k = c.controller.gains;
        read_opt(g, "kp_v", k.kp_v);
        read_opt(g, "ki_v", k.ki_v);
        read_opt(g, "kd_v", k.kd_v);
        read_opt(g, "kp_w", k.kp_w);
        read_opt(g, "ki_w", k.ki_w);
        read_opt(g, "kd_w", k.kd_w);
        read_opt(g, "integral_clamp", k.integral_clamp);
      }
    }
    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      read_opt(p, "horizon", c.planner.horizon);
      read_opt(p, "waypoint_stride", c.planner.waypoint_stride);
      read_opt(p, "norm_scale", c.planner.norm_scale);
      read_opt(p, "context", c.context);
    }
    if (j.contains("apf")) {
      const auto& a = j.at("apf");
      read_opt(a, "k_att", c.apf.k_att);
      read_opt(a, "k_rep", c.apf.k_rep);
      read_opt(a, "rho0", c.apf.rho0);
      read_opt(a, "att_sat", c.apf.att_sat);
    }
    if (j.contains("retrieval")) {
      read_opt(j.at("retrieval"), "logit_scale", c.retrieval.logit_scale);
      read_opt(j.at("retrieval"), "dim", c.retrieval.dim);
    }
    if (j.contains("noise")) {
      read_opt(j.at("noise"), "enabled", c.noise.enabled);
      read_opt(j.at("noise"), "sigma_v", c.noise.sigma_v);
      read_opt(j.at("noise"), "sigma_omega", c.noise.sigma_omega);
    }
    if (j.value("preset", std::string()) == "real-world") c.delta = 0.8;
    read_opt(j, "delta", c.delta);
    read_opt(j, "max_steps", c.max_steps);
    read_opt(j, "goal_standoff", c.goal_standoff);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.controller.validate();
  c.apf.validate();
  if (!(c.delta > 0.0) || c.max_steps <= 0) {
    throw Error(ErrorCode::InvalidArgument, "delta and max_steps must be positive");
  }
  return c.sync();
}

json to_json(const SimConfig& c) {
  const auto& k = c.controller.gains;
  return {
      {"generation",
       {{"box", layout_json(c.generation.box)},
        {"furniture", layout_json(c.generation.furniture)},
        {"barrier", layout_json(c.generation.barrier)},
        {"goal_count", c.generation.goal_count},
        {"goal_radius", c.generation.goal_radius},
        {"uav_radius", c.generation.uav_radius},
        {"grid_cell", c.generation.grid_cell},
        {"inflation_margin", c.generation.inflation_margin}}},
      {"sensor", {{"rays", c.sensor.rays}, {"fov_deg", c.sensor.fov * 180.0 / kPi}, {"d_max", c.sensor.d_max}}},
      {"controller",
       {{"v_max", c.controller.v_max},
        {"omega_max", c.controller.omega_max},
        {"f_c", c.controller.f_c},
        {"gains",
         {{"kp_v", k.kp_v}, {"ki_v", k.ki_v}, {"kd_v", k.kd_v},
          {"kp_w", k.kp_w}, {"ki_w", k.ki_w}, {"kd_w", k.kd_w},
          {"integral_clamp", k.integral_clamp}}}}},
      {"planner",
       {{"horizon", c.planner.horizon},
        {"waypoint_stride", c.planner.waypoint_stride},
        {"norm_scale", c.planner.norm_scale},
        {"context", c.context}}},
      {"apf", {{"k_att", c.apf.k_att}, {"k_rep", c.apf.k_rep}, {"rho0", c.apf.rho0}, {"att_sat", c.apf.att_sat}}},
      {"retrieval", {{"logit_scale", c.retrieval.logit_scale}, {"dim", c.retrieval.dim}}},
      {"noise", {{"enabled", c.noise.enabled}, {"sigma_v", c.noise.sigma_v}, {"sigma_omega", c.noise.sigma_omega}}},
      {"delta", c.delta},
      {"max_steps", c.max_steps},
      {"goal_standoff", c.goal_standoff},
  };
}

// ---------------------------------------------------------------------------
// episodes

std::vector<Pose> EpisodeLog::trajectory() const {
  std::vector<Pose> out;
  out.reserve(steps.size() + 1);
  out.push_back(spawn);
  for (const auto& s : steps) out.push_back(s.pose);
  return out;
}

json to_json(const EpisodeLog& log, bool with_steps) {
  json j;
  j["config"] = log.config_echo;
  j["prompt"] = {{"text", log.prompt.text}, {"source", std::string(to_string(log.prompt.source))}};
  if (log.prompt.matched_item) j["prompt"]["matched_item"] = *log.prompt.matched_item;
  if (log.retrieval) {
    j["retrieval"] = {{"scores", log.retrieval->scores},
                      {"probs", log.retrieval->probs},
                      {"best_index", log.retrieval->best_index},
                      {"best_id", log.retrieval->best_id}};
  }
  j["navigated_goal"] = log.navigated_goal_id;
  j["target_goal"] = log.target_goal_id;
  j["target_position"] = {log.target_position.x, log.target_position.y};
  j["spawn"] = to_json(log.spawn);
  j["outcome"] = std::string(to_string(log.outcome));
  j["step_count"] = log.steps.size();
  j["path_length"] = log.path_length;
  j["min_goal_distance"] = log.min_goal_distance;
  j["final_goal_distance"] = log.final_goal_distance;
  j["shortest_path"] = log.shortest_path;
  if (log.error) j["error"] = json::parse(*log.error);
  if (with_steps) {
    auto steps = json::array();
    for (const auto& s : log.steps) {
      steps.push_back({{"step", s.step},
                       {"pose", to_json(s.pose)},
                       {"waypoint", {s.waypoint.x, s.waypoint.y}},
                       {"temporal_distance", s.temporal_distance},
                       {"action", {{"v", s.action.v}, {"omega", s.action.omega}}},
                       {"status", std::string(to_string(s.status))}});
    }
    j["steps"] = std::move(steps);
  }
  return j;
}

double shortest_path_length(const Scenario& scenario, const GoalObject& goal, const PlannerConfig& cfg) {
  return OraclePlanner(scenario, cfg).grid_path_length(scenario.spawn.position(), goal.position);
}

namespace {

json echo_config(const EpisodeConfig& cfg) {
  json j = {{"scenario", std::string(to_string(cfg.kind))},
            {"seed", cfg.seed},
            {"instruction", cfg.instruction},
            {"planner", std::string(to_string(cfg.planner))},
            {"bypass_prompting", cfg.bypass_prompting},
            {"delta", cfg.sim.delta},
            {"max_steps", cfg.sim.max_steps}};
  if (cfg.scenario) j["fixture"] = true;
  if (cfg.pool_path) j["pool"] = cfg.pool_path->string();
  if (cfg.params_path) j["params"] = cfg.params_path->string();
  if (cfg.target_goal_id) j["target_goal"] = *cfg.target_goal_id;
  return j;
}

GoalPool build_pool(const EpisodeConfig& cfg, const Scenario& scenario) {
  GoalPool pool;
  if (cfg.pool) {
    pool = *cfg.pool;
  } else if (cfg.pool_path) {
    pool = read_pool(*cfg.pool_path);
  } else {
    for (const auto& g : scenario.goals) {
      pool.push_back(GoalPoolEntry{g.id, g.descriptor, embed_descriptor(g.descriptor, cfg.sim.retrieval.dim), g.id});
    }
    return pool;
  }
  for (auto& e : pool) {
    if (e.goal_link) continue;
    for (const auto& g : scenario.goals) {
      if (g.id == e.id || g.descriptor == e.descriptor) {
        e.goal_link = g.id;
        break;
      }
    }
  }
  return pool;
}

ObsContext make_context(const std::deque<EgoObservation>& history, int context) {
  ObsContext ctx;
  const std::size_t want = static_cast<std::size_t>(context) + 1;
  for (std::size_t pad = history.size(); pad < want; ++pad) ctx.frames.push_back(history.front());
  for (const auto& f : history) ctx.frames.push_back(f);
  return ctx;
}

}  // namespace

EpisodeLog run_episode(const EpisodeConfig& cfg) { return run_episode(cfg, {}); }

EpisodeLog run_episode(const EpisodeConfig& cfg_in, const StepObserver& observer) {
  EpisodeConfig cfg = cfg_in;
  SimConfig& sim = cfg.sim;
  sim.sync();

  EpisodeLog log;
  log.config_echo = echo_config(cfg);
  const GoalObject* navigated = nullptr;
  const GoalObject* target = nullptr;
  std::shared_ptr<const PlannerParams> params = cfg.params;

  try {
    log.scenario = cfg.scenario ? *cfg.scenario : generate_scenario(cfg.kind, cfg.seed, sim.generation);
    log.spawn = log.scenario.spawn;
    if (cfg.target_goal_id) {
      target = log.scenario.find_goal(*cfg.target_goal_id);
      if (!target) throw Error(ErrorCode::InvalidArgument, "unknown target goal " + *cfg.target_goal_id);
    }

    const auto& items = cfg.items.empty() ? default_items() : cfg.items;
    const Instruction instr(cfg.instruction);
    if (cfg.bypass_prompting) {
      log.prompt = passthrough_prompt(instr);
    } else if (cfg.provider) {
      log.prompt = external_prompt(instr, *cfg.provider, items, cfg.affordances);
    } else {
      log.prompt = encode_instruction(instr, items, cfg.affordances);
    }

    const GoalPool pool = build_pool(cfg, log.scenario);
    log.retrieval = retrieve(log.prompt, pool, sim.retrieval);
    const auto& best = pool[log.retrieval->best_index];
    if (!best.goal_link || !(navigated = log.scenario.find_goal(*best.goal_link))) {
      throw Error(ErrorCode::UnlinkedRetrieval, "retrieved entry '" + best.id + "' is not a scenario goal");
    }
    if (!target) target = navigated;

    if (cfg.planner == PlannerKind::Learned && !params) {
      if (!cfg.params_path) throw Error(ErrorCode::InvalidArgument, "learned planner needs a params file");
      params = std::make_shared<const PlannerParams>(read_params(*cfg.params_path));
    }
  } catch (const Error& e) {
    log.error = e.structured();
  }

  log.navigated_goal_id = navigated ? navigated->id : std::string();
  log.target_goal_id = target ? target->id : std::string();
  log.target_position = target ? target->position : Vec2{};
  const double spawn_dist = target ? distance(log.spawn.position(), target->position) : 0.0;
  log.min_goal_distance = log.final_goal_distance = spawn_dist;
  if (target) {
    try {
      log.shortest_path = shortest_path_length(log.scenario, *target, sim.planner);
    } catch (const Error& e) {
      if (!log.error) log.error = e.structured();
    }
  }
  if (log.error) {
    log.outcome = EpisodeStatus::Timeout;
    return log;
  }

  const Scenario& scenario = log.scenario;
  std::optional<OraclePlanner> oracle;
  if (cfg.planner == PlannerKind::Oracle || observer) oracle.emplace(scenario, sim.planner);
  const bool needs_frames = cfg.planner == PlannerKind::Learned || static_cast<bool>(observer);
  const int context = cfg.planner == PlannerKind::Learned ? params->config.context : sim.context;
  EgoObservation goal_obs;
  if (needs_frames) {
    goal_obs = render_goal_view(*navigated, scenario, sim.sensor, sim.goal_standoff,
                                sim.generation.uav_radius);
  }

  std::deque<EgoObservation> history;
  PIDState pid;
  Rng noise_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  Rng policy_rng(cfg.seed ^ 0x8CB92BA72F3D8DD7ULL);
  const double dt = sim.controller.dt();

  Pose pose = scenario.spawn;
  std::int64_t t = 0;
  EpisodeStatus status = episode_status(pose, scenario, *target, sim.delta, t, sim.max_steps,
                                        sim.generation.uav_radius);
  while (status == EpisodeStatus::Running) {
    ObsContext ctx;
    if (needs_frames) {
      history.push_back(render_observation(pose, scenario, sim.sensor, t));
      while (static_cast<int>(history.size()) > context + 1) history.pop_front();
      ctx = make_context(history, context);
    }

    StepRecord rec;
    std::optional<WaypointPlan> plan;
    switch (cfg.planner) {
      case PlannerKind::Oracle:
        try {
          plan = oracle->plan(pose, *navigated);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::UnreachableGoal) throw;
          plan = WaypointPlan{0.0, std::vector<Vec2>(static_cast<std::size_t>(sim.planner.horizon))};
        }
        break;
      case PlannerKind::Learned:
        plan = planner_forward(ctx, goal_obs, *params);
        break;
      case PlannerKind::APF:
        rec.action = apf_action(pose, navigated->position, scenario, sim.apf, sim.controller, pid);
        break;
      case PlannerKind::StraightLine:
        rec.action = scripted_action(ScriptedKind::StraightLine, pose, navigated->position,
                                     sim.controller, pid, policy_rng, sim.planner.norm_scale);
        break;
      case PlannerKind::Random:
        rec.action = scripted_action(ScriptedKind::Random, pose, navigated->position, sim.controller,
                                     pid, policy_rng);
        break;
    }
    if (plan) {
      rec.waypoint = plan->waypoints.front();
      rec.temporal_distance = plan->temporal_distance;
      const Vec2 disp = scale_waypoint(rec.waypoint, sim.controller.v_max, sim.controller.f_c);
      rec.action = pid_step(disp, sim.controller, pid, dt);
    }
    if (observer) {
      WaypointPlan supervision;
      try {
        supervision = cfg.planner == PlannerKind::Oracle && plan ? *plan : oracle->plan(pose, *navigated);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnreachableGoal) throw;
        supervision = WaypointPlan{0.0, std::vector<Vec2>(static_cast<std::size_t>(sim.planner.horizon))};
      }
      observer(t, ctx, goal_obs, supervision);
    }

    pose = step_dynamics_noisy(pose, rec.action, dt, sim.noise, noise_rng);
    ++t;
    status = episode_status(pose, scenario, *target, sim.delta, t, sim.max_steps,
                            sim.generation.uav_radius);
    rec.step = t;
    rec.pose = pose;
    rec.status = status;
    log.steps.push_back(rec);
  }

  log.outcome = status;
  const auto traj = log.trajectory();
  for (std::size_t i = 1; i < traj.size(); ++i) {
    log.path_length += distance(traj[i - 1].position(), traj[i].position());
    log.min_goal_distance = std::min(log.min_goal_distance, distance(traj[i].position(), target->position));
  }
  log.final_goal_distance = distance(traj.back().position(), target->position);
  return log;
}

// ---------------------------------------------------------------------------
// metrics

Metrics compute_metrics(const std::vector<EpisodeLog>& logs, double delta) {
  Metrics m;
  m.n = logs.size();
  if (logs.empty()) throw Error(ErrorCode::InvalidArgument, "no episodes to score");
  double success = 0.0, oracle_success = 0.0, spl = 0.0, ne = 0.0;
  for (const auto& log : logs) {
    const bool s = log.outcome == EpisodeStatus::Success;
    if (s) {
      success += 1.0;
      const double denom = std::max(log.path_length, log.shortest_path);
      spl += denom > 0.0 ? log.shortest_path / denom : 1.0;
    }
    if (log.min_goal_distance <= delta) oracle_success += 1.0;
    ne += log.final_goal_distance;
  }
  const double n = static_cast<double>(logs.size());
  m.sr = 100.0 * success / n;
  m.os = 100.0 * oracle_success / n;
  m.spl = spl / n;
  m.ne = ne / n;
  return m;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  return buf;
}

// ---------------------------------------------------------------------------
// benchmark

std::size_t benchmark_goal_index(std::uint64_t seed, std::size_t goal_count) {
  return static_cast<std::size_t>(seed % goal_count);
}

std::string benchmark_instruction(const GoalObject& goal, InstructionMode mode,
                                  const AffordanceTable& table) {
  if (mode == InstructionMode::Indirect) {
    for (const auto& [cue, item] : table.entries()) {
      if (item == goal.descriptor) return "fly where you can " + cue;
    }
  }
  return "fly to the " + goal.descriptor;
}

namespace {

std::vector<std::string> items_from(const json& j, const std::filesystem::path& base) {
  if (j.is_string()) return load_items(base / j.get<std::string>());
  return j.get<std::vector<std::string>>();
}

}  // namespace

SuiteConfig suite_from_json(const json& j, const std::filesystem::path& base_dir) {
  SuiteConfig s;
  try {
    for (const auto& k : j.at("scenarios")) s.scenarios.push_back(parse_scenario_kind(k.get<std::string>()));
    for (const auto& p : j.at("planners")) s.planners.push_back(parse_planner_kind(p.get<std::string>()));
    s.episodes = j.value("episodes", std::size_t{10});
    s.base_seed = j.value("base_seed", std::uint64_t{0});
    s.threads = std::max<std::size_t>(1, j.value("threads", std::size_t{1}));
    const std::string mode = j.value("instructions", std::string("direct"));
    if (mode == "indirect") {
      s.instructions = InstructionMode::Indirect;
    } else if (mode != "direct") {
      throw Error(ErrorCode::InvalidArgument, "instructions must be direct or indirect");
    }
    s.bypass_prompting = j.value("bypass_prompting", false);
    if (j.contains("params")) s.params_path = base_dir / j.at("params").get<std::string>();
    if (j.contains("pool")) s.pool_path = base_dir / j.at("pool").get<std::string>();
    if (j.contains("fixture")) {
      std::ifstream in(base_dir / j.at("fixture").get<std::string>());
      if (!in) throw Error(ErrorCode::IoError, "cannot open fixture " + j.at("fixture").get<std::string>());
      s.fixture = scenario_from_json(json::parse(in));
    }
    if (j.contains("items")) s.items = items_from(j.at("items"), base_dir);
    if (j.contains("affordances")) {
      const auto& a = j.at("affordances");
      s.affordances = a.is_string() ? AffordanceTable::load(base_dir / a.get<std::string>())
                                    : AffordanceTable(a.get<std::map<std::string, std::string>>());
    }
    s.sim = j.contains("config") ? sim_config_from_json(j.at("config")) : SimConfig{}.sync();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("suite: ") + e.what());
  }
  if (s.scenarios.empty() || s.planners.empty() || s.episodes == 0) {
    throw Error(ErrorCode::InvalidArgument, "suite needs scenarios, planners and episodes > 0");
  }
  return s;
}

BenchmarkReport run_benchmark(const SuiteConfig& suite) {
  std::shared_ptr<const PlannerParams> params;
  if (suite.params_path) params = std::make_shared<const PlannerParams>(read_params(*suite.params_path));
  std::optional<GoalPool> pool;
  if (suite.pool_path) pool = read_pool(*suite.pool_path);

  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  BenchmarkReport report;
  std::vector<Job> jobs;
  for (ScenarioKind kind : suite.scenarios) {
    for (PlannerKind planner : suite.planners) {
      const std::size_t cell = report.cells.size();
      report.cells.push_back(BenchmarkCell{kind, planner, {}, 0, 0, 0, {}, {}});
      report.cells.back().logs.resize(suite.episodes);
      for (std::size_t e = 0; e < suite.episodes; ++e) jobs.push_back({cell, suite.base_seed + e});
    }
  }

  auto run_job = [&](const Job& job) {
    BenchmarkCell& cell = report.cells[job.cell];
    EpisodeConfig cfg;
    cfg.kind = cell.scenario;
    cfg.seed = job.seed;
    cfg.planner = cell.planner;
    cfg.params = params;
    cfg.pool = pool;
    cfg.items = suite.items;
    cfg.affordances = suite.affordances;
    cfg.bypass_prompting = suite.bypass_prompting;
    cfg.sim = suite.sim;
    EpisodeLog& slot = cell.logs[job.seed - suite.base_seed];
    try {
      cfg.scenario = suite.fixture ? *suite.fixture
                                   : generate_scenario(cell.scenario, job.seed, suite.sim.generation);
      const auto& goal = cfg.scenario->goals[benchmark_goal_index(job.seed, cfg.scenario->goals.size())];
      cfg.target_goal_id = goal.id;
      cfg.instruction = benchmark_instruction(goal, suite.instructions, suite.affordances);
      slot = run_episode(cfg);
    } catch (const Error& e) {
      slot = EpisodeLog{};
      slot.config_echo = {{"scenario", std::string(to_string(cell.scenario))}, {"seed", job.seed}};
      slot.outcome = EpisodeStatus::Timeout;
      slot.error = e.structured();
    }
  };

  const std::size_t threads = std::min(suite.threads, std::max<std::size_t>(1, jobs.size()));
  if (threads <= 1) {
    for (const auto& job : jobs) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(jobs[i]);
      });
    }
    for (auto& w : workers) w.join();
  }

  for (auto& cell : report.cells) {
    for (const auto& log : cell.logs) {
      if (log.outcome == EpisodeStatus::Success) ++cell.successes;
      if (log.outcome == EpisodeStatus::Collision) ++cell.collisions;
      if (log.outcome == EpisodeStatus::Timeout) ++cell.timeouts;
      if (log.error) cell.failures.push_back(*log.error);
    }
    cell.metrics = compute_metrics(cell.logs, suite.sim.delta);
  }
  return report;
}

json BenchmarkReport::to_json() const {
  auto arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"scenario", std::string(to_string(c.scenario))},
                   {"planner", std::string(to_string(c.planner))},
                   {"N", c.metrics.n},
                   {"SR", c.metrics.sr},
                   {"OS", c.metrics.os},
                   {"SPL", c.metrics.spl},
                   {"NE", c.metrics.ne},
                   {"success", c.successes},
                   {"collision", c.collisions},
                   {"timeout", c.timeouts},
                   {"failures", c.failures}});
  }
  return {{"cells", std::move(arr)}};
}

std::string BenchmarkReport::to_text() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-9s %5s %7s %7s %6s %7s\n", "scenario", "planner", "N",
                "SR", "OS", "SPL", "NE");
  out << line;
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%-10s %-9s %5zu %7s %7s %6.2f %7.2f\n",
                  std::string(to_string(c.scenario)).c_str(), std::string(to_string(c.planner)).c_str(),
                  c.metrics.n, format_percent(c.metrics.sr).c_str(), format_percent(c.metrics.os).c_str(),
                  c.metrics.spl, c.metrics.ne);
    out << line;
  }
  return out.str();
}

}  // namespace vlfly
