// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlfly/controller.hpp"
#include "vlfly/error.hpp"
#include "vlfly/harness.hpp"
#include "vlfly/instruction.hpp"
#include "vlfly/model.hpp"
#include "vlfly/retrieval.hpp"
#include "vlfly/rng.hpp"
#include "vlfly/training.hpp"

namespace fs = std::filesystem;
using namespace vlfly;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int sh(const std::string& cmd) { return std::system(("(" + cmd + ") >/dev/null 2>&1").c_str()); }

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void retrieval_correctness() {
  const auto table = AffordanceTable::builtin();
  const RetrievalConfig cfg;  // d = 64, logit scale 100
  // goal sets come from generated scenarios; only encoding and retrieval are timed
  const ScenarioKind kinds[] = {ScenarioKind::Box, ScenarioKind::Furniture, ScenarioKind::Barrier};
  std::vector<std::pair<std::vector<std::string>, std::string>> cases;
  for (int i = 0; i < 100; ++i) {
    const Scenario s = generate_scenario(kinds[i % 3], static_cast<std::uint64_t>(2000 + i));
    std::vector<std::string> descriptors;
    for (const auto& g : s.goals) descriptors.push_back(g.descriptor);
    cases.emplace_back(descriptors, s.goals[static_cast<std::size_t>(i) % s.goals.size()].descriptor);
  }
  int correct = 0;
  const auto t0 = Clock::now();
  for (const auto& [descriptors, target] : cases) {
    const GoalPool pool = make_descriptor_pool(descriptors, cfg.dim);
    const Prompt prompt = encode_instruction(Instruction("fly to the " + target), default_items(), table);
    correct += retrieve(prompt, pool, cfg).best_id == target;
  }
  const double secs = seconds_since(t0);
  report(correct == 100 && secs < 1.0, "retrieval-correctness", fmt("%d/100 correct in %.2f ms", correct, 1e3 * secs));
}

void score_and_softmax() {
  double worst = 0.0;
  // (1, 100) -> 100: identical one-hot unit vectors under logit scale 100
  std::vector<float> e(64, 0.0f);
  e[5] = 1.0f;
  const Embedding t(e);
  const GoalPool pool = {{"a", "a", t, {}}};
  worst = std::max(worst, std::abs(score_pool(t, pool, {100.0, 64})[0] - 100.0));
  auto p = softmax(std::vector<double>{std::log(2.0), 0.0});
  worst = std::max({worst, std::abs(p[0] - 2.0 / 3.0), std::abs(p[1] - 1.0 / 3.0)});
  p = softmax(std::vector<double>{4.0, 4.0, 4.0, 4.0});
  for (double v : p) worst = std::max(worst, std::abs(v - 0.25));

  Rng rng(404);
  double worst_sum = 0.0;
  bool finite = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(static_cast<std::size_t>(rng.uniform_int(1, 16)));
    for (double& v : s) v = rng.uniform(-1.0, 1.0) * (rng.uniform() < 0.3 ? 1e3 : 10.0);
    if (i % 10 == 0) s[0] = 1e3;
    const auto q = softmax(s);
    double sum = 0.0;
    for (double v : q) {
      finite = finite && std::isfinite(v) && v >= 0.0 && v <= 1.0;
      sum += v;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  report(worst <= 1e-12 && worst_sum <= 1e-9 && finite, "scaled-dot-softmax",
         fmt("closed-form max err %.2e, max |sum-1| %.2e over 1000 vectors", worst, worst_sum));
}

void waypoint_scaling() {
  Rng rng(606);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double v_max = rng.uniform(0.1, 5.0), f_c = rng.uniform(1.0, 60.0);
    const double k = v_max / f_c;
    const Vec2 a = scale_waypoint(w, v_max, f_c);
    const Vec2 b = scale_waypoint(w, v_max, f_c);
    const double ex = k * w.x, ey = k * w.y;
    mismatches += std::memcmp(&a.x, &ex, 8) != 0 || std::memcmp(&a.y, &ey, 8) != 0;
    mismatches += std::memcmp(&a, &b, sizeof a) != 0;
  }
  const Vec2 unit = scale_waypoint({1, 0}, 1.0, 15.0);
  const bool closed = unit.x == 1.0 / 15.0 && unit.y == 0.0;
  report(mismatches == 0 && closed, "waypoint-scaling",
         fmt("%d bitwise mismatches over 1000 inputs, (1,0)->(%.17g, %g)", mismatches, unit.x, unit.y));
}

void gradient_check_tiny() {
  const auto t0 = Clock::now();
  const ModelConfig cfg = tiny_model_config();  // d_model 8, L 1, P 2, H 2
  Rng rng(17);
  PlannerParams params = PlannerParams::random(cfg, rng);
  params.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.2, 0.2);
  });
  std::vector<TrainingExample> data(2);
  for (auto& ex : data) {
    ex.input.frames = Eigen::MatrixXd::NullaryExpr(cfg.frame_features(), cfg.context + 1, [&] { return rng.uniform(); });
    ex.input.goal = Eigen::VectorXd::NullaryExpr(cfg.frame_features(), [&] { return rng.uniform(); });
    ex.target.temporal_distance = rng.uniform(0, 150);
    for (int h = 0; h < cfg.horizon; ++h) ex.target.waypoints.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  const std::vector<const TrainingExample*> batch{&data[0], &data[1]};
  PlannerGradients grads;
  planner_gradients(params, batch, {}, grads);
  std::vector<const double*> g;
  std::as_const(grads).for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> t) { g.push_back(t.data()); });

  const double eps = 1e-4, floor = 1e-6;
  double worst = 0.0;
  std::string where;
  std::size_t n = 0, tensor = 0;
  params.for_each([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + eps;
      const double up = batch_loss(params, batch, {});
      t.data()[i] = saved - eps;
      const double down = batch_loss(params, batch, {});
      t.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = g[tensor][i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > worst) {
        worst = rel;
        where = name + "[" + std::to_string(i) + "]";
      }
      ++n;
    }
    ++tensor;
  });
  const double secs = seconds_since(t0);
  report(worst < 1e-4 && secs < 30.0, "gradient-check",
         fmt("%zu elements, max rel err %.2e at %s, %.2f s", n, worst, where.c_str(), secs));
}

std::vector<TrainingExample> box_examples(std::uint64_t seed, std::size_t count, std::size_t stride,
                                          const ModelConfig& model) {
  ExportConfig cfg;
  cfg.kind = ScenarioKind::Box;
  cfg.seed = seed;
  cfg.step_stride = stride;
  std::vector<ImitationSample> samples;
  while (samples.size() < count) {
    cfg.episodes = 1;
    auto more = collect_oracle_samples(cfg);
    samples.insert(samples.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    ++cfg.seed;
  }
  samples.resize(count);
  return prepare_examples(samples, model);
}

void imitation_signal() {
  const auto t0 = Clock::now();
  TrainConfig tc;  // default model, 30 epochs
  // training keeps every 4th control step so 2000 samples span more episodes
  const auto train = box_examples(0, 2000, 4, tc.model);
  const auto valid = box_examples(9000, 500, 1, tc.model);
  Rng init_rng(tc.seed);
  const PlannerParams init = PlannerParams::random(tc.model, init_rng);
  const double before = mean_waypoint_mse(init, valid);
  const TrainResult r = train_planner(train, tc, init);
  const double after = mean_waypoint_mse(r.params, valid);
  const double secs = seconds_since(t0);
  report(after < 0.1 * before && secs < 600.0, "imitation-signal",
         fmt("validation MSE %.5f -> %.5f (%.1f%%), train loss %.5f -> %.5f, %.1f s", before, after,
             100.0 * after / before, r.epoch_losses.front(), r.epoch_losses.back(), secs));
}

struct Recomputed {
  double sr, os, spl, ne;
};

Recomputed recompute(const std::vector<EpisodeLog>& logs, double delta) {
  double sr = 0, os = 0, spl = 0, ne = 0;
  for (const auto& log : logs) {
    std::vector<Pose> traj{log.spawn};
    for (const auto& s : log.steps) traj.push_back(s.pose);
    double p = 0, closest = std::hypot(traj[0].x - log.target_position.x, traj[0].y - log.target_position.y);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      p += std::hypot(traj[i].x - traj[i - 1].x, traj[i].y - traj[i - 1].y);
      closest = std::min(closest, std::hypot(traj[i].x - log.target_position.x, traj[i].y - log.target_position.y));
    }
    const bool ok = log.outcome == EpisodeStatus::Success;
    sr += ok;
    os += closest <= delta;
    spl += ok ? log.shortest_path / std::max(p, log.shortest_path) : 0.0;
    ne += std::hypot(traj.back().x - log.target_position.x, traj.back().y - log.target_position.y);
  }
  const double n = static_cast<double>(logs.size());
  return {100 * sr / n, 100 * os / n, spl / n, ne / n};
}

void closed_loop_and_metrics() {
  const auto t0 = Clock::now();
  SuiteConfig suite;
  suite.scenarios = {ScenarioKind::Box, ScenarioKind::Furniture, ScenarioKind::Barrier};
  suite.planners = {PlannerKind::Oracle, PlannerKind::APF};
  suite.episodes = 100;
  suite.base_seed = 1000;
  BenchmarkReport report_all = run_benchmark(suite);

  // learned planner: imitation on noise-perturbed oracle rollouts in Box
  ExportConfig ex;
  ex.kind = ScenarioKind::Box;
  ex.episodes = 60;
  ex.seed = 0;
  ex.sim.noise = {true, 0.1, 0.4};
  TrainConfig tc;
  const TrainResult trained = train_planner(prepare_examples(collect_oracle_samples(ex), tc.model), tc);
  const auto params_path = fs::temp_directory_path() / "vlfly_acceptance_params.bin";
  write_params(trained.params, params_path);
  SuiteConfig learned = suite;
  learned.scenarios = {ScenarioKind::Box};
  learned.planners = {PlannerKind::Learned};
  learned.params_path = params_path;
  const BenchmarkReport learned_report = run_benchmark(learned);
  report_all.cells.push_back(learned_report.cells.front());

  auto sr = [&](ScenarioKind k, PlannerKind p) {
    for (const auto& c : report_all.cells) {
      if (c.scenario == k && c.planner == p) return c.metrics.sr;
    }
    return -1.0;
  };
  const double box = sr(ScenarioKind::Box, PlannerKind::Oracle);
  const double furniture = sr(ScenarioKind::Furniture, PlannerKind::Oracle);
  const double barrier = sr(ScenarioKind::Barrier, PlannerKind::Oracle);
  const double apf_barrier = sr(ScenarioKind::Barrier, PlannerKind::APF);
  const double learned_box = sr(ScenarioKind::Box, PlannerKind::Learned);

  std::ifstream in(VLFLY_DATA_DIR "/u_trap.json");
  EpisodeConfig trap;
  trap.scenario = scenario_from_json(nlohmann::json::parse(in));
  trap.instruction = "fly to the blue backpack";
  trap.planner = PlannerKind::APF;
  const EpisodeStatus trap_outcome = run_episode(trap).outcome;

  const bool ok = box >= 90 && furniture >= 80 && barrier >= 70 && learned_box >= 50 && apf_barrier < barrier &&
                  trap_outcome == EpisodeStatus::Timeout;
  report(ok, "closed-loop-success",
         fmt("oracle SR box %.1f furniture %.1f barrier %.1f; learned box %.1f; apf barrier %.1f; "
             "apf u-trap %s; %.1f s",
             box, furniture, barrier, learned_box, apf_barrier, std::string(to_string(trap_outcome)).c_str(),
             seconds_since(t0)));

  double worst = 0.0;
  bool invariants = true;
  for (const auto& c : report_all.cells) {
    const Recomputed r = recompute(c.logs, suite.sim.delta);
    worst = std::max({worst, std::abs(r.sr - c.metrics.sr), std::abs(r.os - c.metrics.os),
                      std::abs(r.spl - c.metrics.spl), std::abs(r.ne - c.metrics.ne)});
    invariants = invariants && c.metrics.os >= c.metrics.sr && c.metrics.spl <= c.metrics.sr / 100.0 + 1e-12 &&
                 c.metrics.spl >= 0.0;
  }
  report(worst <= 1e-9 && invariants, "metric-oracle-equivalence",
         fmt("%zu cells, max deviation %.2e, OS>=SR and SPL<=SR/100 %s", report_all.cells.size(), worst,
             invariants ? "hold" : "VIOLATED"));
  fs::remove(params_path);
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "vlfly_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = VLFLY_CLI;
  const std::string d = dir.string() + "/";
  std::vector<std::string> diffs;
  int errors = 0;

  auto twice = [&](const std::string& name, const std::function<std::string(const std::string&)>& cmd,
                   const std::string& ext) {
    const std::string a = d + name + "_a" + ext, b = d + name + "_b" + ext;
    errors += sh(cmd(a)) != 0;
    errors += sh(cmd(b)) != 0;
    if (slurp(a).empty() || slurp(a) != slurp(b)) diffs.push_back(name);
  };

  errors += sh(cli + " make-pool --out " + d + "pool.bin") != 0;
  for (const std::string planner : {"oracle", "apf", "straight", "random"}) {
    twice("run_" + planner, [&](const std::string& out) {
      return cli + " run --scenario furniture --seed 5 --planner " + planner +
             " --instruction 'fly to the apriltag' --pool " + d + "pool.bin --out " + out;
    }, ".jsonl");
  }
  twice("export", [&](const std::string& out) {
    return cli + " export-oracle --scenario box --episodes 3 --seed 4 --out " + out;
  }, ".jsonl");
  twice("train", [&](const std::string& out) {
    return cli + " train --data " + d + "export_a.jsonl --epochs 2 --lr 0.001 --seed 3 --out " + out;
  }, ".bin");

  twice("run_learned", [&](const std::string& out) {
    return cli + " run --scenario box --seed 2 --planner learned --instruction 'find a pink toy' --pool " + d +
           "pool.bin --params " + d + "train_a.bin --out " + out;
  }, ".jsonl");

  twice("retrieve", [&](const std::string& out) {
    return cli + " retrieve --instruction 'fly where a student can keep textbooks' --pool " + d + "pool.bin > " + out;
  }, ".json");

  std::ofstream(d + "suite1.json") << R"({"scenarios":["box","barrier"],"planners":["oracle","apf","random"],)"
                                      R"("episodes":8,"base_seed":70,"threads":1})";
  std::ofstream(d + "suite4.json") << R"({"scenarios":["box","barrier"],"planners":["oracle","apf","random"],)"
                                      R"("episodes":8,"base_seed":70,"threads":4})";
  twice("bench_serial", [&](const std::string& out) { return cli + " bench --suite " + d + "suite1.json --out " + out; },
        ".json");
  twice("bench_parallel", [&](const std::string& out) { return cli + " bench --suite " + d + "suite4.json --out " + out; },
        ".json");
  if (slurp(d + "bench_serial_a.json") != slurp(d + "bench_parallel_a.json")) diffs.push_back("bench_serial_vs_parallel");

  std::string list;
  for (const auto& s : diffs) list += " " + s;
  report(diffs.empty() && errors == 0, "determinism",
         fmt("11 CLI invocations repeated, %d nonzero exits, differing outputs:%s", errors,
             diffs.empty() ? " none" : list.c_str()));
  fs::remove_all(dir);
}

void pool_round_trip() {
  const GoalPool pool = make_descriptor_pool(default_items(), 64);
  const fs::path path = fs::temp_directory_path() / "vlfly_acceptance_pool.bin";
  write_pool(pool, path);
  const GoalPool back = read_pool(path);
  bool exact = back.size() == pool.size();
  for (std::size_t i = 0; exact && i < pool.size(); ++i) {
    exact = back[i].id == pool[i].id && back[i].descriptor == pool[i].descriptor &&
            std::memcmp(back[i].embedding.values().data(), pool[i].embedding.values().data(), 64 * sizeof(float)) == 0;
  }
  const auto bytes = encode_pool(pool);
  exact = exact && encode_pool(back) == bytes;
  fs::remove(path);

  auto magic = bytes;
  magic[1] = '?';
  std::vector<char> truncated(bytes.begin(), bytes.end() - 7);
  // scale the first entry's vector by one half
  auto norm = bytes;
  const std::size_t id_len = static_cast<unsigned char>(bytes[16]);
  const std::size_t desc_at = 18 + id_len;
  const std::size_t desc_len = static_cast<unsigned char>(bytes[desc_at]);
  const std::size_t values_at = desc_at + 2 + desc_len;
  for (std::size_t k = 0; k < 64; ++k) {
    float v;
    std::memcpy(&v, &norm[values_at + 4 * k], 4);
    v *= 0.5f;
    std::memcpy(&norm[values_at + 4 * k], &v, 4);
  }
  std::string norm_detail;
  try {
    decode_pool(norm);
  } catch (const Error& e) {
    norm_detail = e.what();
  }
  const bool errs = code_of([&] { decode_pool(magic); }) == ErrorCode::BadMagic &&
                    code_of([&] { decode_pool(truncated); }) == ErrorCode::TruncatedFile &&
                    code_of([&] { decode_pool(norm); }) == ErrorCode::NormViolation &&
                    norm_detail.find(pool[0].id) != std::string::npos;
  report(exact && errs, "pool-round-trip",
         fmt("%zu entries bit-exact: %s; bad-magic/truncated-file/norm-violation: %s", pool.size(),
             exact ? "yes" : "no", errs ? "raised as specified" : "WRONG"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  auto guarded = [](const char* name, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  };
  guarded("retrieval-correctness", retrieval_correctness);
  guarded("scaled-dot-softmax", score_and_softmax);
  guarded("waypoint-scaling", waypoint_scaling);
  guarded("gradient-check", gradient_check_tiny);
  guarded("imitation-signal", imitation_signal);
  guarded("closed-loop-success", closed_loop_and_metrics);
  guarded("determinism", determinism);
  guarded("pool-round-trip", pool_round_trip);
  std::printf("%d failing criteria, %.1f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
