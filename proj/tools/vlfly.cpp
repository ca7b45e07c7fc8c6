// vlfly: command-line front end for the navigation workbench.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vlfly/error.hpp"
#include "vlfly/harness.hpp"
#include "vlfly/instruction.hpp"
#include "vlfly/model.hpp"
#include "vlfly/retrieval.hpp"
#include "vlfly/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vlfly;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

// Writes next to the destination and renames, so readers never see half a file.
void write_atomically(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << bytes;
    if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct Common {
  std::string config;
  std::string items;
  std::string affordances;
};

SimConfig sim_from(const Common& c) {
  if (c.config.empty()) return SimConfig{}.sync();
  const json j = load_json(c.config);
  return j.contains("sim") ? sim_config_from_json(j.at("sim")) : SimConfig{}.sync();
}

std::vector<std::string> items_from(const Common& c) {
  return c.items.empty() ? default_items() : load_items(c.items);
}

AffordanceTable affordances_from(const Common& c) {
  return c.affordances.empty() ? AffordanceTable::builtin() : AffordanceTable::load(c.affordances);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "master config JSON");
  cmd->add_option("--items", c.items, "item list JSON");
  cmd->add_option("--affordances", c.affordances, "affordance table JSON");
}

// ---------------------------------------------------------------------------

struct RunArgs {
  Common common;
  std::string scenario, planner, instruction, pool, params, fixture, provider, out;
  std::uint64_t seed = 0;
  bool bypass = false;
};

int cmd_run(const RunArgs& a) {
  EpisodeConfig cfg;
  cfg.kind = parse_scenario_kind(a.scenario);
  cfg.seed = a.seed;
  cfg.planner = parse_planner_kind(a.planner);
  cfg.instruction = a.instruction;
  cfg.pool_path = a.pool;
  if (!a.params.empty()) cfg.params_path = a.params;
  if (!a.fixture.empty()) cfg.scenario = scenario_from_json(load_json(a.fixture));
  if (!a.provider.empty()) cfg.provider = LlmProvider{a.provider};
  cfg.bypass_prompting = a.bypass;
  cfg.items = items_from(a.common);
  cfg.affordances = affordances_from(a.common);
  cfg.sim = sim_from(a.common);

  const EpisodeLog log = run_episode(cfg);
  json j = to_json(log, true);
  json steps = std::move(j["steps"]);
  j.erase("steps");
  j["record"] = "episode";
  std::ostringstream out;
  out << j.dump() << '\n';
  for (auto& s : steps) {
    s["record"] = "step";
    out << s.dump() << '\n';
  }
  write_atomically(a.out, out.str());

  if (log.error) {
    std::cerr << *log.error << '\n';
    return 1;
  }
  std::cout << to_string(log.outcome) << " steps=" << log.steps.size()
            << " final_distance=" << log.final_goal_distance << '\n';
  return 0;
}

int cmd_bench(const std::string& suite_path, const std::string& out_path, int threads) {
  const fs::path p(suite_path);
  SuiteConfig suite = suite_from_json(load_json(p), p.parent_path());
  if (threads > 0) suite.threads = static_cast<std::size_t>(threads);
  const BenchmarkReport report = run_benchmark(suite);
  write_atomically(out_path, report.to_json().dump(2) + "\n");
  std::cout << report.to_text();
  return 0;
}

struct TrainArgs {
  Common common;
  std::string data, out;
  std::optional<std::size_t> epochs, batch;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.common.config.empty()) cfg = train_config_from_json(load_json(a.common.config));
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.lr) cfg.lr = *a.lr;
  if (a.seed) cfg.seed = *a.seed;

  const auto samples = read_dataset(a.data);
  const auto examples = prepare_examples(samples, cfg.model);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult result = train_planner(examples, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_params(result.params, a.out);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::printf("epoch %zu loss %.6f\n", e + 1, result.epoch_losses[e]);
  }
  std::printf("samples %zu params %zu seconds %.1f\n", examples.size(), result.params.parameter_count(), secs);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  GradcheckConfig cfg;
  cfg.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckReport r = gradient_check(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = r.max_rel_error < 1e-4;
  std::cout << json{{"checked", r.checked},
                    {"max_rel_error", r.max_rel_error},
                    {"worst_tensor", r.worst_tensor},
                    {"worst_index", r.worst_index},
                    {"analytic", r.analytic},
                    {"numeric", r.numeric},
                    {"seconds", secs},
                    {"pass", ok}}
                   .dump()
            << '\n';
  if (!ok) {
    std::cerr << Error(ErrorCode::NumericMismatch, "gradient check failed in " + r.worst_tensor).structured()
              << '\n';
    return 1;
  }
  return 0;
}

int cmd_retrieve(const Common& common, const std::string& instruction, const std::string& pool_path,
                 bool bypass) {
  const SimConfig sim = sim_from(common);
  const Instruction instr(instruction);
  const Prompt prompt = bypass ? passthrough_prompt(instr)
                               : encode_instruction(instr, items_from(common), affordances_from(common));
  const GoalPool pool = read_pool(pool_path);
  const RetrievalResult r = retrieve(prompt, pool, sim.retrieval);
  json entries = json::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    entries.push_back({{"id", pool[i].id}, {"score", r.scores[i]}, {"prob", r.probs[i]}});
  }
  json j = {{"prompt", prompt.text},
            {"source", std::string(to_string(prompt.source))},
            {"best_id", r.best_id},
            {"best_index", r.best_index},
            {"entries", std::move(entries)}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_export(const Common& common, const std::string& scenario, std::size_t episodes, std::uint64_t seed,
               std::size_t stride, const std::string& out_path) {
  ExportConfig cfg;
  cfg.kind = parse_scenario_kind(scenario);
  cfg.episodes = episodes;
  cfg.seed = seed;
  cfg.step_stride = stride;
  cfg.sim = sim_from(common);
  std::ostringstream out;
  const std::size_t n = export_oracle_dataset(cfg, out);
  write_atomically(out_path, out.str());
  std::cout << "samples " << n << '\n';
  return 0;
}

int cmd_make_pool(const Common& common, const std::string& out_path) {
  const SimConfig sim = sim_from(common);
  write_pool(make_descriptor_pool(items_from(common), sim.retrieval.dim), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vision-language UAV navigation workbench"};
  app.require_subcommand(1);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "fly one episode and log it as JSONL");
  c_run->add_option("--scenario", run.scenario, "box|furniture|barrier")->required();
  c_run->add_option("--seed", run.seed)->required();
  c_run->add_option("--planner", run.planner, "oracle|learned|apf|straight|random")->required();
  c_run->add_option("--instruction", run.instruction)->required();
  c_run->add_option("--pool", run.pool, "goal pool file")->required();
  c_run->add_option("--params", run.params, "learned planner parameters");
  c_run->add_option("--fixture", run.fixture, "scenario JSON replacing generation");
  c_run->add_option("--provider", run.provider, "external prompt rewriter command");
  c_run->add_flag("--bypass-prompting", run.bypass);
  c_run->add_option("--out", run.out)->required();
  add_common(c_run, run.common);

  std::string suite, bench_out;
  int threads = 0;
  auto* c_bench = app.add_subcommand("bench", "run a benchmark suite");
  c_bench->add_option("--suite", suite)->required();
  c_bench->add_option("--out", bench_out)->required();
  c_bench->add_option("--threads", threads, "override the suite's worker count");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "imitation-train the waypoint planner");
  c_train->add_option("--data", train.data)->required();
  c_train->add_option("--epochs", train.epochs);
  c_train->add_option("--lr", train.lr);
  c_train->add_option("--seed", train.seed);
  c_train->add_option("--batch", train.batch);
  c_train->add_option("--out", train.out)->required();
  c_train->add_option("--config", train.common.config, "master config JSON");

  std::uint64_t gc_seed = 7;
  auto* c_grad = app.add_subcommand("gradcheck", "compare analytic and numeric planner gradients");
  c_grad->add_option("--seed", gc_seed);

  Common ret_common;
  std::string ret_instruction, ret_pool;
  bool ret_bypass = false;
  auto* c_ret = app.add_subcommand("retrieve", "encode an instruction and score it against a pool");
  c_ret->add_option("--instruction", ret_instruction)->required();
  c_ret->add_option("--pool", ret_pool)->required();
  c_ret->add_flag("--bypass-prompting", ret_bypass);
  add_common(c_ret, ret_common);

  Common exp_common;
  std::string exp_scenario, exp_out;
  std::size_t exp_episodes = 10;
  std::uint64_t exp_seed = 0;
  std::size_t exp_stride = 1;
  auto* c_exp = app.add_subcommand("export-oracle", "write oracle imitation samples as JSONL");
  c_exp->add_option("--scenario", exp_scenario)->required();
  c_exp->add_option("--episodes", exp_episodes)->required();
  c_exp->add_option("--seed", exp_seed)->required();
  c_exp->add_option("--stride", exp_stride, "keep every k-th control step");
  c_exp->add_option("--out", exp_out)->required();
  c_exp->add_option("--config", exp_common.config, "master config JSON");

  Common pool_common;
  std::string pool_out;
  auto* c_pool = app.add_subcommand("make-pool", "build a goal pool from the item list with the hash embedder");
  c_pool->add_option("--out", pool_out)->required();
  add_common(c_pool, pool_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Error(ErrorCode::InvalidArgument, e.what()).structured() << '\n';
    return 2;
  }

  try {
    if (*c_run) return cmd_run(run);
    if (*c_bench) return cmd_bench(suite, bench_out, threads);
    if (*c_train) return cmd_train(train);
    if (*c_grad) return cmd_gradcheck(gc_seed);
    if (*c_ret) return cmd_retrieve(ret_common, ret_instruction, ret_pool, ret_bypass);
    if (*c_exp) return cmd_export(exp_common, exp_scenario, exp_episodes, exp_seed, exp_stride, exp_out);
    if (*c_pool) return cmd_make_pool(pool_common, pool_out);
  } catch (const Error& e) {
    std::cerr << e.structured() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Error(ErrorCode::IoError, e.what()).structured() << '\n';
    return 1;
  }
  return 0;
}
