#include "vlfly/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <utility>

#include <nlohmann/json.hpp>

#include "vlfly/error.hpp"
#include "vlfly/rng.hpp"

namespace vlfly {

using nlohmann::json;

json to_json(const ImitationSample& s) {
  auto frames = json::array();
  for (const auto& f : s.context.frames) frames.push_back(to_json(f));
  auto wps = json::array();
  for (const Vec2& w : s.target.waypoints) wps.push_back({w.x, w.y});
  return {{"context", std::move(frames)},
          {"goal_obs", to_json(s.goal_obs)},
          {"target", {{"temporal_distance", s.target.temporal_distance}, {"waypoints", std::move(wps)}}}};
}

ImitationSample imitation_sample_from_json(const json& j) {
  try {
    ImitationSample s;
    for (const auto& f : j.at("context")) s.context.frames.push_back(observation_from_json(f));
    if (s.context.frames.empty()) throw Error(ErrorCode::ParseError, "sample has no context frames");
    s.goal_obs = observation_from_json(j.at("goal_obs"));
    const auto& t = j.at("target");
    s.target.temporal_distance = t.at("temporal_distance").get<double>();
    for (const auto& w : t.at("waypoints")) s.target.waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    s.target.validate(s.target.waypoints.size());
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("imitation sample: ") + e.what());
  }
}

std::vector<ImitationSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
  std::vector<ImitationSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(imitation_sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "dataset " + path.string() + " is empty");
  return out;
}

std::vector<TrainingExample> prepare_examples(const std::vector<ImitationSample>& samples,
                                              const ModelConfig& cfg) {
  std::vector<TrainingExample> out;
  out.reserve(samples.size());
  const std::size_t want = static_cast<std::size_t>(cfg.context) + 1;
  for (const auto& s : samples) {
    ObsContext ctx;
    const auto& frames = s.context.frames;
    for (std::size_t pad = frames.size(); pad < want; ++pad) ctx.frames.push_back(frames.front());
    const std::size_t skip = frames.size() > want ? frames.size() - want : 0;
    ctx.frames.insert(ctx.frames.end(), frames.begin() + static_cast<std::ptrdiff_t>(skip), frames.end());
    out.push_back(TrainingExample{prepare_input(ctx, s.goal_obs, cfg), s.target});
  }
  return out;
}

// ---------------------------------------------------------------------------
// oracle rollouts

namespace {

template <typename Sink>
void rollout_oracle(const ExportConfig& cfg, Sink&& sink) {
  if (cfg.episodes == 0) throw Error(ErrorCode::InvalidArgument, "episodes must be > 0");
  if (cfg.step_stride == 0) throw Error(ErrorCode::InvalidArgument, "step stride must be > 0");
  SimConfig sim = cfg.sim;
  sim.sync();
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const std::uint64_t seed = cfg.seed + e;
    EpisodeConfig ep;
    ep.kind = cfg.kind;
    ep.seed = seed;
    ep.scenario = generate_scenario(cfg.kind, seed, sim.generation);
    const auto& goal = ep.scenario->goals[benchmark_goal_index(seed, ep.scenario->goals.size())];
    ep.target_goal_id = goal.id;
    ep.instruction = benchmark_instruction(goal, InstructionMode::Direct, ep.affordances);
    ep.planner = PlannerKind::Oracle;
    ep.sim = sim;
    const EpisodeLog log = run_episode(
        ep, [&](std::int64_t step, const ObsContext& ctx, const EgoObservation& goal_obs,
                const WaypointPlan& plan) {
          if (step % static_cast<std::int64_t>(cfg.step_stride) == 0) sink(e, step, ImitationSample{ctx, goal_obs, plan});
        });
    if (log.error) throw Error(ErrorCode::InvalidArgument, "oracle rollout failed: " + *log.error);
  }
}

}  // namespace

std::vector<ImitationSample> collect_oracle_samples(const ExportConfig& cfg) {
  std::vector<ImitationSample> out;
  rollout_oracle(cfg, [&](std::size_t, std::int64_t, ImitationSample s) { out.push_back(std::move(s)); });
  return out;
}

std::size_t export_oracle_dataset(const ExportConfig& cfg, std::ostream& out) {
  std::size_t count = 0;
  rollout_oracle(cfg, [&](std::size_t episode, std::int64_t step, const ImitationSample& s) {
    json j = to_json(s);
    j["episode"] = episode;
    j["step"] = step;
    out << j.dump() << '\n';
    ++count;
  });
  if (!out) throw Error(ErrorCode::IoError, "write failed while exporting dataset");
  return count;
}

std::size_t export_oracle_dataset(const ExportConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write dataset " + path.string());
  return export_oracle_dataset(cfg, out);
}

// ---------------------------------------------------------------------------
// training

namespace {

struct AdamState {
  PlannerParams m, v;
  std::size_t t = 0;
};

void adam_update(PlannerParams& params, const PlannerGradients& grads, AdamState& st, double lr, double decay) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++st.t;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  std::vector<Eigen::Map<const Eigen::MatrixXd>> g;
  std::as_const(grads).for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> x) { g.push_back(x); });
  std::vector<Eigen::Map<Eigen::MatrixXd>> m, v;
  st.m.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> x) { m.push_back(x); });
  st.v.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> x) { v.push_back(x); });
  std::size_t i = 0;
  params.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> p) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i].cwiseProduct(g[i]);
    // decoupled weight decay, applied before the Adam step
    if (decay > 0.0) p *= 1.0 - lr * decay;
    p.array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    ++i;
  });
}

}  // namespace

TrainingExample mirror_example(const TrainingExample& ex, const ModelConfig& cfg) {
  const int ch = cfg.channels();
  auto flip = [&](const auto& x) {
    if (x.rows() != cfg.frame_features()) throw Error(ErrorCode::ShapeMismatch, "example does not match model rays");
    std::decay_t<decltype(x)> out(x.rows(), x.cols());
    for (int r = 0; r < cfg.rays; ++r) out.middleRows((cfg.rays - 1 - r) * ch, ch) = x.middleRows(r * ch, ch);
    return out;
  };
  TrainingExample m{{flip(ex.input.frames), flip(ex.input.goal)}, ex.target};
  for (auto& w : m.target.waypoints) w.y = -w.y;
  return m;
}

TrainResult train_planner(const std::vector<TrainingExample>& data, const TrainConfig& cfg) {
  Rng rng(cfg.seed);
  PlannerParams init = PlannerParams::random(cfg.model, rng);
  return train_planner(data, cfg, std::move(init));
}

TrainResult train_planner(const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                          PlannerParams init) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (cfg.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be > 0");
  TrainResult result{std::move(init), {}};
  PlannerParams& params = result.params;
  Rng rng(cfg.seed ^ 0x5DEECE66DULL);
  AdamState adam{PlannerParams::zeros(params.config), PlannerParams::zeros(params.config), 0};
  PlannerGradients grads;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> sample_loss(data.size());
  std::vector<double> batch_losses;
  std::vector<const TrainingExample*> batch;
  std::vector<TrainingExample> mirrored;
  if (cfg.mirror) {
    mirrored.reserve(data.size());
    for (const auto& ex : data) mirrored.push_back(mirror_example(ex, params.config));
  }

  const std::size_t total_steps = cfg.epochs * ((data.size() + cfg.batch_size - 1) / cfg.batch_size);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        const bool flip = cfg.mirror && rng.uniform() < 0.5;
        batch.push_back(flip ? &mirrored[order[k]] : &data[order[k]]);
      }
      batch_losses.clear();
      planner_gradients(params, batch, cfg.loss, grads, &batch_losses);
      for (std::size_t k = start; k < end; ++k) sample_loss[order[k]] = batch_losses[k - start];
      double lr = cfg.lr;
      if (cfg.cosine) {
        const double progress = static_cast<double>(step++) / static_cast<double>(total_steps);
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      }
      adam_update(params, grads, adam, lr, cfg.weight_decay);
    }
    double sum = 0.0;
    for (double l : sample_loss) sum += l;
    const double epoch_loss = sum / static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss) || !params.all_finite()) {
      throw Error(ErrorCode::Divergence, "training diverged in epoch " + std::to_string(epoch + 1));
    }
    result.epoch_losses.push_back(epoch_loss);
  }
  return result;
}

double mean_waypoint_mse(const PlannerParams& params, const std::vector<TrainingExample>& data) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "no examples");
  double sum = 0.0;
  for (const auto& ex : data) sum += waypoint_mse(planner_forward(ex.input, params), ex.target);
  return sum / static_cast<double>(data.size());
}

}  // namespace vlfly

namespace vlfly {

ModelConfig tiny_model_config() {
  ModelConfig m;
  m.rays = 8;
  m.goal_channels = 3;
  m.context = 2;
  m.horizon = 2;
  m.d_model = 8;
  m.layers = 1;
  m.ff_hidden = 12;
  m.enc_hidden = 10;
  m.head_hidden = 10;
  return m;
}

GradcheckReport gradient_check(const GradcheckConfig& cfg) {
  cfg.model.validate();
  Rng rng(cfg.seed);
  PlannerParams params = PlannerParams::random(cfg.model, rng);
  // Biases start at zero and gains at one; jitter everything so no path is degenerate.
  params.for_each([&](const std::string&, Eigen::Map<Eigen::MatrixXd> t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.2, 0.2);
  });

  std::vector<TrainingExample> data;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    TrainingExample ex;
    ex.input.frames.resize(cfg.model.frame_features(), cfg.model.context + 1);
    for (Eigen::Index i = 0; i < ex.input.frames.size(); ++i) ex.input.frames.data()[i] = rng.uniform();
    ex.input.goal.resize(cfg.model.frame_features());
    for (Eigen::Index i = 0; i < ex.input.goal.size(); ++i) ex.input.goal[i] = rng.uniform();
    ex.target.temporal_distance = rng.uniform(0.0, 200.0);
    for (int h = 0; h < cfg.model.horizon; ++h) ex.target.waypoints.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    data.push_back(std::move(ex));
  }
  std::vector<const TrainingExample*> batch;
  for (const auto& ex : data) batch.push_back(&ex);

  const LossWeights w;
  PlannerGradients grads;
  planner_gradients(params, batch, w, grads);
  std::vector<Eigen::Map<const Eigen::MatrixXd>> g;
  std::as_const(grads).for_each([&](const std::string&, Eigen::Map<const Eigen::MatrixXd> x) { g.push_back(x); });

  GradcheckReport report;
  std::size_t tensor = 0;
  PlannerParams probe = params;
  probe.for_each([&](const std::string& name, Eigen::Map<Eigen::MatrixXd> t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      double& x = t.data()[i];
      const double saved = x;
      x = saved + cfg.eps;
      const double up = batch_loss(probe, batch, w);
      x = saved - cfg.eps;
      const double down = batch_loss(probe, batch, w);
      x = saved;
      const double numeric = (up - down) / (2.0 * cfg.eps);
      const double analytic = g[tensor].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), cfg.floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst_tensor.empty()) {
        report.max_rel_error = rel;
        report.worst_tensor = name;
        report.worst_index = static_cast<std::size_t>(i);
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
    ++tensor;
  });
  return report;
}

}  // namespace vlfly

namespace vlfly {

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  try {
    read_opt(j, "rays", m.rays);
    read_opt(j, "goal_channels", m.goal_channels);
    read_opt(j, "context", m.context);
    read_opt(j, "horizon", m.horizon);
    read_opt(j, "d_model", m.d_model);
    read_opt(j, "layers", m.layers);
    read_opt(j, "ff_hidden", m.ff_hidden);
    read_opt(j, "enc_hidden", m.enc_hidden);
    read_opt(j, "head_hidden", m.head_hidden);
    read_opt(j, "d_max", m.d_max);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model config: ") + e.what());
  }
  m.validate();
  return m;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig t;
  try {
    if (j.contains("model")) t.model = model_config_from_json(j.at("model"));
    if (j.contains("training")) {
      const auto& s = j.at("training");
      read_opt(s, "epochs", t.epochs);
      read_opt(s, "lr", t.lr);
      read_opt(s, "batch_size", t.batch_size);
      read_opt(s, "weight_decay", t.weight_decay);
      read_opt(s, "mirror", t.mirror);
      read_opt(s, "cosine", t.cosine);
      read_opt(s, "seed", t.seed);
      read_opt(s, "lambda_d", t.loss.lambda_d);
      read_opt(s, "d_norm", t.loss.d_norm);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("training config: ") + e.what());
  }
  return t;
}

}  // namespace vlfly
