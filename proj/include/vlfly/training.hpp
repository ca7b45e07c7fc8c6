#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vlfly/harness.hpp"
#include "vlfly/model.hpp"
#include "vlfly/planner.hpp"

namespace vlfly {

struct ImitationSample {
  ObsContext context;
  EgoObservation goal_obs;
  WaypointPlan target;
};

nlohmann::json to_json(const ImitationSample& sample);
ImitationSample imitation_sample_from_json(const nlohmann::json& j);

std::vector<ImitationSample> read_dataset(const std::filesystem::path& path);

std::vector<TrainingExample> prepare_examples(const std::vector<ImitationSample>& samples,
                                              const ModelConfig& cfg);

struct ExportConfig {
  ScenarioKind kind = ScenarioKind::Box;
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  std::size_t step_stride = 1;  ///< keep every k-th control step; 1 keeps all
  SimConfig sim;
};

/// Rolls out oracle-driven episodes on seeds seed..seed+episodes-1, writing
/// one JSONL sample per kept control step. Returns the number of samples.
std::size_t export_oracle_dataset(const ExportConfig& cfg, std::ostream& out);
std::size_t export_oracle_dataset(const ExportConfig& cfg, const std::filesystem::path& path);

/// In-memory variant used by tests and the acceptance suite.
std::vector<ImitationSample> collect_oracle_samples(const ExportConfig& cfg);

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-3;
  bool cosine = true;         ///< cosine decay of lr towards 0 over all steps
  double weight_decay = 0.0;  ///< decoupled (AdamW style); 0 disables
  std::size_t batch_size = 32;
  bool mirror = true;  ///< swap each sample for its left-right reflection with probability 1/2
  LossWeights loss;
  std::uint64_t seed = 0;
  ModelConfig model;
};

struct TrainResult {
  PlannerParams params;
  std::vector<double> epoch_losses;  ///< mean per-sample loss seen during each epoch
};

/// Reads the "model" / "training" sections of the master config; missing
/// keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Left-right reflection of an example: ray order reversed in every frame and
/// in the goal panorama, waypoint lateral components negated.
TrainingExample mirror_example(const TrainingExample& ex, const ModelConfig& cfg);

/// Mini-batch Adam with seed-driven init and shuffling.
TrainResult train_planner(const std::vector<TrainingExample>& data, const TrainConfig& cfg);

/// Same as above, starting from given parameters.
TrainResult train_planner(const std::vector<TrainingExample>& data, const TrainConfig& cfg,
                          PlannerParams init);

/// The small configuration used for gradient checking.
ModelConfig tiny_model_config();

struct GradcheckConfig {
  ModelConfig model = tiny_model_config();
  std::size_t batch = 2;
  double eps = 1e-4;
  /// Denominator floor so elements with vanishing gradients are compared
  /// absolutely instead of relatively.
  double floor = 1e-6;
  std::uint64_t seed = 7;
};

struct GradcheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0, numeric = 0.0;  ///< at the worst element
};

/// Compares every analytic gradient element against central differences on
/// random parameters and inputs.
GradcheckReport gradient_check(const GradcheckConfig& cfg = {});

double mean_waypoint_mse(const PlannerParams& params, const std::vector<TrainingExample>& data);

}  // namespace vlfly
