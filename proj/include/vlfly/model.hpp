#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vlfly/planner.hpp"
#include "vlfly/world.hpp"

namespace vlfly {

class Rng;

/// Shape hyper-parameters of the learned waypoint planner.
struct ModelConfig {
  int rays = 64;
  int goal_channels = 3;  ///< semantic ids 1..K get their own one-hot channel
  int context = 5;        ///< P; the model sees P+1 frames
  int horizon = 5;        ///< H
  int d_model = 64;
  int layers = 2;
  int ff_hidden = 128;
  int enc_hidden = 64;
  int head_hidden = 64;
  double d_max = 10.0;

  int channels() const { return 2 + goal_channels; }
  int frame_features() const { return rays * channels(); }
  int tokens() const { return context + 2; }
  int outputs() const { return 1 + 2 * horizon; }
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct BlockParams {
  Eigen::MatrixXd wq, wk, wv, wo;  ///< d_model x d_model, applied as Z * W
  Eigen::VectorXd ln1_g, ln1_b;
  Eigen::MatrixXd ff_w1;  ///< d_model x ff_hidden
  Eigen::VectorXd ff_b1;
  Eigen::MatrixXd ff_w2;  ///< ff_hidden x d_model
  Eigen::VectorXd ff_b2;
  Eigen::VectorXd ln2_g, ln2_b;
};

/// All trainable tensors. Encoder and head weights are (out x in) and act on
/// column vectors; token-side weights act on row-major token matrices.
struct PlannerParams {
  ModelConfig config;
  Eigen::MatrixXd psi_w1;  ///< frame encoder
  Eigen::VectorXd psi_b1;
  Eigen::MatrixXd psi_w2;
  Eigen::VectorXd psi_b2;
  Eigen::MatrixXd phi_w1;  ///< goal fusion encoder over [current; goal]
  Eigen::VectorXd phi_b1;
  Eigen::MatrixXd phi_w2;
  Eigen::VectorXd phi_b2;
  Eigen::MatrixXd pos;  ///< tokens x d_model
  std::vector<BlockParams> blocks;
  Eigen::MatrixXd head_w1;
  Eigen::VectorXd head_b1;
  Eigen::MatrixXd head_w2;
  Eigen::VectorXd head_b2;

  /// Zero tensors with the shapes implied by `config`.
  static PlannerParams zeros(const ModelConfig& config);

  /// Uniform(+-1/sqrt(fan_in)) weights, zero biases, unit layer-norm gains.
  static PlannerParams random(const ModelConfig& config, Rng& rng);

  /// Visits every tensor in declaration order with a stable name.
  using Visitor = std::function<void(const std::string&, Eigen::Map<Eigen::MatrixXd>)>;
  using ConstVisitor = std::function<void(const std::string&, Eigen::Map<const Eigen::MatrixXd>)>;
  void for_each(const Visitor& fn);
  void for_each(const ConstVisitor& fn) const;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

using PlannerGradients = PlannerParams;

/// Panorama -> feature vector: per ray [depth / d_max, is_obstacle, is_goal_1..K].
Eigen::VectorXd encode_frame(const EgoObservation& obs, const ModelConfig& cfg);

/// Prepared network input: frames as columns (oldest first) plus the goal frame.
struct PlannerInput {
  Eigen::MatrixXd frames;  ///< frame_features x (P+1)
  Eigen::VectorXd goal;
};

PlannerInput prepare_input(const ObsContext& context, const EgoObservation& goal_obs,
                           const ModelConfig& cfg);

WaypointPlan planner_forward(const PlannerInput& input, const PlannerParams& params);
WaypointPlan planner_forward(const ObsContext& context, const EgoObservation& goal_obs,
                             const PlannerParams& params);

struct LossWeights {
  double lambda_d = 0.1;
  double d_norm = 100.0;  ///< temporal distance is compared in units of d_norm steps
};

/// Mean squared waypoint error over 2H components plus
/// lambda_d * ((d_pred - d_target) / d_norm)^2.
double planner_loss(const WaypointPlan& pred, const WaypointPlan& target, const LossWeights& w);

/// Mean squared waypoint error only.
double waypoint_mse(const WaypointPlan& pred, const WaypointPlan& target);

struct TrainingExample {
  PlannerInput input;
  WaypointPlan target;
};

/// Mean batch loss and its exact gradient with respect to every tensor.
/// When `per_sample` is given it receives each example's loss.
double planner_gradients(const PlannerParams& params, const std::vector<const TrainingExample*>& batch,
                         const LossWeights& w, PlannerGradients& grads,
                         std::vector<double>* per_sample = nullptr);

double batch_loss(const PlannerParams& params, const std::vector<const TrainingExample*>& batch,
                  const LossWeights& w);

/// Params file: "VLFP", u32 version, config block, shape table, f32 tensors.
void write_params(const PlannerParams& params, const std::filesystem::path& path);
PlannerParams read_params(const std::filesystem::path& path);

}  // namespace vlfly
