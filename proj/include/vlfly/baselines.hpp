#pragma once

#include "vlfly/controller.hpp"
#include "vlfly/geometry.hpp"
#include "vlfly/world.hpp"

namespace vlfly {

class Rng;

/// Classical potential-field parameters. Attraction is linear in the goal
/// offset and saturates at `att_sat` meters.
struct APFParams {
  double k_att = 1.0;
  double k_rep = 0.5;
  double rho0 = 1.5;  ///< repulsion influence radius, meters of clearance
  double att_sat = 2.0;
  double uav_radius = 0.2;

  void validate() const;
};

Vec2 attractive_force(Vec2 position, Vec2 goal, const APFParams& params);

/// Sum of obstacle and wall repulsion. Clearance is measured to the nearest
/// point of each obstacle minus the UAV radius; it vanishes beyond rho0.
Vec2 repulsive_force(Vec2 position, const Scenario& scenario, const APFParams& params);

/// 1/2 k_rep (1/rho - 1/rho0)^2 summed over obstacles and walls.
double repulsive_potential(Vec2 position, const Scenario& scenario, const APFParams& params);

ContinuousAction apf_action(const Pose& pose, Vec2 goal, const Scenario& scenario,
                            const APFParams& params, const ControllerConfig& ctrl, PIDState& state);

enum class ScriptedKind { StraightLine, Random };

/// StraightLine steers at the goal ignoring obstacles; Random draws uniform
/// commands within the caps.
ContinuousAction scripted_action(ScriptedKind kind, const Pose& pose, Vec2 goal,
                                 const ControllerConfig& ctrl, PIDState& state, Rng& rng,
                                 double norm_scale = 4.0);

}  // namespace vlfly
