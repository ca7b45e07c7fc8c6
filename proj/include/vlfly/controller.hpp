#pragma once

#include "vlfly/geometry.hpp"
#include "vlfly/world.hpp"

namespace vlfly {

struct PIDGains {
  double kp_v = 150.0;
  double ki_v = 0.0;
  double kd_v = 0.05;
  double kp_w = 2.0;
  double ki_w = 0.0;
  double kd_w = 0.1;
  double integral_clamp = 1.0;
};

struct ControllerConfig {
  double v_max = 1.0;      ///< m/s
  double omega_max = 2.0;  ///< rad/s
  double f_c = 15.0;       ///< Hz
  PIDGains gains;

  double dt() const { return 1.0 / f_c; }
  void validate() const;
};

struct PIDChannel {
  double integral = 0.0;
  double previous_error = 0.0;
};

struct PIDState {
  PIDChannel linear;
  PIDChannel angular;
  bool primed = false;  ///< false until the first step; suppresses the derivative kick
};

/// Normalized waypoint -> metric body-frame displacement: w * (v_max / f_c).
Vec2 scale_waypoint(Vec2 waypoint, double v_max, double f_c);

/// Heading error alpha = atan2(y, x) drives omega; range rho drives v, gated
/// by max(0, cos alpha). Both outputs saturate at the configured caps.
ContinuousAction pid_step(Vec2 displacement, const ControllerConfig& cfg, PIDState& state,
                          double dt);

inline PIDState reset_pid(const PIDState& = {}) { return PIDState{}; }

}  // namespace vlfly
