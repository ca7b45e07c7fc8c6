#include "vlfly/controller.hpp"

#include <algorithm>
#include <cmath>

#include "vlfly/error.hpp"

namespace vlfly {

void ControllerConfig::validate() const {
  if (!(v_max > 0.0) || !(omega_max > 0.0) || !(f_c > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "controller caps and frequency must be positive");
  }
  if (!(gains.integral_clamp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "integrator clamp must be positive");
  }
}

Vec2 scale_waypoint(Vec2 waypoint, double v_max, double f_c) {
  const double s = v_max / f_c;
  return {waypoint.x * s, waypoint.y * s};
}

namespace {

double pid_channel(PIDChannel& ch, double error, double kp, double ki, double kd, double clamp,
                   double dt, bool primed) {
  ch.integral = std::clamp(ch.integral + error * dt, -clamp, clamp);
  const double derivative = primed ? (error - ch.previous_error) / dt : 0.0;
  ch.previous_error = error;
  return kp * error + ki * ch.integral + kd * derivative;
}

}  // namespace

ContinuousAction pid_step(Vec2 displacement, const ControllerConfig& cfg, PIDState& state,
                          double dt) {
  const PIDGains& g = cfg.gains;
  const double rho = norm(displacement);
  const double alpha = rho > 0.0 ? std::atan2(displacement.y, displacement.x) : 0.0;

  const double w = pid_channel(state.angular, alpha, g.kp_w, g.ki_w, g.kd_w, g.integral_clamp, dt,
                               state.primed);
  const double u = pid_channel(state.linear, rho, g.kp_v, g.ki_v, g.kd_v, g.integral_clamp, dt,
                               state.primed);
  state.primed = true;

  const double gate = std::max(0.0, std::cos(alpha));
  return ContinuousAction{std::clamp(u * gate, 0.0, cfg.v_max),
                          std::clamp(w, -cfg.omega_max, cfg.omega_max)};
}

}  // namespace vlfly
