#include "vlfly/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vlfly/error.hpp"
#include "vlfly/rng.hpp"

namespace vlfly {

void APFParams::validate() const {
  if (!(k_att > 0.0) || !(k_rep > 0.0) || !(rho0 > 0.0) || !(att_sat > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "APF parameters must be positive");
  }
}

Vec2 attractive_force(Vec2 position, Vec2 goal, const APFParams& params) {
  const Vec2 offset = goal - position;
  const double dist = norm(offset);
  if (dist > params.att_sat) return (params.k_att * params.att_sat / dist) * offset;
  return params.k_att * offset;
}

namespace {

/// Closest points of every obstacle and the four walls.
template <typename Fn>
void for_each_closest(Vec2 p, const Scenario& s, Fn&& fn) {
  for (const auto& poly : s.obstacles) fn(closest_point_on_boundary(poly, p), contains(poly, p));
  const Rect& b = s.bounds;
  fn(Vec2{b.min.x, p.y}, false);
  fn(Vec2{b.max.x, p.y}, false);
  fn(Vec2{p.x, b.min.y}, false);
  fn(Vec2{p.x, b.max.y}, false);
}

}  // namespace

Vec2 repulsive_force(Vec2 position, const Scenario& scenario, const APFParams& params) {
  Vec2 total{};
  for_each_closest(position, scenario, [&](Vec2 q, bool inside) {
    const Vec2 away = position - q;
    const double d = norm(away);
    if (inside || d == 0.0) return;
    const double rho = d - params.uav_radius;
    if (rho >= params.rho0 || rho <= 0.0) return;
    const double mag = params.k_rep * (1.0 / rho - 1.0 / params.rho0) / (rho * rho);
    total = total + (mag / d) * away;
  });
  return total;
}

double repulsive_potential(Vec2 position, const Scenario& scenario, const APFParams& params) {
  double u = 0.0;
  for_each_closest(position, scenario, [&](Vec2 q, bool inside) {
    const double d = distance(position, q);
    if (inside || d == 0.0) return;
    const double rho = d - params.uav_radius;
    if (rho >= params.rho0 || rho <= 0.0) return;
    const double e = 1.0 / rho - 1.0 / params.rho0;
    u += 0.5 * params.k_rep * e * e;
  });
  return u;
}

ContinuousAction apf_action(const Pose& pose, Vec2 goal, const Scenario& scenario,
                            const APFParams& params, const ControllerConfig& ctrl, PIDState& state) {
  const Vec2 force = attractive_force(pose.position(), goal, params) +
                     repulsive_force(pose.position(), scenario, params);
  const double magnitude = norm(force);
  if (magnitude == 0.0) return {};
  // normalize like a waypoint: the saturated attraction maps to 1
  const Vec2 body = to_body(force, pose.heading);
  const double ref = std::max(magnitude, params.k_att * params.att_sat);
  const Vec2 disp = scale_waypoint({body.x / ref, body.y / ref}, ctrl.v_max, ctrl.f_c);
  return pid_step(disp, ctrl, state, ctrl.dt());
}

ContinuousAction scripted_action(ScriptedKind kind, const Pose& pose, Vec2 goal,
                                 const ControllerConfig& ctrl, PIDState& state, Rng& rng,
                                 double norm_scale) {
  if (kind == ScriptedKind::Random) {
    const double v = rng.uniform(0.0, ctrl.v_max);
    const double w = rng.uniform(-ctrl.omega_max, ctrl.omega_max);
    return {v, w};
  }
  const Vec2 body = to_body(goal - pose.position(), pose.heading);
  const Vec2 wp{std::clamp(body.x / norm_scale, -1.0, 1.0), std::clamp(body.y / norm_scale, -1.0, 1.0)};
  return pid_step(scale_waypoint(wp, ctrl.v_max, ctrl.f_c), ctrl, state, ctrl.dt());
}

}  // namespace vlfly
