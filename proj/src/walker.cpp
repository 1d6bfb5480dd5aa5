#include "cassi/walker.hpp"

#include <cmath>

namespace cassi {

double WalkerState::height(const WalkerConfig& cfg) const {
  double mc = 0.0;
  for (double v : q) mc += std::cos(v);
  return cfg.h0 + cfg.c_h * (mc / kJoints);
}

void WalkerState::features(const WalkerConfig& cfg, double* out) const {
  out[0] = v_x;
  out[1] = v_y(cfg);
  out[2] = omega;
  out[3] = height(cfg);
  for (std::size_t j = 0; j < kJoints; ++j) out[4 + j] = q[j];
  for (std::size_t j = 0; j < kJoints; ++j) out[8 + j] = qdot[j];
}

StepEvents walker_step(WalkerState& s, const std::array<double, kJoints>& action,
                       const WalkerConfig& cfg, double traction_scale) {
  StepEvents ev;
  double thrust_sum = 0.0, thrust_front = 0.0, thrust_back = 0.0;
  for (std::size_t j = 0; j < kJoints; ++j) {
    double a = action[j];
    if (!(a == a)) throw std::runtime_error("simulation-diverged: non-finite action");
    a = a < -kActionClamp ? -kActionClamp : (a > kActionClamp ? kActionClamp : a);
    const double qdd = cfg.kp * (a - s.q[j]) - cfg.kd * s.qdot[j];
    ev.torque[j] = qdd;
    s.qdot[j] += cfg.dt * qdd;
    s.q[j] += cfg.dt * s.qdot[j];
    const double thr = std::max(-s.qdot[j], 0.0) * std::max(-s.q[j], 0.0);
    thrust_sum += thr;
    (j < 2 ? thrust_front : thrust_back) += thr;
    const bool was_air = s.air_time[j] > 0.0;
    if (s.q[j] > 0.0) {
      s.air_time[j] += cfg.dt;
    } else {
      if (was_air) {
        ev.landed[j] = true;
        ev.landed_air_time[j] = s.air_time[j];
      }
      s.air_time[j] = 0.0;
    }
    s.last_action[j] = a;
  }
  const double keep = 1.0 - cfg.dt * cfg.k_drag;
  s.v_x = keep * s.v_x + cfg.dt * cfg.k_t * traction_scale * thrust_sum;
  s.omega = keep * s.omega + cfg.dt * cfg.k_r * (thrust_front - thrust_back);
  s.t += cfg.dt;
  for (std::size_t j = 0; j < kJoints; ++j)
    if (!std::isfinite(s.q[j]) || !std::isfinite(s.qdot[j]))
      throw std::runtime_error("simulation-diverged: non-finite state");
  if (!std::isfinite(s.v_x) || !std::isfinite(s.omega))
    throw std::runtime_error("simulation-diverged: non-finite state");
  return ev;
}

void apply_push(WalkerState& s, const WalkerConfig& cfg, Rng& rng) {
  s.v_x = rng.uniform(cfg.push_lo, cfg.push_hi);
  s.omega = rng.uniform(cfg.push_lo, cfg.push_hi) / cfg.k_y;
}

const std::vector<ExpertGait>& default_gaits() {
  static const double pi = 3.14159265358979323846;
  // Same-pattern gaits overlap in joint amplitude (short windows look alike)
  // while frequency bands stay disjoint (any window pins the gait through
  // the qdot/q ellipse); full-cycle windows separate cleanly.
  static const std::vector<ExpertGait> gaits{
      {"crawl", 0.195, 0.43, {0.0, pi / 2, pi, 3 * pi / 2}, -0.12, 0.45, 0},
      {"walk", 0.493, 0.48, {0.0, pi / 2, pi, 3 * pi / 2}, -0.08, 0.35, 1},
      {"leap", 1.000, 0.53, {0.0, pi / 2, pi, 3 * pi / 2}, -0.04, 0.28, 2},
      {"trot", 0.862, 0.55, {0.0, pi, 0.0, pi}, 0.00, 0.25, 3},
      {"wave", 0.683, 0.50, {0.0, 0.0, pi, pi}, 0.05, 0.25, 4},
      {"stilt", 1.000, 0.75, {0.0, pi, pi, 0.0}, 0.00, 0.25, 5},
  };
  return gaits;
}

std::array<double, kJoints> expert_action(const ExpertGait& g, double t) {
  std::array<double, kJoints> a;
  const double th = 2.0 * 3.14159265358979323846 * g.freq_hz * t;
  for (std::size_t j = 0; j < kJoints; ++j) a[j] = g.bias + g.amplitude * std::sin(th + g.phase[j]);
  return a;
}

void pd_gain_phase(const WalkerConfig& cfg, double f_hz, double& gain, double& phase) {
  const double om = 2.0 * 3.14159265358979323846 * f_hz;
  const double re = cfg.kp - om * om;
  const double im = cfg.kd * om;
  gain = cfg.kp / std::sqrt(re * re + im * im);
  phase = -std::atan2(im, re);
}

WalkerState gait_steady_state(const ExpertGait& g, const WalkerConfig& cfg,
                              double amplitude, double freq_hz) {
  double gain, psi;
  pd_gain_phase(cfg, freq_hz, gain, psi);
  const double om = 2.0 * 3.14159265358979323846 * freq_hz;
  WalkerState s;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const double th = g.phase[j] + psi;
    s.q[j] = g.bias + amplitude * gain * std::sin(th);
    s.qdot[j] = amplitude * gain * om * std::cos(th);
    s.air_time[j] = s.q[j] > 0.0 ? cfg.dt : 0.0;
    s.last_action[j] = g.bias + amplitude * std::sin(g.phase[j]);
  }
  return s;
}

}  // namespace cassi
