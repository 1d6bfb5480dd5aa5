#pragma once
#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cassi/rng.hpp"

namespace cassi {

inline constexpr std::size_t kJoints = 4;
inline constexpr std::size_t kFeatDim = 12;  // v_x, v_y, omega, h, q x4, qdot x4
inline constexpr double kActionClamp = 1.2;

struct WalkerConfig {
  double dt = 0.02;
  double kp = 5.0, kd = 0.1;
  double k_t = 2.0, k_drag = 2.0, k_r = 1.0, k_y = 0.2;
  double h0 = 0.3, c_h = 0.05;
  // randomization
  bool randomize = true;
  double traction_lo = -0.2, traction_hi = 0.3;
  double push_interval_s = 15.0;
  double push_lo = -0.5, push_hi = 0.5;
  double max_episode_s = 20.0;

  std::size_t max_episode_steps() const {
    return static_cast<std::size_t>(max_episode_s / dt + 0.5);
  }
};

struct WalkerState {
  std::array<double, kJoints> q{}, qdot{};
  double v_x = 0.0, omega = 0.0;
  double t = 0.0;
  std::array<double, kJoints> air_time{};
  std::array<double, kJoints> last_action{};

  double v_y(const WalkerConfig& cfg) const { return cfg.k_y * omega; }
  double height(const WalkerConfig& cfg) const;
  // (v_x, v_y, omega, h, q, qdot)
  void features(const WalkerConfig& cfg, double* out) const;
};

struct StepEvents {
  std::array<bool, kJoints> landed{};  // swing -> stance crossing this step
  std::array<double, kJoints> landed_air_time{};  // air time credited at landing
  std::array<double, kJoints> torque{};           // kp (a - q) - kd qdot, pre-update
};

// Semi-implicit Euler PD joint update plus traction-driven base motion.
// Throws simulation-diverged on non-finite state.
StepEvents walker_step(WalkerState& s, const std::array<double, kJoints>& action,
                       const WalkerConfig& cfg, double traction_scale = 1.0);

// Episode-time disturbance: v_x and v_y are each forced to a fresh
// U(push_lo, push_hi) draw. v_y is stored as k_y * omega, so the lateral
// draw lands on omega.
void apply_push(WalkerState& s, const WalkerConfig& cfg, Rng& rng);

struct ExpertGait {
  const char* name;
  double amplitude;  // action amplitude (rad)
  double freq_hz;
  std::array<double, kJoints> phase;
  double bias;
  double amp_jitter;  // recording-time amplitude jitter fraction
  int skill_label;
};

const std::vector<ExpertGait>& default_gaits();

std::array<double, kJoints> expert_action(const ExpertGait& g, double t);

// |H(2 pi f)| and phase of the PD loop q/a transfer function.
void pd_gain_phase(const WalkerConfig& cfg, double f_hz, double& gain, double& phase);

// State on the steady-state limit cycle of the PD loop at t=0.
WalkerState gait_steady_state(const ExpertGait& g, const WalkerConfig& cfg,
                              double amplitude, double freq_hz);

}  // namespace cassi
