#include "cassi/rewards.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cassi {

double task_reward(double u, double v_x, double sigma_sq) {
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("task_reward: sigma_sq must be positive");
  const double e = u - v_x;
  return std::exp(-e * e / sigma_sq);
}

namespace {

double sq_norm(const std::array<double, kJoints>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

RegRewards reg_rewards(const RegInputs& in, const RewardWeights& w) {
  if (!(in.dt > 0.0)) throw std::invalid_argument("reg_rewards: dt must be positive");
  RegRewards r;
  double ar = 0.0, qa = 0.0;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const double da = in.action[j] - in.prev_action[j];
    ar += da * da;
    const double acc = (in.qdot[j] - in.prev_qdot[j]) / in.dt;
    qa += acc * acc;
    r.feet_air_time += in.air_time_landed[j];
  }
  r.action_rate = w.w_ar * ar;
  r.joint_accel = w.w_qa * qa;
  r.joint_torque = w.w_qT * sq_norm(in.torque);
  r.feet_air_time *= w.w_tf;
  r.roll = w.w_roll * in.omega_roll * in.omega_roll;
  r.yaw = w.w_yaw * in.omega_yaw * in.omega_yaw;
  r.lateral = w.w_lat * in.v_y * in.v_y;
  return r;
}

double total_reward(double r_T, double r_I, double r_S, double r_D, double r_R_sum,
                    const RewardWeights& w) {
  const double comps[] = {r_T, r_I, r_S, r_D, r_R_sum};
  static const char* names[] = {"r_T", "r_I", "r_S", "r_D", "r_R"};
  for (int i = 0; i < 5; ++i)
    if (!std::isfinite(comps[i]))
      throw std::runtime_error(std::string("non-finite reward component ") + names[i]);
  return w.w_T * r_T + w.w_I * r_I + w.w_S * r_S + w.w_D * r_D + w.w_R * r_R_sum;
}

}  // namespace cassi
