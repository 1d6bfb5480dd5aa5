#pragma once
#include <array>
#include <cstddef>

#include "cassi/walker.hpp"

namespace cassi {

struct RewardWeights {
  double w_T = 1.0;
  double w_I = 1.0;
  double w_S = 0.5;
  double w_D = 1.0;
  double w_R = 1.0;
  // regularization table
  double w_ar = -0.01;
  double w_qa = -2.5e-7;
  double w_qT = -2.5e-5;
  double w_tf = 1.0;
  double w_roll = -0.02;
  double w_yaw = -0.02;
  double w_lat = -0.02;
  double sigma_sq = 0.25;
};

// exp(-sigma^-2 (u - v_x)^2), in (0, 1], peak at u = v_x
double task_reward(double u, double v_x, double sigma_sq);

struct RegInputs {
  std::array<double, kJoints> prev_action{};
  std::array<double, kJoints> action{};
  std::array<double, kJoints> prev_qdot{};
  std::array<double, kJoints> qdot{};
  std::array<double, kJoints> torque{};
  std::array<double, kJoints> air_time_landed{};  // nonzero only on the landing step
  double dt = 0.02;
  double omega_roll = 0.0;  // no roll axis in the planar base; stays 0
  double omega_yaw = 0.0;
  double v_y = 0.0;
};

struct RegRewards {
  double action_rate = 0.0;
  double joint_accel = 0.0;
  double joint_torque = 0.0;
  double feet_air_time = 0.0;
  double roll = 0.0;
  double yaw = 0.0;
  double lateral = 0.0;

  double sum() const {
    return action_rate + joint_accel + joint_torque + feet_air_time + roll + yaw + lateral;
  }
};

// Throws on dt <= 0. Each term already carries its table weight.
RegRewards reg_rewards(const RegInputs& in, const RewardWeights& w);

// w_T r_T + w_I r_I + w_S r_S + w_D r_D + w_R r_R; throws naming the first
// non-finite component.
double total_reward(double r_T, double r_I, double r_S, double r_D, double r_R_sum,
                    const RewardWeights& w);

}  // namespace cassi
