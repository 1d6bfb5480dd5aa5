#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cassi/config.hpp"
#include "cassi/dataset.hpp"
#include "cassi/imitation_disc.hpp"
#include "cassi/ppo.hpp"
#include "cassi/rewards.hpp"
#include "cassi/rng.hpp"
#include "cassi/skill_disc.hpp"
#include "cassi/walker.hpp"

namespace cassi {

struct DatasetPaths {
  std::string imit;          // horizon hI, unlabeled
  std::string skill;         // horizon hS, unlabeled (normalization stats)
  std::string eval_labeled;  // horizon hC, labels kept for the eval suite
  static DatasetPaths from_prefix(const std::string& prefix) {
    return {prefix + ".imit.ds", prefix + ".skill.ds", prefix + ".eval.ds"};
  }
};

struct GenReport {
  std::size_t rows = 0;
  std::size_t imit_clips = 0, skill_clips = 0, eval_clips = 0;
  std::size_t skipped_trajectories = 0;
  std::size_t sigma_guards = 0;
};

// Records the scripted-gait corpus and writes the three dataset files.
GenReport generate_datasets(const RunConfig& cfg);

WalkerConfig walker_config(const RunConfig& cfg);
RewardWeights reward_weights(const RunConfig& cfg);
RecordConfig record_config(const RunConfig& cfg);
ImitDiscConfig imit_config(const RunConfig& cfg);
SkillDiscConfig skill_config(const RunConfig& cfg);
PpoConfig ppo_params(const RunConfig& cfg);
// obs -> hidden x depth -> out_dim
std::vector<std::size_t> policy_sizes(const RunConfig& cfg, std::size_t out_dim);

// features(12), last_action(4), command, one-hot z
std::size_t policy_obs_dim(const RunConfig& cfg);
std::vector<double> obs_noise_levels(const RunConfig& cfg);

struct IterStats {
  std::size_t iter = 0;
  double lr = 0, kl = 0, policy_loss = 0, value_loss = 0, entropy = 0;
  double r_T = 0, r_I = 0, r_S = 0, r_D = 0, r_R = 0;
  double disc_loss = 0, d_ref = 0, d_pol = 0, gp = 0;
  double skill_ce = 0, skill_acc = 0;
  double ep_return = 0;  // running mean over completed episodes
  std::size_t ep_count = 0, diverged = 0;
  bool ppo_aborted = false;

  static std::string csv_header();
  std::string csv_row() const;
};

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);

  IterStats iterate();
  // Full loop: metrics.csv + resolved config + periodic checkpoints.
  void train();

  void save_checkpoint(const std::string& dir) const;

  const RunConfig& cfg() const { return cfg_; }
  std::size_t iter() const { return iter_; }
  GaussianPolicy& policy() { return ppo_.policy(); }
  const GaussianPolicy& policy() const { return ppo_.policy(); }
  Mlp& value_net() { return ppo_.value(); }
  PpoTrainer& ppo() { return ppo_; }
  ImitationDiscriminator& imit_disc() { return imit_; }
  SkillDiscriminator& skill_disc() { return skill_; }
  const ReferenceDataset& imit_ds() const { return imit_ds_; }
  const ReferenceDataset& skill_ds() const { return skill_ds_; }

 private:
  struct EnvSlot {
    WalkerState state;
    Rng rng{0};
    double traction = 1.0;
    double command = 0.5;
    int z = 0;
    std::size_t steps_left = 0;
    double next_push_t = 0.0;
    std::vector<double> hist;  // newest-last feature frames, depth window_depth_
    std::size_t frames = 0;
    std::array<double, kJoints> prev_qdot{}, prev_action{};
    double ep_return = 0.0;
  };

  void reset_env(EnvSlot& e, bool initial, std::size_t slot);
  void push_frame(EnvSlot& e, const double* feat);
  // oldest-first window, front-padded by repeating the first frame
  void build_window(const EnvSlot& e, std::size_t H, double* out) const;
  void build_obs(EnvSlot& e, bool noise, double* obs);

  RunConfig cfg_;
  WalkerConfig wcfg_;
  RewardWeights weights_;
  ReferenceDataset imit_ds_, skill_ds_;
  std::size_t obs_dim_, window_depth_;
  std::vector<double> noise_levels_;
  PpoTrainer ppo_;
  ImitationDiscriminator imit_;
  SkillDiscriminator skill_;
  Rng trainer_rng_{0};
  std::vector<EnvSlot> envs_;
  std::size_t iter_ = 0;
  double ep_return_sum_ = 0.0;
  std::size_t ep_done_total_ = 0;
};

// Deterministic evaluation rollout: mean actions, randomization and noise
// off, fixed initial state; warmup steps discarded, then eval_len post-step
// feature rows recorded. Distinct rollouts come from distinct commands.
struct EvalRollout {
  std::vector<double> features;  // eval_len x kFeatDim
  double mean_task_reward = 0.0;
};
EvalRollout eval_rollout(const GaussianPolicy& policy, const RunConfig& cfg, int z,
                         double command);

}  // namespace cassi
