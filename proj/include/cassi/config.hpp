#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cassi {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat run configuration; every field is reachable as `key=value` (config
// file) or `--key value` (CLI). Defaults are the published hyperparameters
// where one exists, desk-scale choices otherwise.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string dataset = "dataset";  // file prefix: <dataset>.imit.ds etc.

  // latent space + observation horizons
  std::size_t Nz = 6;
  std::size_t hI = 2, hS = 8, hC = 8;

  // reward weights
  double wT = 1.0, wI = 1.0, wS = 0.5, wD = 1.0, wR = 1.0;
  double w_ar = -0.01, w_qa = -2.5e-7, w_qT = -2.5e-5, w_tf = 1.0;
  double w_roll = -0.02, w_yaw = -0.02, w_lat = -0.02;
  double sigma_sq = 0.25;

  // environment
  double dt = 0.02;
  double max_episode_s = 20.0;
  bool randomize = true;
  bool obs_noise = true;

  // policy optimization
  std::size_t n_envs = 64, steps_per_iter = 24, iterations = 500;
  double gamma = 0.99, lam = 0.95, clip_eps = 0.2;
  double entropy_coef = 0.01, kl_target = 0.01, lr = 1e-3;
  std::size_t ppo_epochs = 5, ppo_minibatches = 4;
  std::size_t policy_width = 64, policy_depth = 3;

  // imitation discriminator
  double disc_lr = 1e-4, disc_wd = 1e-4, disc_momentum = 0.5, gp_weight = 5.0;
  std::size_t disc_epochs = 1, disc_minibatches = 80, disc_batch = 32;
  std::size_t disc_w1 = 256, disc_w2 = 128;

  // skill discriminator ensemble
  double skill_lr = 1e-4, skill_wd = 5e-4;
  std::size_t skill_epochs = 1, skill_minibatches = 80, skill_batch = 32;
  std::size_t skill_width = 128, ensemble = 5;

  // oracle classifier
  double oracle_lr = 1e-5, oracle_wd = 5e-4;
  std::size_t oracle_epochs = 200, oracle_batch = 256, oracle_per_class = 2000;
  std::size_t oracle_w1 = 512, oracle_w2 = 256;

  // dataset generation
  std::size_t n_traj = 200, traj_len = 120, settle_steps = 50;
  bool paper_scale = false;

  // evaluation + clustering
  std::size_t eval_rollouts = 10, eval_warmup = 80, eval_len = 120;
  std::size_t checkpoint_every = 100;
  std::size_t cluster_horizon = 8, cluster_k = 15, cluster_subsample = 2400;
  std::size_t kmeans_restarts = 20;
  bool cluster_sweep_k = true;

  // std::uint64_t and std::size_t coincide on this platform; one alternative
  // covers both.
  struct Field {
    const char* name;
    std::variant<std::size_t*, double*, bool*, std::string*> ptr;
  };
  std::vector<Field> fields();

  // Throws ConfigError on unknown key or unparseable value.
  void set(const std::string& key, const std::string& value);
  // Lines of `key = value`; '#' comments; throws ConfigError.
  void load_file(const std::string& path);
  // Resolved config, one key = value per line (round-trips through set()).
  std::string dump() const;
};

}  // namespace cassi
