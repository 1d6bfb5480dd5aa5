#pragma once
#include <cstddef>
#include <vector>

#include "cassi/mlp.hpp"
#include "cassi/optim.hpp"
#include "cassi/rng.hpp"

namespace cassi {

// Diagonal Gaussian policy: MLP action mean plus a state-independent
// log-std vector clamped to [kLogStdMin, kLogStdMax].
class GaussianPolicy {
 public:
  static constexpr double kLogStdMin = -4.0;
  static constexpr double kLogStdMax = 1.0;

  GaussianPolicy(std::vector<std::size_t> sizes, double init_log_std = 0.0)
      : net_(std::move(sizes), Act::elu), log_std_(net_.out_dim(), init_log_std) {}

  void init(Rng& rng, double head_scale = 0.1) { net_.init(rng, head_scale); }

  std::size_t obs_dim() const { return net_.in_dim(); }
  std::size_t act_dim() const { return net_.out_dim(); }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::vector<double>& log_std() { return log_std_; }
  const std::vector<double>& log_std() const { return log_std_; }

  void mean(const double* obs, double* mu) const { net_.forward(obs, mu); }
  void mean_batch(const double* obs, std::size_t n, double* mu,
                  Mlp::BatchCache* cache = nullptr) const {
    net_.forward_batch(obs, n, mu, cache);
  }

  double log_prob(const double* mu, const double* a) const;
  void sample(const double* mu, Rng& rng, double* a) const;
  double entropy() const;  // state-independent for a fixed-std Gaussian
  void clamp_log_std();

 private:
  Mlp net_;
  std::vector<double> log_std_;
};

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  double entropy_coef = 0.01;
  double kl_target = 0.01;
  double lr = 1e-3;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  std::size_t epochs = 5;
  std::size_t mini_batches = 4;
};

struct PpoBatch {
  std::size_t n = 0, obs_dim = 0, act_dim = 0;
  std::vector<double> obs;         // n x obs_dim
  std::vector<double> actions;     // n x act_dim
  std::vector<double> old_logp;    // n
  std::vector<double> advantages;  // n, unnormalized
  std::vector<double> returns;     // n
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  bool aborted = false;  // non-finite loss; snapshot restored
};

// GAE over step-major (T x E) arrays. done[t,e] truncates bootstrapping;
// bootstrap_value[e] is V(s_{T}) for envs still running at the cut.
void gae_advantages(const double* rewards, const double* values, const unsigned char* dones,
                    const double* bootstrap_value, std::size_t T, std::size_t E, double gamma,
                    double lam, double* adv, double* ret);

class PpoTrainer {
 public:
  PpoTrainer(GaussianPolicy policy, Mlp value, const PpoConfig& cfg);

  // Full clipped-surrogate update; advantages are normalized internally.
  PpoStats update(const PpoBatch& batch, Rng& rng);

  // Policy loss (negative clipped surrogate minus entropy bonus) with
  // analytic gradients on a row subset; exposed for the gradient harness.
  double policy_loss(const PpoBatch& batch, const double* advantages,
                     const std::vector<std::size_t>& idx, double* net_grad, double* log_std_grad,
                     double* kl_out) const;
  double value_loss(const PpoBatch& batch, const std::vector<std::size_t>& idx,
                    double* grad) const;

  GaussianPolicy& policy() { return policy_; }
  const GaussianPolicy& policy() const { return policy_; }
  Mlp& value() { return value_; }
  const Mlp& value() const { return value_; }
  double lr() const { return pol_opt_.lr(); }
  const PpoConfig& config() const { return cfg_; }

 private:
  GaussianPolicy policy_;
  Mlp value_;
  PpoConfig cfg_;
  Optimizer pol_opt_, std_opt_, val_opt_;
};

}  // namespace cassi
