#pragma once
#include <cstddef>
#include <vector>

#include "cassi/dataset.hpp"
#include "cassi/mlp.hpp"
#include "cassi/optim.hpp"
#include "cassi/rng.hpp"

namespace cassi {

struct ImitDiscConfig {
  std::size_t input_dim = 24;  // H^I * D
  std::vector<std::size_t> hidden = {256, 128};
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double momentum = 0.5;
  double gp_weight = 5.0;
  std::size_t epochs = 1;
  std::size_t mini_batches = 80;
  std::size_t batch_size = 32;
};

struct ImitDiscStats {
  double loss = 0.0;
  double d_ref = 0.0;
  double d_pol = 0.0;
  double gp = 0.0;
  std::size_t steps = 0;
  bool skipped = false;  // empty policy buffer
};

// max(0, 1 - 0.25 (d - 1)^2), bounded to [0, 1]
double imitation_reward_from_score(double d);

// LSGAN discriminator: ref labeled +1, policy labeled -1, squared-error loss
// with an input-gradient penalty on the reference side.
class ImitationDiscriminator {
 public:
  ImitationDiscriminator(const ImitDiscConfig& cfg, Rng& rng);

  std::size_t input_dim() const { return cfg_.input_dim; }
  const ImitDiscConfig& config() const { return cfg_; }

  double score(const double* clip) const;
  double reward(const double* clip) const { return imitation_reward_from_score(score(clip)); }
  void score_batch(const double* clips, std::size_t n, double* d) const {
    net_.forward_batch(clips, n, d);
  }

  // loss = mean(d(ref)-1)^2 + mean(d(pol)+1)^2 + gp_weight * mean_ref ||grad_x d||^2.
  // Adds the full parameter gradient into grad (size n_params). Row counts are
  // samples; both matrices are row-major input_dim wide.
  double loss_and_grad(const double* ref, std::size_t n_ref, const double* pol, std::size_t n_pol,
                       double* grad, ImitDiscStats* stats = nullptr) const;

  // epochs x mini_batches SGD steps, minibatches capped by policy-buffer size.
  ImitDiscStats update(const ReferenceDataset& ref, const std::vector<double>& pol_windows,
                       Rng& rng);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Optimizer& opt() { return opt_; }

 private:
  ImitDiscConfig cfg_;
  Mlp net_;
  Optimizer opt_;
};

}  // namespace cassi
