#pragma once
#include <cstddef>
#include <vector>

#include "cassi/mlp.hpp"
#include "cassi/optim.hpp"
#include "cassi/rng.hpp"

namespace cassi {

struct SkillDiscConfig {
  std::size_t input_dim = 96;  // H^S * D
  std::size_t n_z = 6;
  std::size_t ensemble = 5;
  std::vector<std::size_t> hidden = {128, 128};
  double lr = 1e-4;
  double weight_decay = 5e-4;
  std::size_t epochs = 1;
  std::size_t mini_batches = 80;
  std::size_t batch_size = 32;
};

struct SkillDiscStats {
  double ce_loss = 0.0;
  double accuracy = 0.0;  // argmax of mean posterior vs conditioning z
  std::size_t steps = 0;
  bool skipped = false;
};

// -sum p log p, natural log, 0 log 0 := 0
double entropy(const double* p, std::size_t n);

// Ensemble of independent softmax classifiers over latents. Members train on
// bootstrap resamples (bagging); their disagreement feeds the DISDAIN bonus.
class SkillDiscriminator {
 public:
  SkillDiscriminator(const SkillDiscConfig& cfg, Rng& rng);

  std::size_t n_z() const { return cfg_.n_z; }
  std::size_t ensemble_size() const { return cfg_.ensemble; }
  std::size_t input_dim() const { return cfg_.input_dim; }
  const SkillDiscConfig& config() const { return cfg_; }

  // mean_post: n_z. member_post (optional): ensemble x n_z, row-major.
  void posterior(const double* clip, double* mean_post, double* member_post = nullptr) const;
  // mean_post: n x n_z
  void posterior_batch(const double* clips, std::size_t n, double* mean_post) const;
  // per-row skill + DISDAIN rewards; latents picks the log-posterior entry
  void rewards_batch(const double* clips, std::size_t n, const int* latents, double* r_s,
                     double* r_d) const;

  // r_s = log(mean_post[z] + 1e-8) + log n_z; r_d = H(mean) - mean_i H(member_i)
  void rewards(const double* clip, std::size_t z, double* r_s, double* r_d) const;
  double skill_reward(const double* clip, std::size_t z) const;
  double disdain_reward(const double* clip) const;

  // Cross-entropy on (window, z) pairs; each member sees an independent
  // bootstrap resample of every mini-batch.
  SkillDiscStats update(const std::vector<double>& windows, const std::vector<int>& latents,
                        Rng& rng);

  Mlp& member(std::size_t i) { return members_[i]; }
  const Mlp& member(std::size_t i) const { return members_[i]; }

 private:
  SkillDiscConfig cfg_;
  std::vector<Mlp> members_;
  std::vector<Optimizer> opts_;
};

}  // namespace cassi
