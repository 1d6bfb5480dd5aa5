#include "cassi/imitation_disc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cassi {

double imitation_reward_from_score(double d) {
  const double e = d - 1.0;
  return std::max(0.0, 1.0 - 0.25 * e * e);
}

namespace {

std::vector<std::size_t> disc_sizes(const ImitDiscConfig& cfg) {
  std::vector<std::size_t> s{cfg.input_dim};
  s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
  s.push_back(1);
  return s;
}

}  // namespace

ImitationDiscriminator::ImitationDiscriminator(const ImitDiscConfig& cfg, Rng& rng)
    : cfg_(cfg),
      net_(disc_sizes(cfg), Act::relu),
      opt_(Optimizer::Kind::sgd_momentum, net_.n_params(), cfg.lr, cfg.weight_decay,
           cfg.momentum) {
  net_.init(rng);
}

double ImitationDiscriminator::score(const double* clip) const {
  double y;
  net_.forward(clip, &y);
  return y;
}

double ImitationDiscriminator::loss_and_grad(const double* ref, std::size_t n_ref,
                                             const double* pol, std::size_t n_pol, double* grad,
                                             ImitDiscStats* stats) const {
  if (n_ref == 0 || n_pol == 0)
    throw std::invalid_argument("disc_loss: both batches must be nonempty");
  const std::size_t dim = cfg_.input_dim;

  Mlp::BatchCache cache;
  std::vector<double> d(std::max(n_ref, n_pol));
  std::vector<double> dY(std::max(n_ref, n_pol));

  net_.forward_batch(ref, n_ref, d.data(), &cache);
  double loss_ref = 0.0, d_ref_mean = 0.0;
  for (std::size_t i = 0; i < n_ref; ++i) {
    const double e = d[i] - 1.0;
    loss_ref += e * e;
    d_ref_mean += d[i];
    dY[i] = 2.0 * e / static_cast<double>(n_ref);
  }
  loss_ref /= static_cast<double>(n_ref);
  d_ref_mean /= static_cast<double>(n_ref);
  net_.backward_batch(cache, dY.data(), grad);

  net_.forward_batch(pol, n_pol, d.data(), &cache);
  double loss_pol = 0.0, d_pol_mean = 0.0;
  for (std::size_t i = 0; i < n_pol; ++i) {
    const double e = d[i] + 1.0;
    loss_pol += e * e;
    d_pol_mean += d[i];
    dY[i] = 2.0 * e / static_cast<double>(n_pol);
  }
  loss_pol /= static_cast<double>(n_pol);
  d_pol_mean /= static_cast<double>(n_pol);
  net_.backward_batch(cache, dY.data(), grad);

  double gp_mean = 0.0;
  if (cfg_.gp_weight != 0.0) {
    Mlp::Cache single;
    double y;
    for (std::size_t i = 0; i < n_ref; ++i) {
      net_.forward(ref + i * dim, &y, &single);
      gp_mean += net_.gp_backward(single, grad, cfg_.gp_weight / static_cast<double>(n_ref));
    }
    gp_mean /= static_cast<double>(n_ref);
  }

  const double loss = loss_ref + loss_pol + cfg_.gp_weight * gp_mean;
  if (stats) {
    stats->loss = loss;
    stats->d_ref = d_ref_mean;
    stats->d_pol = d_pol_mean;
    stats->gp = gp_mean;
  }
  return loss;
}

ImitDiscStats ImitationDiscriminator::update(const ReferenceDataset& ref,
                                             const std::vector<double>& pol_windows, Rng& rng) {
  ImitDiscStats agg;
  const std::size_t dim = cfg_.input_dim;
  if (ref.clip_dim() != dim)
    throw std::invalid_argument("disc update: dataset clip length != discriminator input");
  if (pol_windows.size() % dim != 0)
    throw std::invalid_argument("disc update: policy buffer length not a multiple of clip length");
  const std::size_t n_pol = pol_windows.size() / dim;
  if (n_pol == 0) {
    agg.skipped = true;
    return agg;
  }

  const std::size_t bs = cfg_.batch_size;
  const std::size_t mbs = std::min(cfg_.mini_batches, std::max<std::size_t>(1, n_pol / bs));
  std::vector<double> ref_batch(bs * dim), pol_batch(bs * dim), grad(net_.n_params());

  for (std::size_t ep = 0; ep < cfg_.epochs; ++ep) {
    for (std::size_t mb = 0; mb < mbs; ++mb) {
      ref.sample(bs, rng, ref_batch);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t src = rng.index(n_pol);
        std::copy_n(pol_windows.data() + src * dim, dim, pol_batch.data() + i * dim);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      ImitDiscStats s;
      loss_and_grad(ref_batch.data(), bs, pol_batch.data(), bs, grad.data(), &s);
      opt_.step(net_.params(), grad.data());
      agg.loss += s.loss;
      agg.d_ref += s.d_ref;
      agg.d_pol += s.d_pol;
      agg.gp += s.gp;
      ++agg.steps;
    }
  }
  if (agg.steps) {
    const double inv = 1.0 / static_cast<double>(agg.steps);
    agg.loss *= inv;
    agg.d_ref *= inv;
    agg.d_pol *= inv;
    agg.gp *= inv;
  }
  return agg;
}

}  // namespace cassi
