#include "cassi/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cassi {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

double GaussianPolicy::log_prob(const double* mu, const double* a) const {
  const std::size_t k = act_dim();
  double lp = -0.5 * static_cast<double>(k) * kLog2Pi;
  for (std::size_t j = 0; j < k; ++j) {
    const double s = std::exp(log_std_[j]);
    const double z = (a[j] - mu[j]) / s;
    lp -= 0.5 * z * z + log_std_[j];
  }
  return lp;
}

void GaussianPolicy::sample(const double* mu, Rng& rng, double* a) const {
  for (std::size_t j = 0; j < act_dim(); ++j)
    a[j] = mu[j] + std::exp(log_std_[j]) * rng.normal();
}

double GaussianPolicy::entropy() const {
  double h = 0.5 * static_cast<double>(act_dim()) * (1.0 + kLog2Pi);
  for (double ls : log_std_) h += ls;
  return h;
}

void GaussianPolicy::clamp_log_std() {
  for (double& ls : log_std_) ls = std::clamp(ls, kLogStdMin, kLogStdMax);
}

void gae_advantages(const double* rewards, const double* values, const unsigned char* dones,
                    const double* bootstrap_value, std::size_t T, std::size_t E, double gamma,
                    double lam, double* adv, double* ret) {
  for (std::size_t e = 0; e < E; ++e) {
    double acc = 0.0;
    for (std::size_t t = T; t-- > 0;) {
      const std::size_t i = t * E + e;
      const double nonterm = dones[i] ? 0.0 : 1.0;
      const double v_next = t + 1 < T ? values[(t + 1) * E + e] : bootstrap_value[e];
      const double delta = rewards[i] + gamma * v_next * nonterm - values[i];
      acc = delta + gamma * lam * nonterm * acc;
      adv[i] = acc;
      ret[i] = acc + values[i];
    }
  }
}

PpoTrainer::PpoTrainer(GaussianPolicy policy, Mlp value, const PpoConfig& cfg)
    : policy_(std::move(policy)),
      value_(std::move(value)),
      cfg_(cfg),
      pol_opt_(Optimizer::Kind::adam, policy_.net().n_params(), cfg.lr),
      std_opt_(Optimizer::Kind::adam, policy_.log_std().size(), cfg.lr),
      val_opt_(Optimizer::Kind::adam, value_.n_params(), cfg.lr) {}

double PpoTrainer::policy_loss(const PpoBatch& batch, const double* advantages,
                               const std::vector<std::size_t>& idx, double* net_grad,
                               double* log_std_grad, double* kl_out) const {
  const std::size_t m = idx.size(), k = batch.act_dim, od = batch.obs_dim;
  const auto& ls = policy_.log_std();
  std::vector<double> X(m * od), MU(m * k), dMU(m * k);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(batch.obs.data() + idx[i] * od, od, X.data() + i * od);

  Mlp::BatchCache cache;
  policy_.mean_batch(X.data(), m, MU.data(), &cache);

  double loss = 0.0, kl = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = batch.actions.data() + idx[i] * k;
    const double* mu = MU.data() + i * k;
    const double lp = policy_.log_prob(mu, a);
    const double adv = advantages[idx[i]];
    const double rho = std::exp(lp - batch.old_logp[idx[i]]);
    const double unclipped = rho * adv;
    const double clipped = std::clamp(rho, 1.0 - cfg_.clip_eps, 1.0 + cfg_.clip_eps) * adv;
    const bool active = unclipped <= clipped;  // min picks the unclipped branch
    loss -= std::min(unclipped, clipped) * inv_m;
    kl += (batch.old_logp[idx[i]] - lp) * inv_m;
    const double dlp = active ? -adv * rho * inv_m : 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double s2 = std::exp(2.0 * ls[j]);
      const double diff = a[j] - mu[j];
      dMU[i * k + j] = dlp * diff / s2;
      log_std_grad[j] += dlp * (diff * diff / s2 - 1.0);
    }
  }
  loss -= cfg_.entropy_coef * policy_.entropy();
  for (std::size_t j = 0; j < k; ++j) log_std_grad[j] -= cfg_.entropy_coef;

  policy_.net().backward_batch(cache, dMU.data(), net_grad);
  if (kl_out) *kl_out = kl;
  return loss;
}

double PpoTrainer::value_loss(const PpoBatch& batch, const std::vector<std::size_t>& idx,
                              double* grad) const {
  const std::size_t m = idx.size(), od = batch.obs_dim;
  std::vector<double> X(m * od), V(m), dV(m);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(batch.obs.data() + idx[i] * od, od, X.data() + i * od);
  Mlp::BatchCache cache;
  value_.forward_batch(X.data(), m, V.data(), &cache);
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double e = V[i] - batch.returns[idx[i]];
    loss += e * e * inv_m;
    dV[i] = 2.0 * e * inv_m;
  }
  value_.backward_batch(cache, dV.data(), grad);
  return loss;
}

PpoStats PpoTrainer::update(const PpoBatch& batch, Rng& rng) {
  PpoStats stats;
  const std::size_t n = batch.n;
  if (n == 0) throw std::invalid_argument("ppo update: empty batch");

  // normalize advantages once per update phase
  std::vector<double> adv(batch.advantages);
  double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double& a : adv) {
    a -= mean;
    var += a * a;
  }
  const double inv_std = 1.0 / (std::sqrt(var / static_cast<double>(n)) + 1e-8);
  for (double& a : adv) a *= inv_std;

  // snapshot for non-finite abort
  const std::vector<double> pol_snap(policy_.net().params(),
                                     policy_.net().params() + policy_.net().n_params());
  const std::vector<double> std_snap(policy_.log_std());
  const std::vector<double> val_snap(value_.params(), value_.params() + value_.n_params());
  const Optimizer pol_opt_snap = pol_opt_, std_opt_snap = std_opt_, val_opt_snap = val_opt_;

  auto restore = [&] {
    std::copy(pol_snap.begin(), pol_snap.end(), policy_.net().params());
    policy_.log_std() = std_snap;
    std::copy(val_snap.begin(), val_snap.end(), value_.params());
    pol_opt_ = pol_opt_snap;
    std_opt_ = std_opt_snap;
    val_opt_ = val_opt_snap;
  };

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> net_grad(policy_.net().n_params()), ls_grad(policy_.log_std().size());
  std::vector<double> val_grad(value_.n_params());

  double kl_sum = 0.0;
  std::size_t n_mb = 0;
  try {
    for (std::size_t ep = 0; ep < cfg_.epochs; ++ep) {
      // Fisher-Yates on the trainer stream
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
      const std::size_t mb_count = std::min<std::size_t>(cfg_.mini_batches, n);
      for (std::size_t mb = 0; mb < mb_count; ++mb) {
        const std::size_t lo = mb * n / mb_count, hi = (mb + 1) * n / mb_count;
        const std::vector<std::size_t> idx(perm.begin() + lo, perm.begin() + hi);
        std::fill(net_grad.begin(), net_grad.end(), 0.0);
        std::fill(ls_grad.begin(), ls_grad.end(), 0.0);
        std::fill(val_grad.begin(), val_grad.end(), 0.0);
        double kl = 0.0;
        const double pl = policy_loss(batch, adv.data(), idx, net_grad.data(), ls_grad.data(), &kl);
        const double vl = value_loss(batch, idx, val_grad.data());
        if (!std::isfinite(pl) || !std::isfinite(vl))
          throw std::runtime_error("non-finite ppo loss");
        pol_opt_.step(policy_.net().params(), net_grad.data());
        std_opt_.step(policy_.log_std().data(), ls_grad.data());
        policy_.clamp_log_std();
        val_opt_.step(value_.params(), val_grad.data());
        stats.policy_loss += pl;
        stats.value_loss += vl;
        kl_sum += kl;
        ++n_mb;
      }
    }
  } catch (const std::runtime_error&) {
    restore();
    stats.aborted = true;
    stats.lr = pol_opt_.lr();
    return stats;
  }

  stats.policy_loss /= static_cast<double>(n_mb);
  stats.value_loss /= static_cast<double>(n_mb);
  stats.kl = kl_sum / static_cast<double>(n_mb);
  stats.entropy = policy_.entropy();

  // KL-adaptive learning rate, one adjustment per update
  double lr = pol_opt_.lr();
  if (stats.kl > 2.0 * cfg_.kl_target)
    lr /= 1.5;
  else if (stats.kl < 0.5 * cfg_.kl_target)
    lr *= 1.5;
  lr = std::clamp(lr, cfg_.lr_min, cfg_.lr_max);
  pol_opt_.set_lr(lr);
  std_opt_.set_lr(lr);
  val_opt_.set_lr(lr);
  stats.lr = lr;
  return stats;
}

}  // namespace cassi
