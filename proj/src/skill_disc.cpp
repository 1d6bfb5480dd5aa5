#include "cassi/skill_disc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cassi {

double entropy(const double* p, std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

namespace {

std::vector<std::size_t> member_sizes(const SkillDiscConfig& cfg) {
  std::vector<std::size_t> s{cfg.input_dim};
  s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
  s.push_back(cfg.n_z);
  return s;
}

void softmax(const double* logits, double* p, std::size_t n) {
  double mx = logits[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

}  // namespace

SkillDiscriminator::SkillDiscriminator(const SkillDiscConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.ensemble < 1) throw std::invalid_argument("skill disc: ensemble size must be >= 1");
  members_.reserve(cfg.ensemble);
  opts_.reserve(cfg.ensemble);
  for (std::size_t i = 0; i < cfg.ensemble; ++i) {
    members_.emplace_back(member_sizes(cfg), Act::relu);
    members_.back().init(rng);
    opts_.emplace_back(Optimizer::Kind::adam, members_.back().n_params(), cfg.lr,
                       cfg.weight_decay);
  }
}

void SkillDiscriminator::posterior(const double* clip, double* mean_post,
                                   double* member_post) const {
  const std::size_t nz = cfg_.n_z;
  std::vector<double> logits(nz), p(nz);
  std::fill(mean_post, mean_post + nz, 0.0);
  for (std::size_t m = 0; m < members_.size(); ++m) {
    members_[m].forward(clip, logits.data());
    softmax(logits.data(), p.data(), nz);
    for (std::size_t c = 0; c < nz; ++c) mean_post[c] += p[c];
    if (member_post) std::copy(p.begin(), p.end(), member_post + m * nz);
  }
  const double inv = 1.0 / static_cast<double>(members_.size());
  for (std::size_t c = 0; c < nz; ++c) mean_post[c] *= inv;
}

void SkillDiscriminator::posterior_batch(const double* clips, std::size_t n,
                                         double* mean_post) const {
  const std::size_t nz = cfg_.n_z;
  std::vector<double> logits(n * nz), p(nz);
  std::fill(mean_post, mean_post + n * nz, 0.0);
  for (const auto& m : members_) {
    m.forward_batch(clips, n, logits.data());
    for (std::size_t i = 0; i < n; ++i) {
      softmax(logits.data() + i * nz, p.data(), nz);
      for (std::size_t c = 0; c < nz; ++c) mean_post[i * nz + c] += p[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(members_.size());
  for (std::size_t i = 0; i < n * nz; ++i) mean_post[i] *= inv;
}

void SkillDiscriminator::rewards_batch(const double* clips, std::size_t n, const int* latents,
                                       double* r_s, double* r_d) const {
  const std::size_t nz = cfg_.n_z;
  std::vector<double> logits(n * nz), p(nz);
  std::vector<double> mean_post(n * nz, 0.0), member_h(n, 0.0);
  for (const auto& m : members_) {
    m.forward_batch(clips, n, logits.data());
    for (std::size_t i = 0; i < n; ++i) {
      softmax(logits.data() + i * nz, p.data(), nz);
      for (std::size_t c = 0; c < nz; ++c) mean_post[i * nz + c] += p[c];
      member_h[i] += entropy(p.data(), nz);
    }
  }
  const double inv = 1.0 / static_cast<double>(members_.size());
  const double log_nz = std::log(static_cast<double>(nz));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < nz; ++c) mean_post[i * nz + c] *= inv;
    if (r_s) {
      const int z = latents[i];
      if (z < 0 || static_cast<std::size_t>(z) >= nz)
        throw std::invalid_argument("skill_reward: z out of range");
      r_s[i] = std::log(mean_post[i * nz + static_cast<std::size_t>(z)] + 1e-8) + log_nz;
    }
    if (r_d) r_d[i] = entropy(mean_post.data() + i * nz, nz) - member_h[i] * inv;
  }
}

void SkillDiscriminator::rewards(const double* clip, std::size_t z, double* r_s,
                                 double* r_d) const {
  const std::size_t nz = cfg_.n_z;
  std::vector<double> mean_post(nz), member_post(members_.size() * nz);
  posterior(clip, mean_post.data(), member_post.data());
  if (r_s) {
    if (z >= nz) throw std::invalid_argument("skill_reward: z out of range");
    *r_s = std::log(mean_post[z] + 1e-8) + std::log(static_cast<double>(nz));
  }
  if (r_d) {
    double member_h = 0.0;
    for (std::size_t m = 0; m < members_.size(); ++m)
      member_h += entropy(member_post.data() + m * nz, nz);
    member_h /= static_cast<double>(members_.size());
    *r_d = entropy(mean_post.data(), nz) - member_h;
  }
}

double SkillDiscriminator::skill_reward(const double* clip, std::size_t z) const {
  double r_s;
  rewards(clip, z, &r_s, nullptr);
  return r_s;
}

double SkillDiscriminator::disdain_reward(const double* clip) const {
  double r_d;
  rewards(clip, 0, nullptr, &r_d);
  return r_d;
}

SkillDiscStats SkillDiscriminator::update(const std::vector<double>& windows,
                                          const std::vector<int>& latents, Rng& rng) {
  SkillDiscStats agg;
  const std::size_t dim = cfg_.input_dim, nz = cfg_.n_z;
  if (windows.size() % dim != 0)
    throw std::invalid_argument("skill update: buffer length not a multiple of window length");
  const std::size_t n = windows.size() / dim;
  if (n != latents.size())
    throw std::invalid_argument("skill update: window/latent count mismatch");
  if (n == 0) {
    agg.skipped = true;
    return agg;
  }

  const std::size_t bs = cfg_.batch_size;
  const std::size_t mbs = std::min(cfg_.mini_batches, std::max<std::size_t>(1, n / bs));
  std::vector<std::size_t> base(bs), boot(bs);
  std::vector<double> X(bs * dim), logits(bs * nz), dY(bs * nz), p(nz);
  std::vector<double> grad;

  for (std::size_t ep = 0; ep < cfg_.epochs; ++ep) {
    for (std::size_t mb = 0; mb < mbs; ++mb) {
      for (auto& i : base) i = rng.index(n);
      double mb_loss = 0.0, mb_acc = 0.0;
      for (std::size_t m = 0; m < members_.size(); ++m) {
        for (std::size_t i = 0; i < bs; ++i) {
          boot[i] = base[rng.index(bs)];
          std::copy_n(windows.data() + boot[i] * dim, dim, X.data() + i * dim);
        }
        Mlp::BatchCache cache;
        members_[m].forward_batch(X.data(), bs, logits.data(), &cache);
        for (std::size_t i = 0; i < bs; ++i) {
          const int z = latents[boot[i]];
          if (z < 0 || static_cast<std::size_t>(z) >= nz)
            throw std::invalid_argument("skill update: latent out of range");
          softmax(logits.data() + i * nz, p.data(), nz);
          mb_loss -= std::log(p[static_cast<std::size_t>(z)] + 1e-12);
          std::size_t arg = 0;
          for (std::size_t c = 1; c < nz; ++c)
            if (p[c] > p[arg]) arg = c;
          mb_acc += arg == static_cast<std::size_t>(z) ? 1.0 : 0.0;
          for (std::size_t c = 0; c < nz; ++c)
            dY[i * nz + c] = (p[c] - (c == static_cast<std::size_t>(z) ? 1.0 : 0.0)) /
                             static_cast<double>(bs);
        }
        grad.assign(members_[m].n_params(), 0.0);
        members_[m].backward_batch(cache, dY.data(), grad.data());
        opts_[m].step(members_[m].params(), grad.data());
      }
      const double denom = static_cast<double>(bs * members_.size());
      agg.ce_loss += mb_loss / denom;
      agg.accuracy += mb_acc / denom;
      ++agg.steps;
    }
  }
  if (agg.steps) {
    agg.ce_loss /= static_cast<double>(agg.steps);
    agg.accuracy /= static_cast<double>(agg.steps);
  }
  return agg;
}

}  // namespace cassi
