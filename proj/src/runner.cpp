#include "cassi/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "cassi/checkpoint.hpp"

namespace cassi {

namespace {

constexpr std::uint64_t kSeedStride = 1000003;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

WalkerConfig walker_config(const RunConfig& cfg) {
  WalkerConfig w;
  w.dt = cfg.dt;
  w.max_episode_s = cfg.max_episode_s;
  w.randomize = cfg.randomize;
  return w;
}

RewardWeights reward_weights(const RunConfig& cfg) {
  RewardWeights w;
  w.w_T = cfg.wT;
  w.w_I = cfg.wI;
  w.w_S = cfg.wS;
  w.w_D = cfg.wD;
  w.w_R = cfg.wR;
  w.w_ar = cfg.w_ar;
  w.w_qa = cfg.w_qa;
  w.w_qT = cfg.w_qT;
  w.w_tf = cfg.w_tf;
  w.w_roll = cfg.w_roll;
  w.w_yaw = cfg.w_yaw;
  w.w_lat = cfg.w_lat;
  w.sigma_sq = cfg.sigma_sq;
  return w;
}

std::size_t policy_obs_dim(const RunConfig& cfg) { return kFeatDim + kJoints + 1 + cfg.Nz; }

std::vector<double> obs_noise_levels(const RunConfig& cfg) {
  std::vector<double> b(policy_obs_dim(cfg), 0.0);
  b[0] = b[1] = 0.2;  // v_x, v_y
  b[2] = 0.05;        // omega
  for (std::size_t j = 0; j < kJoints; ++j) {
    b[4 + j] = 0.01;  // q
    b[8 + j] = 0.75;  // qdot
  }
  return b;  // height, last_action, command, one-hot: noise-free
}

RecordConfig record_config(const RunConfig& cfg) {
  RecordConfig rcfg;
  rcfg.n_traj_per_gait = cfg.paper_scale ? 1000 : cfg.n_traj;
  rcfg.traj_len = cfg.traj_len;
  rcfg.randomize = cfg.randomize;
  rcfg.settle_steps = cfg.settle_steps;
  rcfg.seed = cfg.seed;
  return rcfg;
}

ImitDiscConfig imit_config(const RunConfig& cfg) {
  ImitDiscConfig d;
  d.input_dim = cfg.hI * kFeatDim;
  d.hidden = {cfg.disc_w1, cfg.disc_w2};
  d.lr = cfg.disc_lr;
  d.weight_decay = cfg.disc_wd;
  d.momentum = cfg.disc_momentum;
  d.gp_weight = cfg.gp_weight;
  d.epochs = cfg.disc_epochs;
  d.mini_batches = cfg.disc_minibatches;
  d.batch_size = cfg.disc_batch;
  return d;
}

SkillDiscConfig skill_config(const RunConfig& cfg) {
  SkillDiscConfig s;
  s.input_dim = cfg.hS * kFeatDim;
  s.n_z = cfg.Nz;
  s.ensemble = cfg.ensemble;
  s.hidden = {cfg.skill_width, cfg.skill_width};
  s.lr = cfg.skill_lr;
  s.weight_decay = cfg.skill_wd;
  s.epochs = cfg.skill_epochs;
  s.mini_batches = cfg.skill_minibatches;
  s.batch_size = cfg.skill_batch;
  return s;
}

PpoConfig ppo_params(const RunConfig& cfg) {
  PpoConfig p;
  p.gamma = cfg.gamma;
  p.lam = cfg.lam;
  p.clip_eps = cfg.clip_eps;
  p.entropy_coef = cfg.entropy_coef;
  p.kl_target = cfg.kl_target;
  p.lr = cfg.lr;
  p.epochs = cfg.ppo_epochs;
  p.mini_batches = cfg.ppo_minibatches;
  return p;
}

std::vector<std::size_t> policy_sizes(const RunConfig& cfg, std::size_t out_dim) {
  std::vector<std::size_t> sizes{policy_obs_dim(cfg)};
  for (std::size_t i = 0; i < cfg.policy_depth; ++i) sizes.push_back(cfg.policy_width);
  sizes.push_back(out_dim);
  return sizes;
}

GenReport generate_datasets(const RunConfig& cfg) {
  GenReport rep;
  WalkerConfig wcfg = walker_config(cfg);
  const auto trajs = record_experts(default_gaits(), wcfg, record_config(cfg));
  for (const auto& t : trajs) rep.rows += t.len;

  const auto paths = DatasetPaths::from_prefix(cfg.dataset);
  auto build = [&](std::size_t horizon, const std::string& path, bool labeled) {
    std::size_t skipped = 0;
    ReferenceDataset ds = slice_clips(trajs, horizon, 1, &skipped);
    rep.skipped_trajectories = skipped;  // same trajectories for every slice
    ds.normalize();
    rep.sigma_guards += ds.sigma_guard_count();
    ds.save(path, labeled);
    return ds.size();
  };
  rep.imit_clips = build(cfg.hI, paths.imit, false);
  rep.skill_clips = build(cfg.hS, paths.skill, false);
  rep.eval_clips = build(cfg.hC, paths.eval_labeled, true);
  return rep;
}

std::string IterStats::csv_header() {
  return "iter,lr,kl,policy_loss,value_loss,entropy,r_T,r_I,r_S,r_D,r_R,"
         "disc_loss,d_ref,d_pol,gp,skill_ce,skill_acc,ep_return,ep_count,diverged";
}

std::string IterStats::csv_row() const {
  std::string s = std::to_string(iter);
  for (double v : {lr, kl, policy_loss, value_loss, entropy, r_T, r_I, r_S, r_D, r_R, disc_loss,
                   d_ref, d_pol, gp, skill_ce, skill_acc, ep_return})
    s += "," + fmt(v);
  s += "," + std::to_string(ep_count);
  s += "," + std::to_string(diverged);
  return s;
}

Trainer::Trainer(const RunConfig& cfg)
    : cfg_(cfg),
      wcfg_(walker_config(cfg)),
      weights_(reward_weights(cfg)),
      imit_ds_(ReferenceDataset::load(DatasetPaths::from_prefix(cfg.dataset).imit)),
      skill_ds_(ReferenceDataset::load(DatasetPaths::from_prefix(cfg.dataset).skill)),
      obs_dim_(policy_obs_dim(cfg)),
      window_depth_(std::max(cfg.hI, cfg.hS)),
      noise_levels_(obs_noise_levels(cfg)),
      ppo_(
          [&] {
            GaussianPolicy pol(policy_sizes(cfg, kJoints), 0.0);
            Rng r(cfg.seed * kSeedStride + 1);
            pol.init(r, 0.1);
            return pol;
          }(),
          [&] {
            Mlp v(policy_sizes(cfg, 1), Act::elu);
            Rng r(cfg.seed * kSeedStride + 2);
            v.init(r);
            return v;
          }(),
          ppo_params(cfg)),
      imit_([&] {
        Rng r(cfg.seed * kSeedStride + 3);
        return ImitationDiscriminator(imit_config(cfg), r);
      }()),
      skill_([&] {
        Rng r(cfg.seed * kSeedStride + 4);
        return SkillDiscriminator(skill_config(cfg), r);
      }()),
      trainer_rng_(cfg.seed * kSeedStride + 5) {
  if (imit_ds_.clip_dim() != cfg.hI * kFeatDim)
    throw std::runtime_error("imitation dataset horizon does not match hI");
  if (skill_ds_.clip_dim() != cfg.hS * kFeatDim)
    throw std::runtime_error("skill dataset horizon does not match hS");
  if (!imit_ds_.normalized()) imit_ds_.normalize();
  if (!skill_ds_.normalized()) skill_ds_.normalize();

  envs_.resize(cfg.n_envs);
  for (std::size_t e = 0; e < cfg.n_envs; ++e) {
    envs_[e].rng = Rng(cfg.seed * kSeedStride + 100 + e);
    envs_[e].hist.reserve(window_depth_ * kFeatDim);
    reset_env(envs_[e], true, e);
  }
}

void Trainer::reset_env(EnvSlot& e, bool initial, std::size_t slot) {
  e.state = WalkerState{};
  e.z = static_cast<int>(e.rng.index(cfg_.Nz));
  e.command = e.rng.uniform();
  e.traction = wcfg_.randomize ? 1.0 + e.rng.uniform(wcfg_.traction_lo, wcfg_.traction_hi) : 1.0;
  const std::size_t max_steps = wcfg_.max_episode_steps();
  // stagger first truncations so resets spread across iterations
  e.steps_left = initial ? max_steps - slot * max_steps / cfg_.n_envs : max_steps;
  e.next_push_t = wcfg_.push_interval_s;
  e.hist.clear();
  e.frames = 0;
  e.prev_qdot = {};
  e.prev_action = {};
  e.ep_return = 0.0;
  double feat[kFeatDim];
  e.state.features(wcfg_, feat);
  push_frame(e, feat);
}

void Trainer::push_frame(EnvSlot& e, const double* feat) {
  if (e.hist.size() == window_depth_ * kFeatDim) {
    std::copy(e.hist.begin() + kFeatDim, e.hist.end(), e.hist.begin());
    std::copy_n(feat, kFeatDim, e.hist.end() - kFeatDim);
  } else {
    e.hist.insert(e.hist.end(), feat, feat + kFeatDim);
  }
  ++e.frames;
}

void Trainer::build_window(const EnvSlot& e, std::size_t H, double* out) const {
  const std::size_t have = std::min(e.frames, e.hist.size() / kFeatDim);
  const std::size_t take = std::min(have, H);
  const double* newest_block = e.hist.data() + (have - take) * kFeatDim;
  const std::size_t pad = H - take;
  for (std::size_t i = 0; i < pad; ++i) std::copy_n(newest_block, kFeatDim, out + i * kFeatDim);
  std::copy_n(newest_block, take * kFeatDim, out + pad * kFeatDim);
}

void Trainer::build_obs(EnvSlot& e, bool noise, double* obs) {
  e.state.features(wcfg_, obs);
  for (std::size_t j = 0; j < kJoints; ++j) obs[kFeatDim + j] = e.state.last_action[j];
  obs[kFeatDim + kJoints] = e.command;
  std::fill(obs + kFeatDim + kJoints + 1, obs + obs_dim_, 0.0);
  obs[kFeatDim + kJoints + 1 + static_cast<std::size_t>(e.z)] = 1.0;
  if (noise)
    for (std::size_t i = 0; i < obs_dim_; ++i)
      if (noise_levels_[i] > 0.0) obs[i] += e.rng.uniform(-noise_levels_[i], noise_levels_[i]);
}

IterStats Trainer::iterate() {
  const std::size_t T = cfg_.steps_per_iter, E = cfg_.n_envs, od = obs_dim_;
  const std::size_t imit_dim = cfg_.hI * kFeatDim, skill_dim = cfg_.hS * kFeatDim;
  IterStats st;
  st.iter = ++iter_;

  PpoBatch batch;
  batch.n = T * E;
  batch.obs_dim = od;
  batch.act_dim = kJoints;
  batch.obs.resize(batch.n * od);
  batch.actions.resize(batch.n * kJoints);
  batch.old_logp.resize(batch.n);
  batch.advantages.resize(batch.n);
  batch.returns.resize(batch.n);

  std::vector<double> values(batch.n), rewards(batch.n), bootstrap(E);
  std::vector<unsigned char> dones(batch.n, 0);
  std::vector<double> mu(E * kJoints), val_row(E);
  std::vector<double> raw_w(std::max(imit_dim, skill_dim));
  std::vector<double> imit_w(E * imit_dim), skill_w(E * skill_dim);
  std::vector<double> d_scores(E), r_s(E), r_d(E);
  std::vector<int> zs(E);
  std::vector<char> diverged(E);
  std::vector<double> pol_imit_buf, pol_skill_buf;
  std::vector<int> pol_z_buf;
  pol_imit_buf.reserve(batch.n * imit_dim);
  pol_skill_buf.reserve(batch.n * skill_dim);
  pol_z_buf.reserve(batch.n);
  std::vector<std::array<double, kJoints>> step_prev_qdot(E), step_prev_action(E);
  std::vector<StepEvents> events(E);
  std::vector<double> obs_tmp(od);

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t row0 = t * E;
    for (std::size_t e = 0; e < E; ++e)
      build_obs(envs_[e], cfg_.obs_noise, batch.obs.data() + (row0 + e) * od);
    ppo_.policy().mean_batch(batch.obs.data() + row0 * od, E, mu.data());
    ppo_.value().forward_batch(batch.obs.data() + row0 * od, E, val_row.data());

    for (std::size_t e = 0; e < E; ++e) {
      double* a = batch.actions.data() + (row0 + e) * kJoints;
      ppo_.policy().sample(mu.data() + e * kJoints, envs_[e].rng, a);
      batch.old_logp[row0 + e] = ppo_.policy().log_prob(mu.data() + e * kJoints, a);
      values[row0 + e] = val_row[e];
    }

    for (std::size_t e = 0; e < E; ++e) {
      EnvSlot& env = envs_[e];
      diverged[e] = 0;
      zs[e] = env.z;
      step_prev_qdot[e] = env.state.qdot;
      step_prev_action[e] = env.state.last_action;
      std::array<double, kJoints> act;
      std::copy_n(batch.actions.data() + (row0 + e) * kJoints, kJoints, act.begin());
      try {
        events[e] = walker_step(env.state, act, wcfg_, env.traction);
        double feat[kFeatDim];
        env.state.features(wcfg_, feat);
        push_frame(env, feat);
        if (wcfg_.randomize && env.state.t >= env.next_push_t - 1e-9) {
          apply_push(env.state, wcfg_, env.rng);
          env.next_push_t += wcfg_.push_interval_s;
        }
      } catch (const std::runtime_error&) {
        diverged[e] = 1;
        ++st.diverged;
        reset_env(env, false, e);
      }
    }

    for (std::size_t e = 0; e < E; ++e) {
      build_window(envs_[e], cfg_.hI, raw_w.data());
      imit_ds_.normalize_window(raw_w.data(), imit_w.data() + e * imit_dim);
      build_window(envs_[e], cfg_.hS, raw_w.data());
      skill_ds_.normalize_window(raw_w.data(), skill_w.data() + e * skill_dim);
    }
    imit_.score_batch(imit_w.data(), E, d_scores.data());
    skill_.rewards_batch(skill_w.data(), E, zs.data(), r_s.data(), r_d.data());

    for (std::size_t e = 0; e < E; ++e) {
      EnvSlot& env = envs_[e];
      const std::size_t i = row0 + e;
      if (diverged[e]) {
        rewards[i] = 0.0;
        dones[i] = 1;
        continue;
      }
      const double r_T = task_reward(env.command, env.state.v_x, weights_.sigma_sq);
      const double r_I = imitation_reward_from_score(d_scores[e]);
      RegInputs reg;
      reg.prev_action = step_prev_action[e];
      reg.action = env.state.last_action;
      reg.prev_qdot = step_prev_qdot[e];
      reg.qdot = env.state.qdot;
      reg.torque = events[e].torque;
      reg.air_time_landed = events[e].landed_air_time;
      reg.dt = wcfg_.dt;
      reg.omega_yaw = env.state.omega;
      reg.v_y = env.state.v_y(wcfg_);
      const double r_R = reg_rewards(reg, weights_).sum();
      double r = total_reward(r_T, r_I, r_s[e], r_d[e], r_R, weights_);
      st.r_T += r_T;
      st.r_I += r_I;
      st.r_S += r_s[e];
      st.r_D += r_d[e];
      st.r_R += r_R;

      pol_imit_buf.insert(pol_imit_buf.end(), imit_w.begin() + e * imit_dim,
                          imit_w.begin() + (e + 1) * imit_dim);
      pol_skill_buf.insert(pol_skill_buf.end(), skill_w.begin() + e * skill_dim,
                           skill_w.begin() + (e + 1) * skill_dim);
      pol_z_buf.push_back(env.z);

      env.ep_return += r;
      --env.steps_left;
      if (env.steps_left == 0) {
        // timeout truncation: bootstrap with the pre-reset state's value
        build_obs(env, false, obs_tmp.data());
        double v_next;
        ppo_.value().forward(obs_tmp.data(), &v_next);
        r += cfg_.gamma * v_next;
        dones[i] = 1;
        ep_return_sum_ += env.ep_return;
        ++ep_done_total_;
        ++st.ep_count;
        reset_env(env, false, e);
      }
      rewards[i] = r;
    }
  }

  const double denom = static_cast<double>(batch.n);
  st.r_T /= denom;
  st.r_I /= denom;
  st.r_S /= denom;
  st.r_D /= denom;
  st.r_R /= denom;

  for (std::size_t e = 0; e < E; ++e) {
    build_obs(envs_[e], false, obs_tmp.data());
    ppo_.value().forward(obs_tmp.data(), &bootstrap[e]);
  }
  gae_advantages(rewards.data(), values.data(), dones.data(), bootstrap.data(), T, E, cfg_.gamma,
                 cfg_.lam, batch.advantages.data(), batch.returns.data());

  const PpoStats ps = ppo_.update(batch, trainer_rng_);
  st.lr = ps.lr;
  st.kl = ps.kl;
  st.policy_loss = ps.policy_loss;
  st.value_loss = ps.value_loss;
  st.entropy = ps.entropy;
  st.ppo_aborted = ps.aborted;

  const ImitDiscStats is = imit_.update(imit_ds_, pol_imit_buf, trainer_rng_);
  st.disc_loss = is.loss;
  st.d_ref = is.d_ref;
  st.d_pol = is.d_pol;
  st.gp = is.gp;

  const SkillDiscStats ss = skill_.update(pol_skill_buf, pol_z_buf, trainer_rng_);
  st.skill_ce = ss.ce_loss;
  st.skill_acc = ss.accuracy;

  st.ep_return = ep_done_total_ ? ep_return_sum_ / static_cast<double>(ep_done_total_) : 0.0;
  return st;
}

void Trainer::save_checkpoint(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  save_net(dir + "/policy.bin", ppo_.policy().net(), ppo_.policy().log_std());
  save_net(dir + "/value.bin", ppo_.value());
  save_net(dir + "/disc.bin", imit_.net());
  for (std::size_t m = 0; m < skill_.ensemble_size(); ++m)
    save_net(dir + "/skill_" + std::to_string(m) + ".bin", skill_.member(m));
}

void Trainer::train() {
  std::filesystem::create_directories(cfg_.out_dir);
  {
    std::ofstream cf(cfg_.out_dir + "/config.txt");
    cf << cfg_.dump();
  }
  std::ofstream csv(cfg_.out_dir + "/metrics.csv");
  if (!csv) throw std::runtime_error("cannot open metrics.csv under " + cfg_.out_dir);
  csv << IterStats::csv_header() << "\n";
  for (std::size_t i = 0; i < cfg_.iterations; ++i) {
    const IterStats st = iterate();
    csv << st.csv_row() << "\n";
    csv.flush();
    if (cfg_.checkpoint_every && (st.iter % cfg_.checkpoint_every == 0 || i + 1 == cfg_.iterations))
      save_checkpoint(cfg_.out_dir + "/ckpt/" + std::to_string(st.iter));
  }
}

EvalRollout eval_rollout(const GaussianPolicy& policy, const RunConfig& cfg, int z,
                         double command) {
  RunConfig ecfg = cfg;
  ecfg.randomize = false;
  WalkerConfig wcfg = walker_config(ecfg);
  wcfg.randomize = false;
  const std::size_t od = policy_obs_dim(cfg);
  if (policy.obs_dim() != od)
    throw std::invalid_argument("eval_rollout: policy obs dim mismatch with config");
  WalkerState s;
  EvalRollout out;
  out.features.reserve(cfg.eval_len * kFeatDim);
  std::vector<double> obs(od), mu(kJoints);
  double feat[kFeatDim];
  double task_sum = 0.0;
  for (std::size_t t = 0; t < cfg.eval_warmup + cfg.eval_len; ++t) {
    s.features(wcfg, obs.data());
    for (std::size_t j = 0; j < kJoints; ++j) obs[kFeatDim + j] = s.last_action[j];
    obs[kFeatDim + kJoints] = command;
    std::fill(obs.begin() + kFeatDim + kJoints + 1, obs.end(), 0.0);
    obs[kFeatDim + kJoints + 1 + static_cast<std::size_t>(z)] = 1.0;
    policy.mean(obs.data(), mu.data());
    std::array<double, kJoints> act;
    std::copy_n(mu.begin(), kJoints, act.begin());
    walker_step(s, act, wcfg, 1.0);
    if (t >= cfg.eval_warmup) {
      s.features(wcfg, feat);
      out.features.insert(out.features.end(), feat, feat + kFeatDim);
      task_sum += task_reward(command, s.v_x, cfg.sigma_sq);
    }
  }
  out.mean_task_reward = task_sum / static_cast<double>(cfg.eval_len);
  return out;
}

}  // namespace cassi
