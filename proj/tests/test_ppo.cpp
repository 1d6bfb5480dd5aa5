#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "cassi/checkpoint.hpp"
#include "cassi/ppo.hpp"
#include "cassi/rng.hpp"
#include "cassi/runner.hpp"

using namespace cassi;

namespace {

// quadratic-time reference: discounted trace of td errors, cut at episode ends
void gae_reference(const double* r, const double* v, const unsigned char* done,
                   const double* boot, std::size_t T, std::size_t E, double gamma, double lam,
                   double* adv, double* ret) {
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0, w = 1.0;
      for (std::size_t l = t; l < T; ++l) {
        const std::size_t i = l * E + e;
        const double nonterm = done[i] ? 0.0 : 1.0;
        const double v_next = l + 1 < T ? v[(l + 1) * E + e] : boot[e];
        acc += w * (r[i] + gamma * v_next * nonterm - v[i]);
        if (done[i]) break;
        w *= gamma * lam;
      }
      adv[t * E + e] = acc;
      ret[t * E + e] = acc + v[t * E + e];
    }
  }
}

PpoBatch random_batch(Rng& rng, const GaussianPolicy& pol, std::size_t n, double logp_jitter) {
  PpoBatch b;
  b.n = n;
  b.obs_dim = pol.obs_dim();
  b.act_dim = pol.act_dim();
  b.obs.resize(n * b.obs_dim);
  b.actions.resize(n * b.act_dim);
  b.old_logp.resize(n);
  b.advantages.resize(n);
  b.returns.resize(n);
  for (auto& x : b.obs) x = rng.uniform(-1.0, 1.0);
  for (auto& x : b.actions) x = rng.uniform(-1.0, 1.0);
  std::vector<double> mu(b.act_dim);
  for (std::size_t i = 0; i < n; ++i) {
    pol.mean(b.obs.data() + i * b.obs_dim, mu.data());
    b.old_logp[i] =
        pol.log_prob(mu.data(), b.actions.data() + i * b.act_dim) +
        (logp_jitter > 0.0 ? rng.uniform(-logp_jitter, logp_jitter) : 0.0);
    b.advantages[i] = rng.uniform(-1.0, 1.0);
    b.returns[i] = rng.uniform(-1.0, 1.0);
  }
  return b;
}

}  // namespace

TEST_CASE("undiscounted full-credit advantages on a unit-reward episode") {
  const double r[3] = {1.0, 1.0, 1.0}, v[3] = {0.0, 0.0, 0.0};
  const unsigned char done[3] = {0, 0, 1};
  const double boot = 123.0;  // must be ignored after a terminal
  double adv[3], ret[3];
  gae_advantages(r, v, done, &boot, 3, 1, 1.0, 1.0, adv, ret);
  CHECK(adv[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(adv[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(adv[2] == doctest::Approx(1.0).epsilon(1e-15));
  for (int t = 0; t < 3; ++t) CHECK(ret[t] == adv[t]);
}

TEST_CASE("lambda 0 reduces to one-step td errors") {
  Rng rng(91);
  const std::size_t T = 7, E = 2;
  std::vector<double> r(T * E), v(T * E), boot(E);
  std::vector<unsigned char> done(T * E, 0);
  for (auto& x : r) x = rng.uniform(-1.0, 1.0);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  for (auto& x : boot) x = rng.uniform(-1.0, 1.0);
  done[3 * E + 1] = 1;

  std::vector<double> adv(T * E), ret(T * E);
  gae_advantages(r.data(), v.data(), done.data(), boot.data(), T, E, 0.97, 0.0, adv.data(),
                 ret.data());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t i = t * E + e;
      const double v_next = t + 1 < T ? v[(t + 1) * E + e] : boot[e];
      const double want = r[i] + 0.97 * v_next * (done[i] ? 0.0 : 1.0) - v[i];
      CHECK(adv[i] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("linear-time recursion agrees with the quadratic reference") {
  Rng rng(92);
  const std::size_t T = 50, E = 4;
  std::vector<double> r(T * E), v(T * E), boot(E), adv(T * E), ret(T * E), adv2(T * E),
      ret2(T * E);
  std::vector<unsigned char> done(T * E);
  for (int batch = 0; batch < 50; ++batch) {
    for (auto& x : r) x = rng.uniform(-2.0, 2.0);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    for (auto& x : boot) x = rng.uniform(-2.0, 2.0);
    for (auto& d : done) d = rng.uniform() < 0.1 ? 1 : 0;
    gae_advantages(r.data(), v.data(), done.data(), boot.data(), T, E, 0.99, 0.95, adv.data(),
                   ret.data());
    gae_reference(r.data(), v.data(), done.data(), boot.data(), T, E, 0.99, 0.95, adv2.data(),
                  ret2.data());
    for (std::size_t i = 0; i < T * E; ++i) {
      CHECK(adv[i] == doctest::Approx(adv2[i]).epsilon(1e-6).scale(1.0));
      CHECK(ret[i] == doctest::Approx(ret2[i]).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("gaussian log density, entropy, sampling, and clamping") {
  GaussianPolicy pol({3, 6, 2});
  Rng rng(93);
  pol.init(rng);
  pol.log_std()[0] = -0.5;
  pol.log_std()[1] = 0.3;

  SUBCASE("log_prob matches the independent-normal formula") {
    for (int i = 0; i < 100; ++i) {
      double mu[2] = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      double a[2] = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      double want = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double s = std::exp(pol.log_std()[j]);
        const double z = (a[j] - mu[j]) / s;
        want += -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * 3.14159265358979323846);
      }
      CHECK(pol.log_prob(mu, a) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("entropy closed form") {
    const double want = 0.5 * 2.0 * (1.0 + std::log(2.0 * 3.14159265358979323846)) - 0.5 + 0.3;
    CHECK(pol.entropy() == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("samples center on the mean with the right spread") {
    double mu[2] = {0.7, -1.1};
    double a[2], sum[2] = {0, 0}, sq[2] = {0, 0};
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      pol.sample(mu, rng, a);
      for (int j = 0; j < 2; ++j) {
        sum[j] += a[j];
        sq[j] += (a[j] - mu[j]) * (a[j] - mu[j]);
      }
    }
    for (int j = 0; j < 2; ++j) {
      const double s = std::exp(pol.log_std()[j]);
      // mean standard error is s/sqrt(n) ~ 0.01; allow a generous multiple
      CHECK(std::abs(sum[j] / n - mu[j]) < 0.05 * s);
      CHECK(std::sqrt(sq[j] / n) == doctest::Approx(s).epsilon(0.05));
    }
  }
  SUBCASE("log-std clamps into its band") {
    pol.log_std()[0] = -10.0;
    pol.log_std()[1] = 10.0;
    pol.clamp_log_std();
    CHECK(pol.log_std()[0] == GaussianPolicy::kLogStdMin);
    CHECK(pol.log_std()[1] == GaussianPolicy::kLogStdMax);
  }
}

TEST_CASE("surrogate gradients match finite differences") {
  Rng rng(94);
  GaussianPolicy pol({3, 8, 2});
  pol.init(rng);
  Mlp val({3, 6, 1}, Act::elu);
  val.init(rng);
  PpoConfig cfg;
  cfg.entropy_coef = 0.01;
  PpoTrainer tr(std::move(pol), std::move(val), cfg);

  auto batch = random_batch(rng, tr.policy(), 6, 0.05);
  std::vector<std::size_t> idx(6);
  std::iota(idx.begin(), idx.end(), 0);

  std::vector<double> net_grad(tr.policy().net().n_params(), 0.0);
  std::vector<double> ls_grad(2, 0.0);
  double kl = 0.0;
  tr.policy_loss(batch, batch.advantages.data(), idx, net_grad.data(), ls_grad.data(), &kl);

  auto loss_now = [&]() {
    std::vector<double> g(tr.policy().net().n_params(), 0.0);
    std::vector<double> gl(2, 0.0);
    return tr.policy_loss(batch, batch.advantages.data(), idx, g.data(), gl.data(), nullptr);
  };
  const double eps = 1e-5;
  for (std::size_t p = 0; p < tr.policy().net().n_params(); ++p) {
    double* theta = tr.policy().net().params();
    const double save = theta[p];
    theta[p] = save + eps;
    const double lp = loss_now();
    theta[p] = save - eps;
    const double lm = loss_now();
    theta[p] = save;
    CHECK(net_grad[p] == doctest::Approx((lp - lm) / (2.0 * eps)).epsilon(1e-4).scale(1.0));
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const double save = tr.policy().log_std()[j];
    tr.policy().log_std()[j] = save + eps;
    const double lp = loss_now();
    tr.policy().log_std()[j] = save - eps;
    const double lm = loss_now();
    tr.policy().log_std()[j] = save;
    CHECK(ls_grad[j] == doctest::Approx((lp - lm) / (2.0 * eps)).epsilon(1e-4).scale(1.0));
  }

  std::vector<double> vgrad(tr.value().n_params(), 0.0);
  tr.value_loss(batch, idx, vgrad.data());
  auto vloss_now = [&]() {
    std::vector<double> g(tr.value().n_params(), 0.0);
    return tr.value_loss(batch, idx, g.data());
  };
  for (std::size_t p = 0; p < tr.value().n_params(); ++p) {
    double* theta = tr.value().params();
    const double save = theta[p];
    theta[p] = save + eps;
    const double lp = vloss_now();
    theta[p] = save - eps;
    const double lm = vloss_now();
    theta[p] = save;
    CHECK(vgrad[p] == doctest::Approx((lp - lm) / (2.0 * eps)).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("ratios past the clip edge stop contributing gradient on the favorable side") {
  Rng rng(95);
  GaussianPolicy pol({2, 4, 1});
  pol.init(rng);
  Mlp val({2, 4, 1}, Act::elu);
  val.init(rng);
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  PpoTrainer tr(std::move(pol), std::move(val), cfg);

  auto batch = random_batch(rng, tr.policy(), 1, 0.0);
  batch.old_logp[0] -= 0.5;  // current/old ratio = e^{0.5} > 1 + clip
  std::vector<std::size_t> idx = {0};
  std::vector<double> g(tr.policy().net().n_params(), 0.0), gl(1, 0.0);

  double adv_pos = 1.0;
  tr.policy_loss(batch, &adv_pos, idx, g.data(), gl.data(), nullptr);
  for (double x : g) CHECK(x == 0.0);
  CHECK(gl[0] == 0.0);

  double adv_neg = -1.0;
  std::fill(g.begin(), g.end(), 0.0);
  tr.policy_loss(batch, &adv_neg, idx, g.data(), gl.data(), nullptr);
  double norm = 0.0;
  for (double x : g) norm += x * x;
  CHECK(norm > 0.0);
}

TEST_CASE("uniform zero advantages leave the policy still and raise the lr") {
  Rng rng(96);
  GaussianPolicy pol({3, 6, 2});
  pol.init(rng);
  Mlp val({3, 6, 1}, Act::elu);
  val.init(rng);
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.lr = 1e-3;
  PpoTrainer tr(std::move(pol), std::move(val), cfg);

  auto batch = random_batch(rng, tr.policy(), 32, 0.0);
  for (auto& a : batch.advantages) a = 0.0;
  for (auto& r : batch.returns) r = 1.0;

  std::vector<double> pol_before(tr.policy().net().params(),
                                 tr.policy().net().params() + tr.policy().net().n_params());
  std::vector<double> val_before(tr.value().params(),
                                 tr.value().params() + tr.value().n_params());

  auto st = tr.update(batch, rng);
  CHECK(!st.aborted);
  CHECK(std::abs(st.kl) < 1e-10);
  CHECK(st.lr == doctest::Approx(1.5e-3).epsilon(1e-12));
  CHECK(tr.lr() == st.lr);
  for (std::size_t p = 0; p < pol_before.size(); ++p)
    CHECK(tr.policy().net().params()[p] == pol_before[p]);
  bool val_moved = false;
  for (std::size_t p = 0; p < val_before.size() && !val_moved; ++p)
    val_moved = tr.value().params()[p] != val_before[p];
  CHECK(val_moved);
}

TEST_CASE("learning rate stays inside its clamp band") {
  Rng rng(97);
  GaussianPolicy pol({2, 4, 1});
  pol.init(rng);
  Mlp val({2, 4, 1}, Act::elu);
  val.init(rng);
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.lr = 9e-3;  // two no-op updates would overshoot lr_max without the clamp
  PpoTrainer tr(std::move(pol), std::move(val), cfg);

  auto batch = random_batch(rng, tr.policy(), 16, 0.0);
  for (auto& a : batch.advantages) a = 0.0;
  tr.update(batch, rng);
  CHECK(tr.lr() == cfg.lr_max);
  tr.update(batch, rng);
  CHECK(tr.lr() == cfg.lr_max);
}

TEST_CASE("strong entropy pressure inflates the exploration noise") {
  Rng rng(98);
  GaussianPolicy pol({2, 6, 2});
  pol.init(rng);
  Mlp val({2, 6, 1}, Act::elu);
  val.init(rng);
  PpoConfig cfg;
  cfg.entropy_coef = 10.0;
  // keep the kl controller out of the way: widening the noise registers as
  // divergence and would grind the lr down to its floor
  cfg.kl_target = 10.0;
  PpoTrainer tr(std::move(pol), std::move(val), cfg);

  auto batch = random_batch(rng, tr.policy(), 64, 0.0);
  for (auto& a : batch.advantages) a = 0.0;
  for (int i = 0; i < 30; ++i) tr.update(batch, rng);
  for (double ls : tr.policy().log_std()) {
    CHECK(ls > 0.5);
    CHECK(ls <= GaussianPolicy::kLogStdMax + 1e-12);
  }
}

TEST_CASE("non-finite inputs abort the update and restore the nets") {
  Rng rng(99);
  GaussianPolicy pol({2, 4, 1});
  pol.init(rng);
  Mlp val({2, 4, 1}, Act::elu);
  val.init(rng);
  PpoTrainer tr(std::move(pol), std::move(val), PpoConfig{});

  auto batch = random_batch(rng, tr.policy(), 8, 0.0);
  batch.returns[3] = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> before(tr.policy().net().params(),
                             tr.policy().net().params() + tr.policy().net().n_params());
  std::vector<double> vbefore(tr.value().params(), tr.value().params() + tr.value().n_params());

  auto st = tr.update(batch, rng);
  CHECK(st.aborted);
  for (std::size_t p = 0; p < before.size(); ++p)
    CHECK(tr.policy().net().params()[p] == before[p]);
  for (std::size_t p = 0; p < vbefore.size(); ++p) CHECK(tr.value().params()[p] == vbefore[p]);
}

TEST_CASE("end-to-end training loop: metrics shape and determinism") {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.dataset = "ppo_smoke_ds";
  cfg.out_dir = "ppo_smoke_run";
  cfg.n_traj = 4;
  cfg.traj_len = 40;
  cfg.settle_steps = 10;
  cfg.n_envs = 8;
  cfg.iterations = 12;
  cfg.checkpoint_every = 6;
  auto rep = generate_datasets(cfg);
  CHECK(rep.rows == 6 * 4 * 40);
  CHECK(rep.imit_clips == 6 * 4 * (40 - cfg.hI + 1));
  CHECK(rep.skill_clips == 6 * 4 * (40 - cfg.hS + 1));
  CHECK(rep.eval_clips == rep.skill_clips);
  CHECK(rep.skipped_trajectories == 0);

  auto read = [](const std::string& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };

  {
    Trainer t(cfg);
    t.train();
  }
  const std::string a = read("ppo_smoke_run/metrics.csv");

  std::size_t lines = 0;
  for (char c : a) lines += c == '\n';
  CHECK(lines == 1 + cfg.iterations);
  CHECK(a.rfind("iter,lr,kl,", 0) == 0);

  {
    Trainer t(cfg);
    t.train();
  }
  CHECK(read("ppo_smoke_run/metrics.csv") == a);  // bit-identical rerun

  RunConfig other = cfg;
  other.seed = 4;
  {
    Trainer t(other);
    t.train();
  }
  CHECK(read("ppo_smoke_run/metrics.csv") != a);

  // checkpoints for both scheduled iterations exist and load
  std::vector<double> extra;
  Mlp policy_net = load_net("ppo_smoke_run/ckpt/6/policy.bin", &extra);
  CHECK(policy_net.in_dim() == policy_obs_dim(cfg));
  CHECK(extra.size() == kJoints);
  Mlp final_net = load_net("ppo_smoke_run/ckpt/12/policy.bin");
  CHECK(final_net.out_dim() == kJoints);
}

TEST_CASE("deterministic evaluation rollouts") {
  RunConfig cfg;
  cfg.Nz = 3;
  cfg.eval_len = 30;
  cfg.eval_warmup = 20;
  Rng rng(100);
  GaussianPolicy pol(policy_sizes(cfg, kJoints));
  pol.init(rng);

  auto r1 = eval_rollout(pol, cfg, 1, 0.55);
  auto r2 = eval_rollout(pol, cfg, 1, 0.55);
  CHECK(r1.features.size() == cfg.eval_len * kFeatDim);
  CHECK(r1.features == r2.features);
  CHECK(r1.mean_task_reward == r2.mean_task_reward);
  CHECK(r1.mean_task_reward > 0.0);
  CHECK(r1.mean_task_reward <= 1.0);

  auto r3 = eval_rollout(pol, cfg, 2, 0.55);
  CHECK(r1.features != r3.features);  // conditioning latent reaches the policy input
}
