#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "cassi/rng.hpp"
#include "cassi/skill_disc.hpp"

using namespace cassi;

namespace {

SkillDiscConfig tiny_cfg(std::size_t dim, std::size_t nz, std::size_t ensemble,
                         std::vector<std::size_t> hidden) {
  SkillDiscConfig cfg;
  cfg.input_dim = dim;
  cfg.n_z = nz;
  cfg.ensemble = ensemble;
  cfg.hidden = std::move(hidden);
  return cfg;
}

void zero_params(Mlp& net) { std::memset(net.params(), 0, net.n_params() * sizeof(double)); }

// linear member emitting (almost) one-hot class c via a huge logit bias
void rig_one_hot(Mlp& net, std::size_t c) {
  zero_params(net);
  net.b(net.n_layers() - 1)[c] = 50.0;
}

}  // namespace

TEST_CASE("entropy closed forms") {
  const double uni4[] = {0.25, 0.25, 0.25, 0.25};
  CHECK(entropy(uni4, 4) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const double onehot[] = {0.0, 1.0, 0.0};
  CHECK(entropy(onehot, 3) == 0.0);
  const double half[] = {0.5, 0.5};
  CHECK(entropy(half, 2) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const double skew[] = {0.9, 0.1};
  CHECK(entropy(skew, 2) ==
        doctest::Approx(-0.9 * std::log(0.9) - 0.1 * std::log(0.1)).epsilon(1e-14));
}

TEST_CASE("blank members give a uniform posterior and exactly-centered rewards") {
  Rng rng(81);
  SkillDiscriminator disc(tiny_cfg(6, 6, 3, {4}), rng);
  for (std::size_t m = 0; m < disc.ensemble_size(); ++m) zero_params(disc.member(m));

  std::vector<double> clip(6, 0.7);
  std::vector<double> mean(6), members(3 * 6);
  disc.posterior(clip.data(), mean.data(), members.data());
  for (double p : mean) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  for (double p : members) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  // uniform posterior: the skill reward sits within the guard's reach of zero
  for (std::size_t z = 0; z < 6; ++z) CHECK(std::abs(disc.skill_reward(clip.data(), z)) < 1e-7);
  // identical members: no disagreement, no bonus (beyond rounding)
  CHECK(std::abs(disc.disdain_reward(clip.data())) < 1e-12);
}

TEST_CASE("confident posterior reaps the full log-latent-count reward") {
  Rng rng(82);
  SkillDiscriminator disc(tiny_cfg(4, 6, 1, {}), rng);
  rig_one_hot(disc.member(0), 2);

  std::vector<double> clip(4, 0.0);
  CHECK(disc.skill_reward(clip.data(), 2) == doctest::Approx(std::log(6.0)).epsilon(1e-6));
  // a wrong latent bottoms out at the guard floor
  CHECK(disc.skill_reward(clip.data(), 0) ==
        doctest::Approx(std::log(1e-8) + std::log(6.0)).epsilon(1e-4));
}

TEST_CASE("half-confidence posterior entry costs exactly log 2") {
  // two members over two latents: one certain of class 0, one undecided
  // mean posterior = (0.75, 0.25), so entry 1 sits at 1/(2 n_z)
  Rng rng(83);
  SkillDiscriminator disc(tiny_cfg(4, 2, 2, {}), rng);
  rig_one_hot(disc.member(0), 0);
  zero_params(disc.member(1));

  std::vector<double> clip(4, 0.3);
  std::vector<double> mean(2);
  disc.posterior(clip.data(), mean.data());
  CHECK(mean[0] == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(mean[1] == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(disc.skill_reward(clip.data(), 1) == doctest::Approx(-std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("disagreeing one-hot members earn the maximal bonus") {
  Rng rng(84);
  SkillDiscriminator disc(tiny_cfg(4, 2, 2, {}), rng);
  rig_one_hot(disc.member(0), 0);
  rig_one_hot(disc.member(1), 1);

  std::vector<double> clip(4, -0.2);
  CHECK(disc.disdain_reward(clip.data()) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("reward bounds hold for arbitrary networks") {
  Rng rng(85);
  for (int trial = 0; trial < 50; ++trial) {
    SkillDiscriminator disc(tiny_cfg(5, 4, 3, {8}), rng);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> clip(5);
      for (auto& x : clip) x = rng.uniform(-3.0, 3.0);
      // mean posterior entries never top 1: reward caps at log n_z
      for (std::size_t z = 0; z < 4; ++z)
        CHECK(disc.skill_reward(clip.data(), z) <= std::log(4.0) + 1e-9);
      // ensemble disagreement is Jensen-nonnegative
      CHECK(disc.disdain_reward(clip.data()) >= -1e-9);
    }
  }
}

TEST_CASE("batch rewards match the per-clip path") {
  Rng rng(86);
  SkillDiscriminator disc(tiny_cfg(7, 5, 4, {6}), rng);
  const std::size_t n = 12;
  std::vector<double> clips(n * 7);
  std::vector<int> latents(n);
  for (auto& x : clips) x = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) latents[i] = int(i % 5);

  std::vector<double> rs(n), rd(n);
  disc.rewards_batch(clips.data(), n, latents.data(), rs.data(), rd.data());
  std::vector<double> mean_batch(n * 5);
  disc.posterior_batch(clips.data(), n, mean_batch.data());

  for (std::size_t i = 0; i < n; ++i) {
    double s, d;
    disc.rewards(clips.data() + i * 7, std::size_t(latents[i]), &s, &d);
    CHECK(rs[i] == doctest::Approx(s).epsilon(1e-12));
    CHECK(rd[i] == doctest::Approx(d).epsilon(1e-12));

    std::vector<double> mean(5);
    disc.posterior(clips.data() + i * 7, mean.data());
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(mean_batch[i * 5 + c] == doctest::Approx(mean[c]).epsilon(1e-12));
    double sum = 0.0;
    for (std::size_t c = 0; c < 5; ++c) sum += mean[c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("latent bounds are enforced") {
  Rng rng(87);
  SkillDiscriminator disc(tiny_cfg(3, 4, 2, {}), rng);
  std::vector<double> clip(3, 0.0);
  CHECK_THROWS_AS(disc.skill_reward(clip.data(), 4), std::invalid_argument);
  int bad = -1;
  double rs, rd;
  CHECK_THROWS_AS(disc.rewards_batch(clip.data(), 1, &bad, &rs, &rd), std::invalid_argument);
}

TEST_CASE("training separates labeled clusters and stays at chance on shuffled labels") {
  Rng rng(88);
  const std::size_t dim = 8, nz = 3, n = 600;
  std::vector<double> centers = {2.0, -2.0, 0.0};
  std::vector<double> windows(n * dim);
  std::vector<int> latents(n);
  for (std::size_t i = 0; i < n; ++i) {
    latents[i] = int(i % nz);
    for (std::size_t j = 0; j < dim; ++j)
      windows[i * dim + j] = centers[latents[i]] * (j % 2 ? 1.0 : -1.0) + 0.3 * rng.normal();
  }

  SkillDiscConfig cfg = tiny_cfg(dim, nz, 3, {16});
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.0;
  cfg.mini_batches = 18;  // n/bs caps this at 600/32 = 18
  SkillDiscriminator disc(cfg, rng);

  SkillDiscStats st;
  for (int round = 0; round < 15; ++round) st = disc.update(windows, latents, rng);
  CHECK(st.steps == 18);
  CHECK(st.accuracy > 0.95);
  CHECK(st.ce_loss < 0.3);

  // ensemble members are genuinely distinct after bagged training
  bool differ = false;
  for (std::size_t p = 0; p < disc.member(0).n_params() && !differ; ++p)
    differ = disc.member(0).params()[p] != disc.member(1).params()[p];
  CHECK(differ);

  // label shuffle destroys the signal
  SkillDiscriminator shuffled(cfg, rng);
  std::vector<int> noise(latents);
  for (std::size_t i = 0; i < n; ++i) noise[i] = int(rng.index(nz));
  SkillDiscStats sn;
  for (int round = 0; round < 15; ++round) sn = shuffled.update(windows, noise, rng);
  CHECK(sn.accuracy < 0.55);
}

TEST_CASE("empty and malformed buffers") {
  Rng rng(89);
  SkillDiscriminator disc(tiny_cfg(4, 3, 2, {}), rng);
  std::vector<double> none;
  std::vector<int> empty;
  auto st = disc.update(none, empty, rng);
  CHECK(st.skipped);

  std::vector<double> ragged(5, 0.0);
  CHECK_THROWS_AS(disc.update(ragged, empty, rng), std::invalid_argument);
  std::vector<double> ok(8, 0.0);
  std::vector<int> wrong_count = {0};
  CHECK_THROWS_AS(disc.update(ok, wrong_count, rng), std::invalid_argument);
}
