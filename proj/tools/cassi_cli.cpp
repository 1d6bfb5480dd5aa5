// Command-line front end: gen-dataset | train | eval | cluster. Flags mirror
// RunConfig field names; merge order is defaults < --config file < flags.
// Exit codes: 0 ok, 2 config error, 3 numeric divergence.
#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cassi/checkpoint.hpp"
#include "cassi/config.hpp"
#include "cassi/dataset.hpp"
#include "cassi/eval.hpp"
#include "cassi/runner.hpp"
#include "cassi/walker.hpp"

namespace {

using namespace cassi;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> names;
  std::map<std::string, std::string> values;  // stable storage for CLI11 refs
};

void add_config_flags(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "key = value file applied before flags");
  RunConfig defaults;
  for (const auto& f : defaults.fields()) args.names.push_back(f.name);
  for (const auto& name : args.names)
    cmd->add_option("--" + name, args.values[name], "");
}

RunConfig resolve(CLI::App* cmd, ConfigArgs& args) {
  RunConfig cfg;
  if (!args.file.empty()) cfg.load_file(args.file);
  for (const auto& name : args.names)
    if (cmd->count("--" + name) > 0) cfg.set(name, args.values[name]);
  return cfg;
}

int cmd_gen(const RunConfig& cfg) {
  const GenReport r = generate_datasets(cfg);
  const auto paths = DatasetPaths::from_prefix(cfg.dataset);
  std::printf("recorded %zu feature rows (%zu trajectories skipped, %zu sigma guards)\n", r.rows,
              r.skipped_trajectories, r.sigma_guards);
  std::printf("%s: %zu clips\n%s: %zu clips\n%s: %zu clips (labeled)\n", paths.imit.c_str(),
              r.imit_clips, paths.skill.c_str(), r.skill_clips, paths.eval_labeled.c_str(),
              r.eval_clips);
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  Trainer t(cfg);
  t.train();
  std::printf("done: %zu iterations, metrics at %s/metrics.csv\n", t.iter(), cfg.out_dir.c_str());
  return 0;
}

OracleClassifier obtain_oracle(const RunConfig& cfg, const std::string& override_path,
                               const ReferenceDataset& eval_ds) {
  const std::string path =
      override_path.empty() ? cfg.out_dir + "/oracle.bin" : override_path;
  if (std::filesystem::exists(path)) {
    OracleClassifier o = OracleClassifier::load(path);
    if (o.input_dim() != eval_ds.clip_dim())
      throw std::runtime_error("cached oracle dim mismatch: " + path);
    std::printf("oracle: loaded %s\n", path.c_str());
    return o;
  }
  Rng rng(cfg.seed * 1000003ull + 800000ull);
  OracleClassifier o(oracle_config(cfg), rng);
  const OracleTrainInfo info = o.train(eval_ds, rng);
  std::printf("oracle: trained %zu epochs, held-out accuracy %.4f (%zu/%zu clips)\n",
              info.epochs_run, info.held_out_accuracy, info.train_count, info.held_out_count);
  std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                          ? "."
                                          : std::filesystem::path(path).parent_path().string());
  o.save(path);
  return o;
}

GaussianPolicy load_policy(const std::string& dir) {
  std::vector<double> log_std;
  Mlp net = load_net(dir + "/policy.bin", &log_std);
  GaussianPolicy pol(net.sizes());
  std::copy_n(net.params(), net.n_params(), pol.net().params());
  if (log_std.size() != pol.act_dim())
    throw std::runtime_error("policy checkpoint: bad log_std length");
  pol.log_std() = log_std;
  pol.clamp_log_std();
  return pol;
}

SkillDiscriminator load_skill_disc(const RunConfig& cfg, const std::string& dir) {
  Rng rng(0);
  SkillDiscriminator skill(skill_config(cfg), rng);
  for (std::size_t m = 0; m < skill.ensemble_size(); ++m) {
    Mlp net = load_net(dir + "/skill_" + std::to_string(m) + ".bin");
    if (net.sizes() != skill.member(m).sizes())
      throw std::runtime_error("skill checkpoint does not match config sizes");
    std::copy_n(net.params(), net.n_params(), skill.member(m).params());
  }
  return skill;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt, const std::string& oracle_path) {
  const auto paths = DatasetPaths::from_prefix(cfg.dataset);
  ReferenceDataset eval_ds = ReferenceDataset::load(paths.eval_labeled);
  ReferenceDataset skill_ds = ReferenceDataset::load(paths.skill);
  if (!eval_ds.normalized()) eval_ds.normalize();
  if (!skill_ds.normalized()) skill_ds.normalize();

  std::filesystem::create_directories(cfg.out_dir);
  const OracleClassifier oracle = obtain_oracle(cfg, oracle_path, eval_ds);
  const GaussianPolicy policy = load_policy(ckpt);
  const SkillDiscriminator skill = load_skill_disc(cfg, ckpt);

  const SkillReport rep = evaluate_policy(policy, skill, oracle, eval_ds, skill_ds, cfg);
  write_skill_report(cfg.out_dir + "/report.jsonl", cfg.out_dir + "/matrix.csv", rep);
  std::printf("diversity %.4f (ln %zu = %.4f)  fidelity %.4f  latent_error %.6f\n", rep.diversity,
              rep.n_c, std::log(static_cast<double>(rep.n_c)), rep.fidelity, rep.latent_error);
  for (std::size_t z = 0; z < rep.n_z; ++z)
    std::printf("z=%zu  class=%d  max_prob=%.4f  r_T=%.4f\n", z, rep.assignment[z],
                *std::max_element(rep.matrix.begin() + z * rep.n_c,
                                  rep.matrix.begin() + (z + 1) * rep.n_c),
                rep.task_reward[z]);
  std::printf("report: %s/report.jsonl\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_cluster(const RunConfig& cfg, std::vector<std::size_t> horizons) {
  if (horizons.empty()) horizons.push_back(cfg.cluster_horizon);
  const auto paths = DatasetPaths::from_prefix(cfg.dataset);
  std::filesystem::create_directories(cfg.out_dir);

  for (const std::size_t h : horizons) {
    std::vector<double> rows;
    std::vector<int> labels;
    std::size_t dim = 0;
    // The labeled export already holds horizon hC; other horizons re-derive
    // the same recorded corpus deterministically from the config seed.
    if (h == cfg.hC && std::filesystem::exists(paths.eval_labeled)) {
      ReferenceDataset ds = ReferenceDataset::load(paths.eval_labeled);
      if (!ds.normalized()) ds.normalize();
      labeled_matrix(ds, rows, labels);
      dim = ds.clip_dim();
    } else {
      const auto trajs = record_experts(default_gaits(), walker_config(cfg), record_config(cfg));
      ReferenceDataset ds = slice_clips(trajs, h, 1);
      if (ds.size() == 0) throw std::runtime_error("horizon longer than every trajectory");
      ds.normalize();
      labeled_matrix(ds, rows, labels);
      dim = ds.clip_dim();
    }

    ClusterConfig cc;
    cc.n_clusters = default_gaits().size();
    cc.restarts = cfg.kmeans_restarts;
    cc.max_points = cfg.cluster_subsample;
    std::vector<std::size_t> ks = cfg.cluster_sweep_k ? std::vector<std::size_t>{5, 10, 15, 30}
                                                      : std::vector<std::size_t>{cfg.cluster_k};
    ClusterReport best;
    best.error = 2.0;
    for (const std::size_t k : ks) {
      cc.k_neighbors = k;
      Rng rng(cfg.seed * 1000003ull + 777000ull + h * 37ull + k);
      ClusterReport rep = spectral_cluster(rows, dim, labels, cc, rng);
      std::printf("horizon %zu  k=%zu  error %.6f  (n=%zu%s)\n", h, k, rep.error, rep.n,
                  rep.connected_fix ? ", graph bridged" : "");
      if (rep.error < best.error) best = std::move(rep);
    }
    const std::string csv = cfg.out_dir + "/cluster_h" + std::to_string(h) + ".csv";
    write_cluster_csv(csv, best);
    std::printf("horizon %zu  best k=%zu  error %.6f  assignments: %s\n", h, best.k_neighbors,
                best.error, csv.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative-adversarial skill imitation on a planar walker"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-dataset", "record scripted gaits, write dataset files");
  auto* train = app.add_subcommand("train", "run the full training loop");
  auto* eval = app.add_subcommand("eval", "skill report for a checkpoint");
  auto* cluster = app.add_subcommand("cluster", "spectral-clustering baseline on the dataset");

  ConfigArgs ga, ta, ea, ca;
  add_config_flags(gen, ga);
  add_config_flags(train, ta);
  add_config_flags(eval, ea);
  add_config_flags(cluster, ca);

  std::string ckpt_dir, oracle_path;
  eval->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
  eval->add_option("--oracle", oracle_path, "oracle cache path (default <out_dir>/oracle.bin)");
  std::vector<std::size_t> horizons;
  cluster->add_option("--horizon", horizons, "clip horizon, repeatable for a sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(resolve(gen, ga));
    if (train->parsed()) return cmd_train(resolve(train, ta));
    if (eval->parsed()) return cmd_eval(resolve(eval, ea), ckpt_dir, oracle_path);
    if (cluster->parsed()) return cmd_cluster(resolve(cluster, ca), horizons);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::fprintf(stderr, "error: %s\n", what.c_str());
    if (what.find("diverged") != std::string::npos ||
        what.find("non-finite") != std::string::npos)
      return 3;
    return 1;
  }
  return 0;
}
