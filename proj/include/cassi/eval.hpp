#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "cassi/config.hpp"
#include "cassi/dataset.hpp"
#include "cassi/mlp.hpp"
#include "cassi/optim.hpp"
#include "cassi/ppo.hpp"
#include "cassi/rng.hpp"
#include "cassi/skill_disc.hpp"

namespace cassi {

struct OracleConfig {
  std::size_t input_dim = 96;  // H^C * D
  std::size_t n_classes = 6;
  std::size_t ensemble = 5;
  std::vector<std::size_t> hidden = {512, 256};
  double lr = 1e-5;
  double weight_decay = 5e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  std::size_t per_class = 2000;  // training subsample cap per class
  double stop_accuracy = 0.99;   // early-stop threshold on held-out accuracy
};

struct OracleTrainInfo {
  double held_out_accuracy = 0.0;
  std::size_t epochs_run = 0;
  std::size_t train_count = 0, held_out_count = 0;
};

// Evaluation-only classifier trained on label-revealed reference clips.
// Never sees policy data; frozen once trained.
class OracleClassifier {
 public:
  OracleClassifier(const OracleConfig& cfg, Rng& rng);

  // Per-class subsample, 90/10 train/held-out split, cross-entropy epochs
  // with early stop on held-out accuracy. Throws std::invalid_argument when
  // any class in [0, n_classes) is missing from the labels.
  OracleTrainInfo train(const ReferenceDataset& ds, Rng& rng);

  // mean of member softmaxes; p has n_classes entries (rows for the batch)
  void posterior(const double* clip, double* p) const;
  void posterior_batch(const double* clips, std::size_t n, double* p) const;
  double accuracy(const double* clips, const int* labels, std::size_t n) const;

  std::size_t n_classes() const { return cfg_.n_classes; }
  std::size_t input_dim() const { return cfg_.input_dim; }
  std::size_t ensemble_size() const { return members_.size(); }
  const OracleConfig& config() const { return cfg_; }
  Mlp& member(std::size_t i) { return members_[i]; }

  void save(const std::string& path) const;
  static OracleClassifier load(const std::string& path);

 private:
  OracleClassifier() = default;
  OracleConfig cfg_;
  std::vector<Mlp> members_;
};

OracleConfig oracle_config(const RunConfig& cfg);

// div = H(mean of rows), fid = -mean_z H(row); matrix is n_z x n_c row-major,
// each row a distribution.
void div_fid(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c, double* div,
             double* fid);

// Min-cost assignment on a rows x cols matrix, O(n^3) potentials method.
// Returns per row the assigned column; when rows > cols the unmatched rows
// get -1. Ties break deterministically.
std::vector<int> hungarian_assign(const std::vector<double>& cost, std::size_t rows,
                                  std::size_t cols);

struct AlignResult {
  std::vector<int> assignment;  // z -> class, -1 = unassigned (mixed skill)
  std::size_t n_assigned = 0;
};

// Hungarian maximum-probability matching of latents to oracle classes. With
// surplus latents (n_z > n_c) an assigned latent whose row max stays below
// mixed_threshold is reported unassigned.
AlignResult align_skills(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c,
                         double mixed_threshold = 0.9);

// n_z == n_c, per-row argmaxes all distinct, every row max >= min_prob.
bool full_bijection(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c,
                    double min_prob);

struct SkillReport {
  std::size_t n_z = 0, n_c = 0;
  std::vector<double> matrix;       // n_z x n_c mean oracle posterior
  double diversity = 0.0;           // nats, [0, ln n_c]
  double fidelity = 0.0;            // nats, [-ln n_c, 0]
  std::vector<double> task_reward;  // per-z mean r^T over rollouts
  double latent_error = 0.0;        // skill-disc window misclassification rate
  std::vector<int> assignment;      // from align_skills at the 0.9 threshold
  std::size_t rollouts_per_z = 0;
};

// M deterministic rollouts per latent (commands spread evenly over (0,1)),
// oracle posteriors averaged over sliding H^C windows; latent-consistency
// error from the skill discriminator's per-window argmax vs the conditioning
// z. Oracle and discriminator stay frozen.
SkillReport evaluate_policy(const GaussianPolicy& policy, const SkillDiscriminator& skill,
                            const OracleClassifier& oracle, const ReferenceDataset& eval_stats,
                            const ReferenceDataset& skill_stats, const RunConfig& cfg);

// Metric ceiling: the scripted experts stand in for the policy, each class
// acting as its own latent. task_reward stays empty and latent_error 0.
SkillReport expert_calibration(const OracleClassifier& oracle, const ReferenceDataset& eval_ds,
                               std::size_t per_class, Rng& rng);

struct ClusterConfig {
  std::size_t n_clusters = 6;
  std::size_t k_neighbors = 15;
  std::size_t restarts = 20;
  std::size_t max_points = 2400;  // subsample cap, 0 = keep everything
};

struct ClusterReport {
  std::size_t n = 0, k_neighbors = 0, n_clusters = 0;
  double error = 0.0;          // Hungarian-minimized misassignment fraction
  bool connected_fix = false;  // kNN graph needed bridging edges
  std::size_t components = 1;  // before bridging
  std::vector<int> predicted;  // cluster ids mapped into label space
  std::vector<int> truth;
};

// Binary OR-symmetrized kNN graph, normalized Laplacian, bottom n_clusters
// eigenvectors row-normalized, k-means++ with restarts; error is the
// Hungarian-minimal confusion against the hidden labels.
ClusterReport spectral_cluster(const std::vector<double>& rows, std::size_t dim,
                               const std::vector<int>& labels, const ClusterConfig& ccfg,
                               Rng& rng);

// Clips densified with their labels revealed (eval-suite privilege).
void labeled_matrix(const ReferenceDataset& ds, std::vector<double>& rows,
                    std::vector<int>& labels);

// JSON-lines summary + per-latent rows; CSV of the n_z x n_c matrix.
void write_skill_report(const std::string& json_path, const std::string& csv_path,
                        const SkillReport& rep);
// clip_id, predicted, true
void write_cluster_csv(const std::string& path, const ClusterReport& rep);

}  // namespace cassi
