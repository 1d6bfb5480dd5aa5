#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cassi/rng.hpp"
#include "cassi/walker.hpp"

namespace cassi {

struct FeatureEntry {
  const char* name;
  std::size_t dim;
};

// Planar layout (v_x, v_y, omega, h, q x4, qdot x4) => D = 12.
const std::vector<FeatureEntry>& feature_layout();
std::size_t feature_dim();

struct RecordedTrajectory {
  std::vector<double> features;  // len x kFeatDim, row-major
  std::vector<double> actions;   // len x kJoints
  int label = -1;
  std::size_t len = 0;
};

struct RecordConfig {
  std::size_t n_traj_per_gait = 200;
  std::size_t traj_len = 120;
  bool randomize = true;
  double f_jitter = 0.03;
  double action_noise = 0.05;
  std::size_t settle_steps = 50;
  std::uint64_t seed = 0;
};

// Scripted experts under domain randomization: per-trajectory traction scale,
// frequency jitter, gain-compensated amplitude jitter, per-step action noise.
std::vector<RecordedTrajectory> record_experts(const std::vector<ExpertGait>& gaits,
                                               const WalkerConfig& wcfg, const RecordConfig& rcfg);

void dump_trajectory_csv(const std::string& path, const RecordedTrajectory& traj,
                         const WalkerConfig& wcfg);

class ReferenceDataset {
 public:
  ReferenceDataset(std::size_t horizon, std::size_t step_dim)
      : horizon_(horizon), step_dim_(step_dim) {}

  std::size_t size() const { return n_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t step_dim() const { return step_dim_; }
  std::size_t clip_dim() const { return horizon_ * step_dim_; }

  const float* clip(std::size_t i) const { return data_.data() + i * clip_dim(); }

  bool normalized() const { return normalized_; }
  const std::vector<double>& mu() const { return mu_; }
  const std::vector<double>& sigma() const { return sigma_; }
  std::size_t sigma_guard_count() const { return sigma_guards_; }

  // standardizes stored clips in place and freezes mu/sigma
  void normalize();
  // (x - mu) / (sigma + 1e-8) using the frozen stats
  void normalize_window(const double* x, double* out) const;

  void sample(std::size_t count, Rng& rng, std::vector<double>& out) const;

  std::size_t n_labels() const;
  std::vector<std::size_t> label_counts() const;

  // with_labels=false writes -1 label bytes (unlabeled export for training).
  void save(const std::string& path, bool with_labels = true) const;
  static ReferenceDataset load(const std::string& path);

  // Only eval-suite constructs one; training code sees no label accessor.
  class PrivilegedView {
   public:
    int label(std::size_t i) const { return ds_->labels_[i]; }
    std::size_t size() const { return ds_->n_; }

   private:
    friend class ReferenceDataset;
    explicit PrivilegedView(const ReferenceDataset* ds) : ds_(ds) {}
    const ReferenceDataset* ds_;
  };
  PrivilegedView eval_view() const { return PrivilegedView(this); }

  friend ReferenceDataset slice_clips(const std::vector<RecordedTrajectory>& trajs,
                                      std::size_t horizon, std::size_t stride,
                                      std::size_t* skipped);

 private:
  std::size_t horizon_, step_dim_;
  std::size_t n_ = 0;
  std::vector<float> data_;
  std::vector<std::int8_t> labels_;
  std::vector<double> mu_, sigma_;
  bool normalized_ = false;
  std::size_t sigma_guards_ = 0;
};

// floor((len-H)/stride)+1 clips per trajectory; shorter trajectories are
// skipped and counted.
ReferenceDataset slice_clips(const std::vector<RecordedTrajectory>& trajs, std::size_t horizon,
                             std::size_t stride, std::size_t* skipped = nullptr);

}  // namespace cassi
