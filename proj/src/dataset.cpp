#include "cassi/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cassi {

const std::vector<FeatureEntry>& feature_layout() {
  static const std::vector<FeatureEntry> layout{
      {"v_x", 1}, {"v_y", 1}, {"omega", 1}, {"h", 1}, {"q", 4}, {"qdot", 4}};
  return layout;
}

std::size_t feature_dim() {
  std::size_t d = 0;
  for (const auto& e : feature_layout()) d += e.dim;
  return d;
}

std::vector<RecordedTrajectory> record_experts(const std::vector<ExpertGait>& gaits,
                                               const WalkerConfig& wcfg,
                                               const RecordConfig& rcfg) {
  if (rcfg.n_traj_per_gait < 1) throw std::invalid_argument("record_experts: n_traj_per_gait < 1");
  std::vector<RecordedTrajectory> out;
  out.reserve(gaits.size() * rcfg.n_traj_per_gait);
  Rng rng(rcfg.seed);
  for (const auto& g : gaits) {
    for (std::size_t k = 0; k < rcfg.n_traj_per_gait; ++k) {
      double f = g.freq_hz, A = g.amplitude, traction = 1.0;
      if (rcfg.randomize) {
        f = g.freq_hz * (1.0 + rcfg.f_jitter * (2.0 * rng.uniform() - 1.0));
        double g0, g1, ph;
        pd_gain_phase(wcfg, g.freq_hz, g0, ph);
        pd_gain_phase(wcfg, f, g1, ph);
        A = g.amplitude * (1.0 + g.amp_jitter * (2.0 * rng.uniform() - 1.0)) * g0 / g1;
        A = std::min(A, 1.15 - std::abs(g.bias));
        traction = 1.0 + rng.uniform(wcfg.traction_lo, wcfg.traction_hi);
      }
      WalkerState s = gait_steady_state(g, wcfg, A, f);
      s.t = 0.0;
      ExpertGait gj = g;
      gj.amplitude = A;
      gj.freq_hz = f;
      RecordedTrajectory traj;
      traj.label = g.skill_label;
      traj.len = rcfg.traj_len;
      traj.features.resize(rcfg.traj_len * kFeatDim);
      traj.actions.resize(rcfg.traj_len * kJoints);
      try {
        for (std::size_t step = 0; step < rcfg.settle_steps + rcfg.traj_len; ++step) {
          std::array<double, kJoints> a = expert_action(gj, s.t);
          if (rcfg.randomize && rcfg.action_noise > 0.0)
            for (auto& v : a) v += rcfg.action_noise * rng.normal();
          walker_step(s, a, wcfg, traction);
          if (step >= rcfg.settle_steps) {
            const std::size_t r = step - rcfg.settle_steps;
            s.features(wcfg, traj.features.data() + r * kFeatDim);
            for (std::size_t j = 0; j < kJoints; ++j) traj.actions[r * kJoints + j] = s.last_action[j];
          }
        }
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("record_experts: gait '") + g.name +
                                 "' diverged: " + e.what());
      }
      out.push_back(std::move(traj));
    }
  }
  return out;
}

void dump_trajectory_csv(const std::string& path, const RecordedTrajectory& traj,
                         const WalkerConfig& wcfg) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "t,v_x,v_y,omega,h,q1,q2,q3,q4,qd1,qd2,qd3,qd4,a1,a2,a3,a4\n";
  char buf[64];
  for (std::size_t r = 0; r < traj.len; ++r) {
    std::snprintf(buf, sizeof buf, "%.6f", (r + 1) * wcfg.dt);
    f << buf;
    for (std::size_t c = 0; c < kFeatDim; ++c) {
      std::snprintf(buf, sizeof buf, ",%.9g", traj.features[r * kFeatDim + c]);
      f << buf;
    }
    for (std::size_t c = 0; c < kJoints; ++c) {
      std::snprintf(buf, sizeof buf, ",%.9g", traj.actions[r * kJoints + c]);
      f << buf;
    }
    f << "\n";
  }
}

ReferenceDataset slice_clips(const std::vector<RecordedTrajectory>& trajs, std::size_t horizon,
                             std::size_t stride, std::size_t* skipped) {
  if (horizon < 1 || stride < 1) throw std::invalid_argument("slice_clips: horizon/stride >= 1");
  const std::size_t d = feature_dim();
  ReferenceDataset ds(horizon, d);
  std::size_t skip = 0;
  for (const auto& tr : trajs) {
    if (tr.len < horizon) {
      ++skip;
      continue;
    }
    for (std::size_t s = 0; s + horizon <= tr.len; s += stride) {
      for (std::size_t r = 0; r < horizon; ++r)
        for (std::size_t c = 0; c < d; ++c)
          ds.data_.push_back(static_cast<float>(tr.features[(s + r) * d + c]));
      ds.labels_.push_back(static_cast<std::int8_t>(tr.label));
      ++ds.n_;
    }
  }
  if (skipped) *skipped = skip;
  return ds;
}

void ReferenceDataset::normalize() {
  if (n_ == 0) throw std::runtime_error("normalize: empty dataset");
  const std::size_t dim = clip_dim();
  mu_.assign(dim, 0.0);
  sigma_.assign(dim, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const float* c = clip(i);
    for (std::size_t k = 0; k < dim; ++k) mu_[k] += c[k];
  }
  for (std::size_t k = 0; k < dim; ++k) mu_[k] /= static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const float* c = clip(i);
    for (std::size_t k = 0; k < dim; ++k) {
      const double dv = c[k] - mu_[k];
      sigma_[k] += dv * dv;
    }
  }
  sigma_guards_ = 0;
  for (std::size_t k = 0; k < dim; ++k) {
    sigma_[k] = std::sqrt(sigma_[k] / static_cast<double>(n_));
    if (sigma_[k] == 0.0) ++sigma_guards_;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    float* c = data_.data() + i * dim;
    for (std::size_t k = 0; k < dim; ++k)
      c[k] = static_cast<float>((c[k] - mu_[k]) / (sigma_[k] + 1e-8));
  }
  normalized_ = true;
}

void ReferenceDataset::normalize_window(const double* x, double* out) const {
  if (!normalized_) throw std::runtime_error("normalize_window: stats not frozen");
  const std::size_t dim = clip_dim();
  for (std::size_t k = 0; k < dim; ++k) out[k] = (x[k] - mu_[k]) / (sigma_[k] + 1e-8);
}

void ReferenceDataset::sample(std::size_t count, Rng& rng, std::vector<double>& out) const {
  const std::size_t dim = clip_dim();
  out.resize(count * dim);
  for (std::size_t i = 0; i < count; ++i) {
    const float* c = clip(rng.index(n_));
    for (std::size_t k = 0; k < dim; ++k) out[i * dim + k] = c[k];
  }
}

std::size_t ReferenceDataset::n_labels() const {
  int hi = -1;
  for (auto l : labels_)
    if (l > hi) hi = l;
  return static_cast<std::size_t>(hi + 1);
}

std::vector<std::size_t> ReferenceDataset::label_counts() const {
  std::vector<std::size_t> counts(n_labels(), 0);
  for (auto l : labels_)
    if (l >= 0) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

namespace {

void write_stat_row(std::ofstream& f, const std::vector<double>& v, std::size_t dim,
                    double fallback) {
  char buf[40];
  for (std::size_t i = 0; i < dim; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v.empty() ? fallback : v[i]);
    f << (i ? " " : "") << buf;
  }
  f << "\n";
}

std::vector<double> read_stat_row(std::ifstream& f, std::size_t dim) {
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("dataset missing stat row");
  std::vector<double> v(dim);
  const char* p = line.c_str();
  char* end = nullptr;
  for (std::size_t i = 0; i < dim; ++i, p = end) {
    v[i] = std::strtod(p, &end);
    if (end == p) throw std::runtime_error("short stat row in dataset");
  }
  return v;
}

}  // namespace

void ReferenceDataset::save(const std::string& path, bool with_labels) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "CASSI-DS v1 D=" << step_dim_ << " H=" << horizon_ << " N=" << n_ << "\n";
  // Unnormalized datasets persist the identity transform.
  write_stat_row(f, mu_, clip_dim(), 0.0);
  write_stat_row(f, sigma_, clip_dim(), 1.0);
  for (std::size_t i = 0; i < n_; ++i) {
    f.write(reinterpret_cast<const char*>(clip(i)), clip_dim() * sizeof(float));
    std::int8_t lab = with_labels ? labels_[i] : std::int8_t{-1};
    f.write(reinterpret_cast<const char*>(&lab), 1);
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

ReferenceDataset ReferenceDataset::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(f, header);
  std::size_t d = 0, h = 0, n = 0;
  if (std::sscanf(header.c_str(), "CASSI-DS v1 D=%zu H=%zu N=%zu", &d, &h, &n) != 3)
    throw std::runtime_error("bad dataset header: " + header);
  ReferenceDataset ds(h, d);
  ds.n_ = n;
  ds.mu_ = read_stat_row(f, ds.clip_dim());
  ds.sigma_ = read_stat_row(f, ds.clip_dim());
  bool identity = true;
  for (std::size_t i = 0; i < ds.clip_dim(); ++i)
    identity = identity && ds.mu_[i] == 0.0 && ds.sigma_[i] == 1.0;
  ds.normalized_ = !identity;
  if (identity) {
    ds.mu_.clear();
    ds.sigma_.clear();
  }
  ds.data_.resize(n * h * d);
  ds.labels_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(ds.data_.data() + i * h * d), h * d * sizeof(float));
    f.read(reinterpret_cast<char*>(&ds.labels_[i]), 1);
  }
  if (!f) throw std::runtime_error("truncated dataset: " + path);
  return ds;
}

}  // namespace cassi
