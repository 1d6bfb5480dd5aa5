#include "cassi/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "cassi/checkpoint.hpp"
#include "cassi/kernels.hpp"
#include "cassi/runner.hpp"
#include "cassi/walker.hpp"

namespace cassi {

namespace {

void softmax_row(double* p, std::size_t n) {
  double mx = p[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, p[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(p[i] - mx);
    sum += p[i];
  }
  for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

std::size_t argmax_row(const double* p, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

}  // namespace

OracleClassifier::OracleClassifier(const OracleConfig& cfg, Rng& rng) : cfg_(cfg) {
  std::vector<std::size_t> sizes;
  sizes.push_back(cfg_.input_dim);
  sizes.insert(sizes.end(), cfg_.hidden.begin(), cfg_.hidden.end());
  sizes.push_back(cfg_.n_classes);
  for (std::size_t m = 0; m < cfg_.ensemble; ++m) {
    members_.emplace_back(sizes, Act::relu);
    members_.back().init(rng);
  }
}

OracleTrainInfo OracleClassifier::train(const ReferenceDataset& ds, Rng& rng) {
  if (ds.clip_dim() != cfg_.input_dim)
    throw std::invalid_argument("oracle: dataset clip dim mismatch");
  const auto view = ds.eval_view();
  const std::size_t nc = cfg_.n_classes;

  std::vector<std::vector<std::size_t>> per(nc);
  for (std::size_t i = 0; i < view.size(); ++i) {
    const int l = view.label(i);
    if (l < 0) throw std::invalid_argument("oracle: dataset labels are hidden");
    if (l >= static_cast<int>(nc)) throw std::invalid_argument("oracle: label out of range");
    per[static_cast<std::size_t>(l)].push_back(i);
  }
  for (std::size_t c = 0; c < nc; ++c)
    if (per[c].empty()) throw std::invalid_argument("oracle: a class is missing from the labels");

  std::vector<std::size_t> tr, ho;
  for (std::size_t c = 0; c < nc; ++c) {
    auto& idx = per[c];
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
      std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    const std::size_t keep = std::min(cfg_.per_class, idx.size());
    const std::size_t n_tr = std::max<std::size_t>(1, keep * 9 / 10);
    for (std::size_t i = 0; i < keep; ++i) (i < n_tr ? tr : ho).push_back(idx[i]);
  }

  const std::size_t dim = cfg_.input_dim;
  auto densify = [&](const std::vector<std::size_t>& idx, std::vector<double>& X,
                     std::vector<int>& y) {
    X.resize(idx.size() * dim);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* c = ds.clip(idx[i]);
      for (std::size_t j = 0; j < dim; ++j) X[i * dim + j] = c[j];
      y[i] = view.label(idx[i]);
    }
  };
  std::vector<double> Xtr, Xho;
  std::vector<int> ytr, yho;
  densify(tr, Xtr, ytr);
  densify(ho, Xho, yho);

  const std::size_t n_tr = tr.size();
  const std::size_t bs = std::min(cfg_.batch_size, n_tr);
  std::vector<Optimizer> opts;
  for (auto& m : members_)
    opts.emplace_back(Optimizer::Kind::adam, m.n_params(), cfg_.lr, cfg_.weight_decay);

  std::vector<std::size_t> perm(n_tr);
  std::vector<double> Xb(bs * dim), Yb(bs * cfg_.n_classes), grad;
  Mlp::BatchCache cache;
  OracleTrainInfo info;
  info.train_count = n_tr;
  info.held_out_count = ho.size();

  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (std::size_t m = 0; m < members_.size(); ++m) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i + 1 < n_tr; ++i)
        std::swap(perm[i], perm[i + rng.index(n_tr - i)]);
      grad.assign(members_[m].n_params(), 0.0);
      for (std::size_t start = 0; start < n_tr; start += bs) {
        const std::size_t b = std::min(bs, n_tr - start);
        for (std::size_t i = 0; i < b; ++i)
          std::copy_n(Xtr.data() + perm[start + i] * dim, dim, Xb.data() + i * dim);
        members_[m].forward_batch(Xb.data(), b, Yb.data(), &cache);
        for (std::size_t i = 0; i < b; ++i) {
          double* row = Yb.data() + i * cfg_.n_classes;
          softmax_row(row, cfg_.n_classes);
          for (std::size_t c = 0; c < cfg_.n_classes; ++c) row[c] /= static_cast<double>(b);
          row[static_cast<std::size_t>(ytr[perm[start + i]])] -= 1.0 / static_cast<double>(b);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        members_[m].backward_batch(cache, Yb.data(), grad.data());
        opts[m].step(members_[m].params(), grad.data());
      }
    }
    info.epochs_run = epoch + 1;
    info.held_out_accuracy =
        ho.empty() ? accuracy(Xtr.data(), ytr.data(), n_tr) : accuracy(Xho.data(), yho.data(), ho.size());
    if (info.held_out_accuracy >= cfg_.stop_accuracy) break;
  }
  return info;
}

void OracleClassifier::posterior(const double* clip, double* p) const {
  posterior_batch(clip, 1, p);
}

void OracleClassifier::posterior_batch(const double* clips, std::size_t n, double* p) const {
  const std::size_t nc = cfg_.n_classes;
  std::fill(p, p + n * nc, 0.0);
  std::vector<double> logits(n * nc);
  for (const auto& m : members_) {
    m.forward_batch(clips, n, logits.data());
    for (std::size_t i = 0; i < n; ++i) {
      softmax_row(logits.data() + i * nc, nc);
      for (std::size_t c = 0; c < nc; ++c)
        p[i * nc + c] += logits[i * nc + c] / static_cast<double>(members_.size());
    }
  }
}

double OracleClassifier::accuracy(const double* clips, const int* labels, std::size_t n) const {
  if (n == 0) return 0.0;
  std::vector<double> p(n * cfg_.n_classes);
  posterior_batch(clips, n, p.data());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (argmax_row(p.data() + i * cfg_.n_classes, cfg_.n_classes) ==
        static_cast<std::size_t>(labels[i]))
      ++hit;
  return static_cast<double>(hit) / static_cast<double>(n);
}

void OracleClassifier::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "ORACLE " << members_.size() << "\n";
  for (const auto& m : members_) write_net(f, m);
  if (!f) throw std::runtime_error("short write: " + path);
}

OracleClassifier OracleClassifier::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string magic;
  std::size_t count = 0;
  f >> magic >> count;
  f.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  if (magic != "ORACLE" || count == 0) throw std::runtime_error("bad oracle file: " + path);
  OracleClassifier o;
  for (std::size_t i = 0; i < count; ++i) o.members_.push_back(read_net(f));
  const auto& sizes = o.members_.front().sizes();
  o.cfg_.input_dim = sizes.front();
  o.cfg_.n_classes = sizes.back();
  o.cfg_.hidden.assign(sizes.begin() + 1, sizes.end() - 1);
  o.cfg_.ensemble = count;
  return o;
}

OracleConfig oracle_config(const RunConfig& cfg) {
  OracleConfig o;
  o.input_dim = cfg.hC * kFeatDim;
  o.n_classes = default_gaits().size();
  o.hidden = {cfg.oracle_w1, cfg.oracle_w2};
  o.lr = cfg.oracle_lr;
  o.weight_decay = cfg.oracle_wd;
  o.epochs = cfg.oracle_epochs;
  o.batch_size = cfg.oracle_batch;
  o.per_class = cfg.oracle_per_class;
  return o;
}

void div_fid(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c, double* div,
             double* fid) {
  if (matrix.size() != n_z * n_c || n_z == 0) throw std::invalid_argument("div_fid: bad matrix");
  std::vector<double> mean(n_c, 0.0);
  double fsum = 0.0;
  for (std::size_t z = 0; z < n_z; ++z) {
    const double* row = matrix.data() + z * n_c;
    fsum += entropy(row, n_c);
    for (std::size_t c = 0; c < n_c; ++c) mean[c] += row[c] / static_cast<double>(n_z);
  }
  if (div) *div = entropy(mean.data(), n_c);
  if (fid) *fid = -fsum / static_cast<double>(n_z);
}

std::vector<int> hungarian_assign(const std::vector<double>& cost, std::size_t rows,
                                  std::size_t cols) {
  if (cost.size() != rows * cols) throw std::invalid_argument("hungarian: bad cost size");
  std::vector<int> out(rows, -1);
  if (rows == 0 || cols == 0) return out;
  if (rows > cols) {
    std::vector<double> t(cols * rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = cost[r * cols + c];
    const auto inv = hungarian_assign(t, cols, rows);
    for (std::size_t c = 0; c < cols; ++c)
      if (inv[c] >= 0) out[static_cast<std::size_t>(inv[c])] = static_cast<int>(c);
    return out;
  }
  // potentials method over a virtual 0th row/column; p[j] = row matched to j
  const std::size_t n = rows, m = cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = static_cast<int>(i);
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = static_cast<std::size_t>(p[j0]);
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<int>(j0);
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[static_cast<std::size_t>(p[j])] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = static_cast<std::size_t>(way[j0]);
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out[static_cast<std::size_t>(p[j]) - 1] = static_cast<int>(j - 1);
  return out;
}

AlignResult align_skills(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c,
                         double mixed_threshold) {
  if (matrix.size() != n_z * n_c) throw std::invalid_argument("align_skills: bad matrix");
  std::vector<double> cost(matrix.size());
  for (std::size_t i = 0; i < matrix.size(); ++i) cost[i] = -matrix[i];
  AlignResult res;
  res.assignment = hungarian_assign(cost, n_z, n_c);
  if (n_z > n_c) {
    for (std::size_t z = 0; z < n_z; ++z) {
      if (res.assignment[z] < 0) continue;
      const double* row = matrix.data() + z * n_c;
      if (row[argmax_row(row, n_c)] < mixed_threshold) res.assignment[z] = -1;
    }
  }
  for (int a : res.assignment) res.n_assigned += (a >= 0);
  return res;
}

bool full_bijection(const std::vector<double>& matrix, std::size_t n_z, std::size_t n_c,
                    double min_prob) {
  if (n_z != n_c || matrix.size() != n_z * n_c) return false;
  std::vector<char> seen(n_c, 0);
  for (std::size_t z = 0; z < n_z; ++z) {
    const double* row = matrix.data() + z * n_c;
    const std::size_t a = argmax_row(row, n_c);
    if (row[a] < min_prob || seen[a]) return false;
    seen[a] = 1;
  }
  return true;
}

SkillReport evaluate_policy(const GaussianPolicy& policy, const SkillDiscriminator& skill,
                            const OracleClassifier& oracle, const ReferenceDataset& eval_stats,
                            const ReferenceDataset& skill_stats, const RunConfig& cfg) {
  const std::size_t D = kFeatDim;
  const std::size_t hC = eval_stats.horizon(), hS = skill_stats.horizon();
  if (oracle.input_dim() != hC * D) throw std::invalid_argument("evaluate: oracle dim mismatch");
  if (skill.input_dim() != hS * D) throw std::invalid_argument("evaluate: skill dim mismatch");
  if (cfg.eval_len < std::max(hC, hS)) throw std::invalid_argument("evaluate: eval_len too short");

  SkillReport rep;
  rep.n_z = cfg.Nz;
  rep.n_c = oracle.n_classes();
  rep.rollouts_per_z = cfg.eval_rollouts;
  rep.matrix.assign(rep.n_z * rep.n_c, 0.0);
  rep.task_reward.assign(rep.n_z, 0.0);

  const std::size_t M = cfg.eval_rollouts;
  const std::size_t wc = cfg.eval_len - hC + 1;  // oracle windows per rollout
  const std::size_t ws = cfg.eval_len - hS + 1;  // skill windows per rollout
  std::vector<double> oc(M * wc * hC * D), sk(M * ws * hS * D);
  std::vector<double> post(M * std::max(wc, ws) * std::max(rep.n_c, skill.n_z()));
  std::size_t mis = 0, total = 0;

  for (std::size_t z = 0; z < rep.n_z; ++z) {
    for (std::size_t m = 0; m < M; ++m) {
      const double u = (static_cast<double>(m) + 0.5) / static_cast<double>(M);
      const EvalRollout ro = eval_rollout(policy, cfg, static_cast<int>(z), u);
      rep.task_reward[z] += ro.mean_task_reward / static_cast<double>(M);
      for (std::size_t w = 0; w < wc; ++w)
        eval_stats.normalize_window(ro.features.data() + w * D, oc.data() + (m * wc + w) * hC * D);
      for (std::size_t w = 0; w < ws; ++w)
        skill_stats.normalize_window(ro.features.data() + w * D, sk.data() + (m * ws + w) * hS * D);
    }
    oracle.posterior_batch(oc.data(), M * wc, post.data());
    double* row = rep.matrix.data() + z * rep.n_c;
    for (std::size_t i = 0; i < M * wc; ++i)
      for (std::size_t c = 0; c < rep.n_c; ++c)
        row[c] += post[i * rep.n_c + c] / static_cast<double>(M * wc);
    skill.posterior_batch(sk.data(), M * ws, post.data());
    for (std::size_t i = 0; i < M * ws; ++i, ++total)
      mis += argmax_row(post.data() + i * skill.n_z(), skill.n_z()) != z;
  }
  rep.latent_error = total ? static_cast<double>(mis) / static_cast<double>(total) : 0.0;
  div_fid(rep.matrix, rep.n_z, rep.n_c, &rep.diversity, &rep.fidelity);
  rep.assignment = align_skills(rep.matrix, rep.n_z, rep.n_c).assignment;
  return rep;
}

SkillReport expert_calibration(const OracleClassifier& oracle, const ReferenceDataset& eval_ds,
                               std::size_t per_class, Rng& rng) {
  const auto view = eval_ds.eval_view();
  const std::size_t nc = oracle.n_classes();
  if (eval_ds.clip_dim() != oracle.input_dim())
    throw std::invalid_argument("calibration: clip dim mismatch");
  std::vector<std::vector<std::size_t>> per(nc);
  for (std::size_t i = 0; i < view.size(); ++i) {
    const int l = view.label(i);
    if (l < 0) throw std::invalid_argument("calibration: dataset labels are hidden");
    if (l < static_cast<int>(nc)) per[static_cast<std::size_t>(l)].push_back(i);
  }
  SkillReport rep;
  rep.n_z = nc;
  rep.n_c = nc;
  rep.matrix.assign(nc * nc, 0.0);
  std::vector<double> X, post;
  for (std::size_t c = 0; c < nc; ++c) {
    auto& idx = per[c];
    if (idx.empty()) throw std::invalid_argument("calibration: a class is missing");
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
      std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    const std::size_t keep = per_class ? std::min(per_class, idx.size()) : idx.size();
    X.resize(keep * oracle.input_dim());
    for (std::size_t i = 0; i < keep; ++i) {
      const float* clip = eval_ds.clip(idx[i]);
      for (std::size_t j = 0; j < oracle.input_dim(); ++j) X[i * oracle.input_dim() + j] = clip[j];
    }
    post.resize(keep * nc);
    oracle.posterior_batch(X.data(), keep, post.data());
    double* row = rep.matrix.data() + c * nc;
    for (std::size_t i = 0; i < keep; ++i)
      for (std::size_t k = 0; k < nc; ++k) row[k] += post[i * nc + k] / static_cast<double>(keep);
  }
  div_fid(rep.matrix, nc, nc, &rep.diversity, &rep.fidelity);
  rep.assignment = align_skills(rep.matrix, nc, nc).assignment;
  return rep;
}

namespace {

struct Dsu {
  std::vector<int> p;
  explicit Dsu(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[static_cast<std::size_t>(x)] != x)
      x = p[static_cast<std::size_t>(x)] = p[static_cast<std::size_t>(p[static_cast<std::size_t>(x)])];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[static_cast<std::size_t>(a)] = b;
    return true;
  }
};

double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

// Lloyd with k-means++ seeding; empty clusters reseed at the farthest point.
std::vector<int> kmeans_once(const std::vector<double>& X, std::size_t n, std::size_t d,
                             std::size_t k, Rng& rng, double* inertia_out) {
  std::vector<double> centers(k * d);
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  std::copy_n(X.data() + rng.index(n) * d, d, centers.data());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mind[i] = std::min(mind[i], sq_dist(X.data() + i * d, centers.data() + (c - 1) * d, d));
      total += mind[i];
    }
    std::size_t pick = rng.index(n);
    if (total > 0.0) {
      double r = rng.uniform() * total, acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += mind[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(X.data() + pick * d, d, centers.data() + c * d);
  }

  std::vector<int> assign(n, -1);
  std::vector<std::size_t> count(k);
  for (std::size_t iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = sq_dist(X.data() + i * d, centers.data(), d);
      for (std::size_t c = 1; c < k; ++c) {
        const double t = sq_dist(X.data() + i * d, centers.data() + c * d, d);
        if (t < bd) {
          bd = t;
          best = c;
        }
      }
      if (assign[i] != static_cast<int>(best)) {
        assign[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    std::fill(centers.begin(), centers.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* c = centers.data() + static_cast<std::size_t>(assign[i]) * d;
      for (std::size_t j = 0; j < d; ++j) c[j] += X[i * d + j];
      ++count[static_cast<std::size_t>(assign[i])];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) centers[c * d + j] /= static_cast<double>(count[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) continue;
      std::size_t far = 0;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t =
            sq_dist(X.data() + i * d, centers.data() + static_cast<std::size_t>(assign[i]) * d, d);
        if (t > fd) {
          fd = t;
          far = i;
        }
      }
      std::copy_n(X.data() + far * d, d, centers.data() + c * d);
    }
  }
  if (inertia_out) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += sq_dist(X.data() + i * d, centers.data() + static_cast<std::size_t>(assign[i]) * d, d);
    *inertia_out = s;
  }
  return assign;
}

}  // namespace

ClusterReport spectral_cluster(const std::vector<double>& rows, std::size_t dim,
                               const std::vector<int>& labels, const ClusterConfig& ccfg,
                               Rng& rng) {
  const std::size_t n_all = labels.size();
  if (rows.size() != n_all * dim) throw std::invalid_argument("cluster: rows/labels mismatch");
  if (n_all < 2) throw std::invalid_argument("cluster: need at least 2 points");

  std::vector<std::size_t> idx(n_all);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t n = n_all;
  if (ccfg.max_points > 0 && n_all > ccfg.max_points) {
    n = ccfg.max_points;
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(n_all - i)]);
    idx.resize(n);
  }
  const std::size_t nc = ccfg.n_clusters;
  if (nc == 0 || nc > n) throw std::invalid_argument("cluster: n_clusters out of range");

  std::vector<double> X(n * dim);
  std::vector<int> truth(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(rows.data() + idx[i] * dim, dim, X.data() + i * dim);
    truth[i] = labels[idx[i]];
    if (truth[i] < 0) throw std::invalid_argument("cluster: labels are hidden");
    max_label = std::max(max_label, truth[i]);
  }

  // Gram matrix -> squared distances in place
  std::vector<double> d2(n * n, 0.0);
  kern::ops().gemm_nt(d2.data(), X.data(), X.data(), n, n, dim);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = d2[i * n + i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      d2[i * n + j] = std::max(0.0, sq[i] + sq[j] - 2.0 * d2[i * n + j]);

  const std::size_t k = std::min(ccfg.k_neighbors, n - 1);
  std::vector<char> A(n * n, 0);
  std::vector<std::size_t> ord(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    const double* di = d2.data() + i * n;
    std::nth_element(ord.begin(), ord.begin() + static_cast<std::ptrdiff_t>(k), ord.end(),
                     [&](std::size_t a, std::size_t b) {
                       return di[a] != di[b] ? di[a] < di[b] : a < b;
                     });
    std::size_t taken = 0;
    for (std::size_t j = 0; j <= k && taken < k; ++j) {
      if (ord[j] == i) continue;
      A[i * n + ord[j]] = A[ord[j] * n + i] = 1;
      ++taken;
    }
  }

  ClusterReport rep;
  rep.n = n;
  rep.k_neighbors = k;
  rep.n_clusters = nc;

  Dsu dsu(n);
  std::size_t components = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (A[i * n + j] && dsu.unite(static_cast<int>(i), static_cast<int>(j))) --components;
  rep.components = components;
  while (components > 1) {
    rep.connected_fix = true;
    std::size_t bi = 0, bj = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (dsu.find(static_cast<int>(i)) != dsu.find(static_cast<int>(j)) && d2[i * n + j] < bd) {
          bd = d2[i * n + j];
          bi = i;
          bj = j;
        }
    A[bi * n + bj] = A[bj * n + bi] = 1;
    dsu.unite(static_cast<int>(bi), static_cast<int>(bj));
    --components;
  }

  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += A[i * n + j];
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (A[i * n + j])
        L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= dinv[i] * dinv[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) throw std::runtime_error("cluster: eigensolver failed");

  std::vector<double> emb(n * nc);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const double v = es.eigenvectors()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      emb[i * nc + c] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (std::size_t c = 0; c < nc; ++c) emb[i * nc + c] /= norm;
  }

  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, ccfg.restarts); ++r) {
    double inertia = 0.0;
    auto assign = kmeans_once(emb, n, nc, nc, rng, &inertia);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = std::move(assign);
    }
  }

  const std::size_t lspace = std::max(nc, static_cast<std::size_t>(max_label) + 1);
  std::vector<double> cost(nc * lspace, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    cost[static_cast<std::size_t>(best_assign[i]) * lspace + static_cast<std::size_t>(truth[i])] -=
        1.0;
  const auto g = hungarian_assign(cost, nc, lspace);
  double matched = 0.0;
  for (std::size_t c = 0; c < nc; ++c)
    if (g[c] >= 0) matched -= cost[c * lspace + static_cast<std::size_t>(g[c])];
  rep.error = 1.0 - matched / static_cast<double>(n);
  rep.truth = std::move(truth);
  rep.predicted.resize(n);
  for (std::size_t i = 0; i < n; ++i) rep.predicted[i] = g[static_cast<std::size_t>(best_assign[i])];
  return rep;
}

void labeled_matrix(const ReferenceDataset& ds, std::vector<double>& rows,
                    std::vector<int>& labels) {
  const auto view = ds.eval_view();
  const std::size_t dim = ds.clip_dim();
  rows.resize(view.size() * dim);
  labels.resize(view.size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    const float* c = ds.clip(i);
    for (std::size_t j = 0; j < dim; ++j) rows[i * dim + j] = c[j];
    labels[i] = view.label(i);
    if (labels[i] < 0) throw std::invalid_argument("labeled_matrix: labels are hidden");
  }
}

void write_skill_report(const std::string& json_path, const std::string& csv_path,
                        const SkillReport& rep) {
  using json = nlohmann::ordered_json;
  std::ofstream jf(json_path);
  if (!jf) throw std::runtime_error("cannot open " + json_path);
  json summary = {{"kind", "summary"},
                  {"n_z", rep.n_z},
                  {"n_c", rep.n_c},
                  {"diversity", rep.diversity},
                  {"fidelity", rep.fidelity},
                  {"latent_error", rep.latent_error},
                  {"rollouts_per_z", rep.rollouts_per_z}};
  jf << summary.dump() << "\n";
  for (std::size_t z = 0; z < rep.n_z; ++z) {
    const double* row = rep.matrix.data() + z * rep.n_c;
    json line = {{"kind", "skill"}, {"z", z}};
    line["posterior"] = std::vector<double>(row, row + rep.n_c);
    line["max_prob"] = row[argmax_row(row, rep.n_c)];
    line["assigned_class"] = rep.assignment.empty() ? -1 : rep.assignment[z];
    if (!rep.task_reward.empty()) line["task_reward"] = rep.task_reward[z];
    jf << line.dump() << "\n";
  }
  if (!jf) throw std::runtime_error("short write: " + json_path);

  std::ofstream cf(csv_path);
  if (!cf) throw std::runtime_error("cannot open " + csv_path);
  cf << "z";
  for (std::size_t c = 0; c < rep.n_c; ++c) cf << ",c" << c;
  cf << "\n";
  char buf[32];
  for (std::size_t z = 0; z < rep.n_z; ++z) {
    cf << z;
    for (std::size_t c = 0; c < rep.n_c; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", rep.matrix[z * rep.n_c + c]);
      cf << "," << buf;
    }
    cf << "\n";
  }
  if (!cf) throw std::runtime_error("short write: " + csv_path);
}

void write_cluster_csv(const std::string& path, const ClusterReport& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "clip_id,predicted,true\n";
  for (std::size_t i = 0; i < rep.n; ++i)
    f << i << "," << rep.predicted[i] << "," << rep.truth[i] << "\n";
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace cassi
