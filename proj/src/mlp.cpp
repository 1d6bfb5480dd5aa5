#include "cassi/mlp.hpp"

#include <cmath>
#include <cstring>

#include "cassi/kernels.hpp"

namespace cassi {

const char* act_name(Act a) { return a == Act::elu ? "elu" : "relu"; }

Act act_from_name(const std::string& s) {
  if (s == "elu") return Act::elu;
  if (s == "relu") return Act::relu;
  throw std::invalid_argument("unknown activation: " + s);
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Act act)
    : sizes_(std::move(layer_sizes)), act_(act) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least one layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(total);
    total += sizes_[l + 1] * sizes_[l];
    b_off_.push_back(total);
    total += sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::init(Rng& rng, double head_scale) {
  const std::size_t L = n_layers();
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t fan_in = sizes_[l], fan_out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double* w = W(l);
    for (std::size_t i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-bound, bound);
    if (l == L - 1 && head_scale != 1.0)
      for (std::size_t i = 0; i < fan_out * fan_in; ++i) w[i] *= head_scale;
    std::memset(b(l), 0, sizes_[l + 1] * sizeof(double));
  }
}

void Mlp::act_fwd(const double* a, double* h, std::size_t n) const {
  act_ == Act::elu ? kern::ops().elu(a, h, n) : kern::ops().relu(a, h, n);
}
void Mlp::act_deriv(const double* a, double* d, std::size_t n) const {
  act_ == Act::elu ? kern::ops().elu_d(a, d, n) : kern::ops().relu_d(a, d, n);
}
void Mlp::act_deriv2(const double* a, double* s, std::size_t n) const {
  if (act_ == Act::elu)
    kern::ops().elu_dd(a, s, n);
  else
    std::memset(s, 0, n * sizeof(double));
}

void Mlp::forward(const double* x, double* y, Cache* cache) const {
  const auto& k = kern::ops();
  const std::size_t L = n_layers();
  std::vector<double> cur(x, x + sizes_[0]), nxt;
  if (cache) {
    cache->h.assign(L + 1, {});
    cache->a.assign(L + 1, {});
    cache->h[0] = cur;
  }
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t rows = sizes_[l + 1], cols = sizes_[l];
    nxt.resize(rows);
    k.matvec(W(l), cur.data(), nxt.data(), rows, cols);
    const double* bl = b(l);
    for (std::size_t r = 0; r < rows; ++r) nxt[r] += bl[r];
    if (cache) cache->a[l + 1] = nxt;
    if (l + 1 < L) act_fwd(nxt.data(), nxt.data(), rows);
    if (cache) cache->h[l + 1] = nxt;
    cur.swap(nxt);
  }
  std::memcpy(y, cur.data(), sizes_.back() * sizeof(double));
}

void Mlp::forward_batch(const double* X, std::size_t N, double* Y, BatchCache* cache) const {
  const auto& k = kern::ops();
  const std::size_t L = n_layers();
  BatchCache local;
  BatchCache& c = cache ? *cache : local;
  c.n = N;
  c.h.assign(L + 1, {});
  c.a.assign(L + 1, {});
  c.h[0].assign(X, X + N * sizes_[0]);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    auto& a = c.a[l + 1];
    a.resize(N * out);
    const double* bl = b(l);
    for (std::size_t m = 0; m < N; ++m) std::memcpy(a.data() + m * out, bl, out * sizeof(double));
    k.gemm_nt(a.data(), c.h[l].data(), W(l), N, out, in);
    auto& h = c.h[l + 1];
    if (l + 1 < L) {
      h.resize(N * out);
      act_fwd(a.data(), h.data(), N * out);
    } else {
      h = a;
    }
  }
  std::memcpy(Y, c.h[L].data(), N * sizes_.back() * sizeof(double));
}

void Mlp::backward_batch(const BatchCache& c, const double* dY, double* grad, double* dX) const {
  const auto& k = kern::ops();
  const std::size_t L = n_layers();
  const std::size_t N = c.n;
  std::vector<double> delta(dY, dY + N * sizes_.back()), prev;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    // dW += delta^T h_l ; db += column sums
    k.gemm_tn(grad + w_off_[l], delta.data(), c.h[l].data(), out, in, N);
    double* gb = grad + b_off_[l];
    for (std::size_t m = 0; m < N; ++m) k.axpy(1.0, delta.data() + m * out, gb, out);
    const bool need_dx = l > 0 || dX != nullptr;
    if (!need_dx) break;
    prev.assign(N * in, 0.0);
    k.gemm_nn(prev.data(), delta.data(), W(l), N, in, out);
    if (l > 0) {
      std::vector<double> dact(N * in);
      act_deriv(c.a[l].data(), dact.data(), N * in);
      for (std::size_t i = 0; i < N * in; ++i) prev[i] *= dact[i];
    }
    delta.swap(prev);
  }
  if (dX) std::memcpy(dX, delta.data(), N * sizes_[0] * sizeof(double));
}

void Mlp::input_grad(const Cache& c, double* gx) const {
  if (out_dim() != 1) throw std::logic_error("input_grad expects scalar output");
  const auto& k = kern::ops();
  const std::size_t L = n_layers();
  std::vector<double> d{1.0}, cvec;
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    cvec.resize(in);
    k.matvec_t(W(l), d.data(), cvec.data(), out, in);
    if (l > 0) {
      std::vector<double> dact(in);
      act_deriv(c.a[l].data(), dact.data(), in);
      for (std::size_t i = 0; i < in; ++i) cvec[i] *= dact[i];
    }
    d.swap(cvec);
  }
  std::memcpy(gx, d.data(), sizes_[0] * sizeof(double));
}

double Mlp::gp_backward(const Cache& c, double* grad, double scale) const {
  if (out_dim() != 1) throw std::logic_error("gp_backward expects scalar output");
  const auto& k = kern::ops();
  const std::size_t L = n_layers();

  // Reverse sweep of the ordinary input-gradient chain, keeping every
  // intermediate: d[l] = dy/da_l, cvec[l] = W_{l+1}^T d[l+1] before the
  // activation-derivative product.
  std::vector<std::vector<double>> d(L + 1), cvec(L + 1);
  d[L] = {1.0};
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    cvec[l].resize(in);
    k.matvec_t(W(l), d[l + 1].data(), cvec[l].data(), out, in);
    if (l > 0) {
      std::vector<double> dact(in);
      act_deriv(c.a[l].data(), dact.data(), in);
      d[l] = cvec[l];
      for (std::size_t i = 0; i < in; ++i) d[l][i] *= dact[i];
    }
  }
  const std::vector<double>& g = cvec[0];  // input gradient
  double gp = k.dot(g.data(), g.data(), g.size());

  // Backprop through that chain. gbar = d(gp)/dg; dbar[l] = d(gp)/d d[l];
  // sbar[l] accumulates d(gp)/d a_l via the sigma'(a_l) factors.
  std::vector<double> gbar(g);
  k.scal(2.0 * scale, gbar.data(), gbar.size());
  std::vector<std::vector<double>> sbar(L);
  std::vector<double> dbar, tmp;
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t out = sizes_[l + 1], in = sizes_[l];
    const std::vector<double>& up = (l == 0) ? gbar : tmp;  // cbar_l
    // chain used W^T d; contribute d[l+1] cbar_l^T and push dbar upward
    k.ger(grad + w_off_[l], d[l + 1].data(), up.data(), out, in);
    dbar.resize(out);
    k.matvec(W(l), up.data(), dbar.data(), out, in);
    if (l + 1 < L) {
      // d[l+1] = sigma'(a_{l+1}) o cvec[l+1]
      const std::size_t n = out;
      std::vector<double> dact(n), dact2(n);
      act_deriv(c.a[l + 1].data(), dact.data(), n);
      act_deriv2(c.a[l + 1].data(), dact2.data(), n);
      sbar[l + 1].resize(n);
      for (std::size_t i = 0; i < n; ++i) sbar[l + 1][i] = dact2[i] * cvec[l + 1][i] * dbar[i];
      tmp.resize(n);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = dact[i] * dbar[i];
    }
  }

  // Forward-chain pass: a_l also depends on parameters below it. abar[L]=0
  // because d[L] is constant.
  std::vector<double> abar, down;
  for (std::size_t l = L - 1; l >= 1; --l) {
    const std::size_t n = sizes_[l];
    if (l == L - 1) {
      abar = sbar[l].empty() ? std::vector<double>(n, 0.0) : sbar[l];
    } else {
      // abar_l = sbar_l + sigma'(a_l) o (W^T abar_{l+1}); W(l) maps h_l -> a_{l+1}
      down.resize(n);
      k.matvec_t(W(l), abar.data(), down.data(), sizes_[l + 1], n);
      std::vector<double> dact(n);
      act_deriv(c.a[l].data(), dact.data(), n);
      for (std::size_t i = 0; i < n; ++i)
        down[i] = (sbar[l].empty() ? 0.0 : sbar[l][i]) + dact[i] * down[i];
      abar.swap(down);
    }
    k.ger(grad + w_off_[l - 1], abar.data(), c.h[l - 1].data(), n, sizes_[l - 1]);
    k.axpy(1.0, abar.data(), grad + b_off_[l - 1], n);
    if (l == 1) break;
  }
  return gp;
}

}  // namespace cassi
