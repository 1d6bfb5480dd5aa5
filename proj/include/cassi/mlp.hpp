#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cassi/rng.hpp"

namespace cassi {

enum class Act { elu, relu };

const char* act_name(Act a);
Act act_from_name(const std::string& s);

// Dense MLP, hidden activations all `act`, linear output layer. Parameters
// live in one flat vector ordered (W1, b1, W2, b2, ...), W row-major
// (out x in); gradients use the same layout.
class Mlp {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, Act act);

  // Glorot-uniform weights, zero biases. head_scale multiplies the final
  // layer's weights (policy uses 0.1 so initial actions hug zero).
  void init(Rng& rng, double head_scale = 1.0);

  std::size_t in_dim() const { return sizes_.front(); }
  std::size_t out_dim() const { return sizes_.back(); }
  std::size_t n_layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  Act act() const { return act_; }

  std::size_t n_params() const { return params_.size(); }
  double* params() { return params_.data(); }
  const double* params() const { return params_.data(); }

  double* W(std::size_t l) { return params_.data() + w_off_[l]; }
  const double* W(std::size_t l) const { return params_.data() + w_off_[l]; }
  double* b(std::size_t l) { return params_.data() + b_off_[l]; }
  const double* b(std::size_t l) const { return params_.data() + b_off_[l]; }

  // Caches hold h[0]=input .. h[L]=output and pre-activations a[1..L]
  // (a[0] unused); batch variants store N rows per layer.
  struct Cache {
    std::vector<std::vector<double>> h, a;
  };
  struct BatchCache {
    std::size_t n = 0;
    std::vector<std::vector<double>> h, a;
  };

  void forward(const double* x, double* y, Cache* cache = nullptr) const;
  void forward_batch(const double* X, std::size_t N, double* Y, BatchCache* cache = nullptr) const;

  // Accumulates parameter grads into grad (flat layout); optionally emits
  // input grads dX (N x in_dim). dY is N x out_dim.
  void backward_batch(const BatchCache& cache, const double* dY, double* grad,
                      double* dX = nullptr) const;

  // Scalar-output nets: gradient of the output w.r.t. the input.
  void input_grad(const Cache& cache, double* gx) const;

  // Adds scale * d/dtheta ||grad_x f(x)||^2 into grad; returns ||grad_x f||^2.
  // Double backprop through the input-gradient chain; needs a single-sample
  // forward cache. Scalar output only.
  double gp_backward(const Cache& cache, double* grad, double scale) const;

 private:
  void act_fwd(const double* a, double* h, std::size_t n) const;
  void act_deriv(const double* a, double* d, std::size_t n) const;
  void act_deriv2(const double* a, double* s, std::size_t n) const;

  std::vector<std::size_t> sizes_;
  Act act_;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

}  // namespace cassi
