#include "cassi/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace cassi {

Optimizer::Optimizer(Kind kind, std::size_t n, double lr, double weight_decay, double momentum)
    : kind_(kind), n_(n), lr_(lr), wd_(weight_decay), momentum_(momentum) {
  m1_.assign(n, 0.0);
  if (kind_ == Kind::adam) m2_.assign(n, 0.0);
}

void Optimizer::step(double* params, const double* grads) {
  for (std::size_t i = 0; i < n_; ++i)
    if (!std::isfinite(grads[i])) throw std::runtime_error("optimizer_step: non-finite gradient");
  ++t_;
  const double shrink = 1.0 - lr_ * wd_;
  if (wd_ != 0.0)
    for (std::size_t i = 0; i < n_; ++i) params[i] *= shrink;

  if (kind_ == Kind::sgd_momentum) {
    for (std::size_t i = 0; i < n_; ++i) {
      m1_[i] = momentum_ * m1_[i] + grads[i];
      params[i] -= lr_ * m1_[i];
    }
  } else {
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < n_; ++i) {
      m1_[i] = kBeta1 * m1_[i] + (1.0 - kBeta1) * grads[i];
      m2_[i] = kBeta2 * m2_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
      const double mhat = m1_[i] / bc1;
      const double vhat = m2_[i] / bc2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace cassi
