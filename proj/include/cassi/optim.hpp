#pragma once
#include <cstddef>
#include <vector>

namespace cassi {

// Both optimizers apply weight decay as decoupled shrinkage
// (theta *= 1 - lr*wd) before the gradient step. Non-finite gradient
// entries raise.
class Optimizer {
 public:
  enum class Kind { sgd_momentum, adam };

  Optimizer(Kind kind, std::size_t n, double lr, double weight_decay = 0.0,
            double momentum = 0.0);

  void step(double* params, const double* grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::size_t step_count() const { return t_; }
  Kind kind() const { return kind_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  Kind kind_;
  std::size_t n_;
  double lr_, wd_, momentum_;
  std::size_t t_ = 0;
  std::vector<double> m1_, m2_;  // SGD uses m1_ as velocity
};

}  // namespace cassi
