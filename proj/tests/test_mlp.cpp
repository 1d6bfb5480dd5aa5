#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "cassi/mlp.hpp"
#include "cassi/rng.hpp"

using namespace cassi;

namespace {

std::vector<double> rand_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (rng.uniform() * 2.0 - 1.0);
  return v;
}

double weighted_sum(const Mlp& net, const double* X, std::size_t N, const std::vector<double>& C) {
  std::vector<double> Y(N * net.out_dim());
  net.forward_batch(X, N, Y.data());
  double s = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) s += C[i] * Y[i];
  return s;
}

double grad_sq_norm(const Mlp& net, const double* x) {
  Mlp::Cache c;
  double y;
  net.forward(x, &y, &c);
  std::vector<double> gx(net.in_dim());
  net.input_grad(c, gx.data());
  double s = 0.0;
  for (double g : gx) s += g * g;
  return s;
}

}  // namespace

TEST_CASE("zero-initialized net maps everything to zero") {
  Mlp net({5, 7, 3}, Act::elu);
  std::vector<double> x = {1.0, -2.0, 0.5, 3.0, -0.1}, y(3, 99.0);
  net.forward(x.data(), y.data());
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("single linear layer with identity weights is the identity") {
  Mlp net({3, 3}, Act::elu);
  for (std::size_t i = 0; i < 3; ++i) net.W(0)[i * 3 + i] = 1.0;
  std::vector<double> x = {0.3, -1.7, 2.2}, y(3);
  net.forward(x.data(), y.data());
  for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-15));
}

TEST_CASE("two-layer forward matches a by-hand computation") {
  // 1 -> 2 -> 1, elu hidden
  Mlp net({1, 2, 1}, Act::elu);
  net.W(0)[0] = 2.0;
  net.W(0)[1] = -1.0;
  net.b(0)[0] = 0.5;
  net.b(0)[1] = 0.25;
  net.W(1)[0] = 1.5;
  net.W(1)[1] = 3.0;
  net.b(1)[0] = -0.125;

  auto elu = [](double a) { return a > 0.0 ? a : std::exp(a) - 1.0; };
  for (double x : {-1.3, -0.2, 0.0, 0.4, 2.1}) {
    double h0 = elu(2.0 * x + 0.5), h1 = elu(-x + 0.25);
    double want = 1.5 * h0 + 3.0 * h1 - 0.125;
    double y;
    net.forward(&x, &y);
    CHECK(y == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("forward_batch equals row-wise forward") {
  Rng rng(31);
  for (Act act : {Act::elu, Act::relu}) {
    Mlp net({6, 11, 9, 4}, act);
    net.init(rng);
    const std::size_t N = 17;
    auto X = rand_vec(rng, N * 6, 2.0);
    std::vector<double> Y(N * 4), y(4);
    net.forward_batch(X.data(), N, Y.data());
    for (std::size_t i = 0; i < N; ++i) {
      net.forward(X.data() + i * 6, y.data());
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(Y[i * 4 + j] == doctest::Approx(y[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward_batch gradients match finite differences") {
  Rng rng(32);
  for (Act act : {Act::elu, Act::relu}) {
    Mlp net({4, 8, 6, 2}, act);
    net.init(rng);
    const std::size_t N = 5;
    auto X = rand_vec(rng, N * 4, 1.5);
    auto C = rand_vec(rng, N * 2);

    Mlp::BatchCache cache;
    std::vector<double> Y(N * 2);
    net.forward_batch(X.data(), N, Y.data(), &cache);
    std::vector<double> grad(net.n_params(), 0.0), dX(N * 4, 0.0);
    net.backward_batch(cache, C.data(), grad.data(), dX.data());

    const double eps = 1e-5;
    for (std::size_t p = 0; p < net.n_params(); ++p) {
      const double save = net.params()[p];
      net.params()[p] = save + eps;
      const double lp = weighted_sum(net, X.data(), N, C);
      net.params()[p] = save - eps;
      const double lm = weighted_sum(net, X.data(), N, C);
      net.params()[p] = save;
      const double fd = (lp - lm) / (2.0 * eps);
      CHECK(grad[p] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }

    auto X2 = X;
    for (std::size_t i = 0; i < X.size(); ++i) {
      X2[i] = X[i] + eps;
      const double lp = weighted_sum(net, X2.data(), N, C);
      X2[i] = X[i] - eps;
      const double lm = weighted_sum(net, X2.data(), N, C);
      X2[i] = X[i];
      const double fd = (lp - lm) / (2.0 * eps);
      CHECK(dX[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("backward accumulates rather than overwrites") {
  Rng rng(33);
  Mlp net({3, 5, 1}, Act::elu);
  net.init(rng);
  auto X = rand_vec(rng, 2 * 3);
  std::vector<double> dY = {1.0, -0.5};

  Mlp::BatchCache cache;
  std::vector<double> Y(2);
  net.forward_batch(X.data(), 2, Y.data(), &cache);
  std::vector<double> g1(net.n_params(), 0.0), g2(net.n_params(), 0.0);
  net.backward_batch(cache, dY.data(), g1.data());
  net.backward_batch(cache, dY.data(), g2.data());
  net.backward_batch(cache, dY.data(), g2.data());
  for (std::size_t p = 0; p < net.n_params(); ++p)
    CHECK(g2[p] == doctest::Approx(2.0 * g1[p]).epsilon(1e-12));
}

TEST_CASE("zero output gradient produces zero parameter gradient") {
  Rng rng(34);
  Mlp net({4, 6, 2}, Act::elu);
  net.init(rng);
  auto X = rand_vec(rng, 3 * 4);
  std::vector<double> dY(3 * 2, 0.0), Y(3 * 2);
  Mlp::BatchCache cache;
  net.forward_batch(X.data(), 3, Y.data(), &cache);
  std::vector<double> grad(net.n_params(), 0.0);
  net.backward_batch(cache, dY.data(), grad.data());
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("input gradient of a pure linear map is its weight row") {
  Mlp net({4, 1}, Act::elu);
  const double w[4] = {0.5, -1.0, 2.0, 0.0};
  std::memcpy(net.W(0), w, sizeof w);
  net.b(0)[0] = 3.0;

  double x[4] = {1.0, 1.0, 1.0, 1.0}, y;
  Mlp::Cache cache;
  net.forward(x, &y, &cache);
  std::vector<double> gx(4);
  net.input_grad(cache, gx.data());
  for (std::size_t i = 0; i < 4; ++i) CHECK(gx[i] == doctest::Approx(w[i]).epsilon(1e-15));
}

TEST_CASE("input_grad matches finite differences on a deep net") {
  Rng rng(35);
  Mlp net({5, 9, 7, 1}, Act::elu);
  net.init(rng);
  auto x = rand_vec(rng, 5, 1.5);

  Mlp::Cache cache;
  double y;
  net.forward(x.data(), &y, &cache);
  std::vector<double> gx(5);
  net.input_grad(cache, gx.data());

  const double eps = 1e-6;
  for (std::size_t i = 0; i < 5; ++i) {
    auto xp = x, xm = x;
    xp[i] += eps;
    xm[i] -= eps;
    double yp, ym;
    net.forward(xp.data(), &yp);
    net.forward(xm.data(), &ym);
    CHECK(gx[i] == doctest::Approx((yp - ym) / (2.0 * eps)).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("gp_backward returns the squared input-gradient norm and its parameter gradient") {
  Rng rng(36);
  Mlp net({3, 6, 5, 1}, Act::elu);
  net.init(rng);
  auto x = rand_vec(rng, 3, 1.2);

  Mlp::Cache cache;
  double y;
  net.forward(x.data(), &y, &cache);

  std::vector<double> grad(net.n_params(), 0.0);
  const double val = net.gp_backward(cache, grad.data(), 1.0);
  CHECK(val == doctest::Approx(grad_sq_norm(net, x.data())).epsilon(1e-12));

  const double eps = 1e-5;
  for (std::size_t p = 0; p < net.n_params(); ++p) {
    const double save = net.params()[p];
    net.params()[p] = save + eps;
    const double gp = grad_sq_norm(net, x.data());
    net.params()[p] = save - eps;
    const double gm = grad_sq_norm(net, x.data());
    net.params()[p] = save;
    CHECK(grad[p] == doctest::Approx((gp - gm) / (2.0 * eps)).epsilon(1e-3).scale(1.0));
  }

  std::vector<double> scaled(net.n_params(), 0.0);
  net.gp_backward(cache, scaled.data(), 2.5);
  for (std::size_t p = 0; p < net.n_params(); ++p)
    CHECK(scaled[p] == doctest::Approx(2.5 * grad[p]).epsilon(1e-12).scale(1e-12));
}

TEST_CASE("glorot init respects fan bounds, zero biases, and head scaling") {
  Rng rng(37);
  Mlp net({10, 20, 8, 2}, Act::elu);
  net.init(rng, 0.1);

  const std::size_t L = net.n_layers();
  const auto& sz = net.sizes();
  for (std::size_t l = 0; l < L; ++l) {
    const double limit = std::sqrt(6.0 / double(sz[l] + sz[l + 1]));
    const double scale = (l + 1 == L) ? 0.1 : 1.0;
    double mx = 0.0;
    for (std::size_t i = 0; i < sz[l] * sz[l + 1]; ++i) {
      CHECK(std::abs(net.W(l)[i]) <= scale * limit * (1.0 + 1e-12));
      mx = std::max(mx, std::abs(net.W(l)[i]));
    }
    CHECK(mx > 0.3 * scale * limit);  // draws actually fill the range
    for (std::size_t i = 0; i < sz[l + 1]; ++i) CHECK(net.b(l)[i] == 0.0);
  }
}
