#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grlforge/errors.hpp"
#include "grlforge/nn.hpp"
#include "test_utils.hpp"

using namespace grlforge;
using testutil::bit_equal;
using testutil::max_abs_diff;
using testutil::naive_linear;
using testutil::random_labels;
using testutil::random_tensor;

TEST_CASE("linear forward matches the triple-loop oracle") {
  Rng rng(100);
  for (int c = 0; c < 100; ++c) {
    const std::size_t B = 1 + rng.index(5), I = 1 + rng.index(16), O = 1 + rng.index(12);
    const Tensor x = random_tensor({B, I}, rng);
    const Tensor w = random_tensor({I, O}, rng);
    const Tensor b = random_tensor({O}, rng);
    const Tensor got = nn::linear_forward(x, w, b);
    const Tensor want = naive_linear(x, w, b);
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("linear backward matches central finite differences") {
  Rng rng(101);
  const Tensor x = random_tensor({3, 4}, rng);
  Tensor w = random_tensor({4, 2}, rng);
  Tensor b = random_tensor({2}, rng);
  const Tensor grad_out = random_tensor({3, 2}, rng);

  // scalar objective sum(grad_out * linear(x, w, b)) has gradient grad_out
  auto objective = [&](const Tensor& xx, const Tensor& ww, const Tensor& bb) {
    const Tensor y = nn::linear_forward(xx, ww, bb);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += grad_out[i] * y[i];
    return s;
  };

  const nn::LinearGrads grads = nn::linear_backward(x, w, grad_out);
  const double eps = 1e-6;

  Tensor xv = x;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double saved = xv[i];
    xv[i] = saved + eps;
    const double lp = objective(xv, w, b);
    xv[i] = saved - eps;
    const double lm = objective(xv, w, b);
    xv[i] = saved;
    CHECK(grads.x[i] == doctest::Approx((lp - lm) / (2 * eps)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + eps;
    const double lp = objective(x, w, b);
    w[i] = saved - eps;
    const double lm = objective(x, w, b);
    w[i] = saved;
    CHECK(grads.w[i] == doctest::Approx((lp - lm) / (2 * eps)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double saved = b[i];
    b[i] = saved + eps;
    const double lp = objective(x, w, b);
    b[i] = saved - eps;
    const double lm = objective(x, w, b);
    b[i] = saved;
    CHECK(grads.b[i] == doctest::Approx((lp - lm) / (2 * eps)).epsilon(1e-6));
  }
}

TEST_CASE("linear shape mismatches are rejected") {
  Rng rng(102);
  const Tensor x = random_tensor({2, 3}, rng);
  const Tensor w = random_tensor({4, 2}, rng);
  const Tensor b = random_tensor({2}, rng);
  CHECK_THROWS_AS(nn::linear_forward(x, w, b), ShapeError);
}

TEST_CASE("relu clamps negatives and kills their gradient") {
  const Tensor x({1, 5}, std::vector<double>{-2.0, -0.0, 0.0, 0.5, 3.0});
  const Tensor y = nn::relu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 0.0);
  CHECK(y[3] == 0.5);
  CHECK(y[4] == 3.0);

  const Tensor g({1, 5}, std::vector<double>{1, 1, 1, 1, 1});
  const Tensor gx = nn::relu_backward(x, g);
  CHECK(gx[0] == 0.0);
  CHECK(gx[2] == 0.0);  // subgradient at exactly 0 is 0
  CHECK(gx[3] == 1.0);
  CHECK(gx[4] == 1.0);
}

TEST_CASE("softmax cross-entropy agrees with a direct evaluation") {
  const Tensor logits({2, 3}, std::vector<double>{1.0, 2.0, 0.5, -1.0, 0.0, 1.5});
  const std::vector<int> labels{1, 2};

  double want = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    double denom = 0.0;
    for (std::size_t c = 0; c < 3; ++c) denom += std::exp(logits[r * 3 + c]);
    want -= std::log(std::exp(logits[r * 3 + static_cast<std::size_t>(labels[r])]) / denom);
  }
  want /= 2.0;

  const nn::XentResult res = nn::softmax_cross_entropy(logits, labels);
  CHECK(res.loss == doctest::Approx(want).epsilon(1e-12));

  // gradient: (softmax - onehot) / B
  for (std::size_t r = 0; r < 2; ++r) {
    double denom = 0.0;
    for (std::size_t c = 0; c < 3; ++c) denom += std::exp(logits[r * 3 + c]);
    for (std::size_t c = 0; c < 3; ++c) {
      const double soft = std::exp(logits[r * 3 + c]) / denom;
      const double onehot = static_cast<int>(c) == labels[r] ? 1.0 : 0.0;
      CHECK(res.grad_logits[r * 3 + c] ==
            doctest::Approx((soft - onehot) / 2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax cross-entropy is stable under large logits") {
  const Tensor logits({1, 2}, std::vector<double>{5000.0, 4990.0});
  const nn::XentResult res = nn::softmax_cross_entropy(logits, {0});
  CHECK(std::isfinite(res.loss));
  CHECK(res.loss == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
}

TEST_CASE("softmax cross-entropy rejects bad labels") {
  const Tensor logits({1, 2}, std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(nn::softmax_cross_entropy(logits, {2}), ValueError);
  CHECK_THROWS_AS(nn::softmax_cross_entropy(logits, {0, 1}), ShapeError);
}

TEST_CASE("momentum sgd follows the v <- mu v + g; p <- p - lr v recurrence") {
  nn::ParamSet params;
  params.add("p", Tensor({2}, std::vector<double>{1.0, -1.0}));
  params[0].grad[0] = 0.5;
  params[0].grad[1] = -0.25;

  nn::TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;

  nn::sgd_step(params, cfg);
  // v = g, p -= lr * v
  CHECK(params[0].value[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));
  CHECK(params[0].value[1] == doctest::Approx(-1.0 + 0.1 * 0.25).epsilon(1e-15));
  CHECK(params[0].grad[0] == 0.0);  // gradients zeroed

  params[0].grad[0] = 0.5;
  params[0].grad[1] = -0.25;
  nn::sgd_step(params, cfg);
  // v = 0.9 * g + g = 0.95 resp. -0.475
  CHECK(params[0].value[0] == doctest::Approx(0.95 - 0.1 * 0.95).epsilon(1e-12));
  CHECK(params[0].value[1] == doctest::Approx(-0.975 + 0.1 * 0.475).epsilon(1e-12));
}

TEST_CASE("train config validation") {
  nn::TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lr = 0.01;
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.momentum = 0.9;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("network rejects incompatible layer chains") {
  CHECK_THROWS_AS(nn::Network({nn::LinearSpec{4, 3}, nn::LinearSpec{5, 2}}, {4}), ConfigError);
  CHECK_THROWS_AS(nn::Network({nn::Conv2dSpec{3, 4, 3, 1, 0}}, {8}), ConfigError);
  CHECK_NOTHROW(nn::Network({nn::FlattenSpec{}, nn::LinearSpec{12, 2}}, {3, 2, 2}));
}

TEST_CASE("glorot init is seed-deterministic and bounded") {
  nn::Network a({nn::LinearSpec{6, 4}}, {6});
  nn::Network b({nn::LinearSpec{6, 4}}, {6});
  a.init_glorot(9);
  b.init_glorot(9);
  CHECK(bit_equal(a.params()[0].value, b.params()[0].value));

  const double bound = std::sqrt(6.0 / (6 + 4));
  for (std::size_t i = 0; i < a.params()[0].value.size(); ++i) {
    CHECK(std::abs(a.params()[0].value[i]) <= bound);
  }
  // biases stay zero
  for (std::size_t i = 0; i < a.params()[1].value.size(); ++i)
    CHECK(a.params()[1].value[i] == 0.0);
}
