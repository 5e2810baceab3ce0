#include <doctest.h>

#include <cmath>
#include <cstring>

#include "afdm/error.hpp"
#include "afdm/rng.hpp"
#include "afdm/tensor.hpp"
#include "support/oracles.hpp"

using namespace afdm;

TEST_CASE("conv2d: 1x1 identity kernel passes input through") {
  Rng rng(1);
  Tensor x = oracle::rand_tensor(rng, 2, 3, 5, 4);
  ConvKernel k(3, 3, 1);
  for (int c = 0; c < 3; ++c) k.wat(c, c, 0, 0) = 1.0f;
  Tensor y = conv2d(x, k);
  REQUIRE(y.same_shape(x));
  CHECK(oracle::max_abs_diff(x, y) == doctest::Approx(0.0));
}

TEST_CASE("conv2d: zero weights leave only the bias") {
  Tensor x(1, 2, 4, 4, 3.5f);
  ConvKernel k(3, 2, 3, 1, 1);
  k.b = {0.5f, -1.25f, 2.0f};
  Tensor y = conv2d(x, k);
  for (int oc = 0; oc < 3; ++oc) {
    for (int iy = 0; iy < 4; ++iy) {
      for (int ix = 0; ix < 4; ++ix) CHECK(y.at(0, oc, iy, ix) == k.b[oc]);
    }
  }
}

TEST_CASE("conv2d matches the direct-summation oracle") {
  Rng rng(7);
  Tensor x = oracle::rand_tensor(rng, 1, 3, 5, 5);
  ConvKernel k = oracle::rand_kernel(rng, 2, 3, 3, 1, 1);
  Tensor got = conv2d(x, k);
  Tensor want = oracle::conv2d_loop(x, k);
  CHECK(oracle::max_abs_diff(got, want) < 1e-6);
}

TEST_CASE("conv2d matches the oracle on randomized instances") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + rng.uniform_int(4);
    const int c = 1 + rng.uniform_int(4);
    const int h = 3 + rng.uniform_int(6);
    const int w = 3 + rng.uniform_int(6);
    const int oc = 1 + rng.uniform_int(8);
    const int ks = rng.uniform_int(2) == 0 ? 1 : 3;
    const int stride = 1 + rng.uniform_int(2);
    const int pad = ks == 3 ? rng.uniform_int(2) : 0;
    Tensor x = oracle::rand_tensor(rng, n, c, h, w);
    ConvKernel k = oracle::rand_kernel(rng, oc, c, ks, stride, pad);
    CHECK(oracle::max_abs_diff(conv2d(x, k), oracle::conv2d_loop(x, k)) < 1e-6);
  }
}

TEST_CASE("conv2d is linear in the input for zero-bias kernels") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = oracle::rand_tensor(rng, 1, 3, 6, 6);
    Tensor y = oracle::rand_tensor(rng, 1, 3, 6, 6);
    ConvKernel k = oracle::rand_kernel(rng, 4, 3, 3, 1, 1);
    k.b.assign(k.b.size(), 0.0f);
    const float a = static_cast<float>(rng.uniform_real(-2.0, 2.0));
    const float b = static_cast<float>(rng.uniform_real(-2.0, 2.0));
    Tensor mix(1, 3, 6, 6);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.v[i] = a * x.v[i] + b * y.v[i];
    Tensor lhs = conv2d(mix, k);
    Tensor cx = conv2d(x, k), cy = conv2d(y, k);
    Tensor rhs(lhs.n, lhs.c, lhs.h, lhs.w);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.v[i] = a * cx.v[i] + b * cy.v[i];
    CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-5);
  }
}

TEST_CASE("conv2d rejects channel mismatch and names both shapes") {
  Tensor x(1, 3, 4, 4);
  ConvKernel k(2, 4, 3, 1, 1);
  try {
    conv2d(x, k);
    FAIL("expected invalid_argument");
  } catch (const invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,3,4,4)") != std::string::npos);
    CHECK(msg.find("2x4x3x3") != std::string::npos);
  }
}

TEST_CASE("conv2d is deterministic") {
  Rng rng(5);
  Tensor x = oracle::rand_tensor(rng, 2, 4, 8, 8);
  ConvKernel k = oracle::rand_kernel(rng, 8, 4, 3, 1, 1);
  Tensor a = conv2d(x, k);
  Tensor b = conv2d(x, k);
  CHECK(std::memcmp(a.v.data(), b.v.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("conv2d_backward: zero grad_out gives zero gradients") {
  Rng rng(3);
  Tensor x = oracle::rand_tensor(rng, 1, 2, 5, 5);
  ConvKernel k = oracle::rand_kernel(rng, 3, 2, 3, 1, 1);
  Tensor go(1, 3, 5, 5, 0.0f);
  ConvGrads g = conv2d_backward(x, k, go);
  for (float f : g.input.v) CHECK(f == 0.0f);
  for (float f : g.weights) CHECK(f == 0.0f);
  for (float f : g.bias) CHECK(f == 0.0f);
}

TEST_CASE("conv2d_backward: identity kernel passes grad through") {
  Rng rng(4);
  Tensor x = oracle::rand_tensor(rng, 1, 2, 4, 4);
  ConvKernel k(2, 2, 1);
  for (int c = 0; c < 2; ++c) k.wat(c, c, 0, 0) = 1.0f;
  Tensor go = oracle::rand_tensor(rng, 1, 2, 4, 4);
  ConvGrads g = conv2d_backward(x, k, go);
  CHECK(oracle::max_abs_diff(g.input, go) == doctest::Approx(0.0));
}

TEST_CASE("conv2d_backward matches finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = oracle::rand_tensor(rng, 1, 2, 5, 5);
    ConvKernel k = oracle::rand_kernel(rng, 2, 2, 3, 1, 1);
    Tensor go = oracle::rand_tensor(rng, 1, 2, 5, 5);
    auto objective = [&]() {
      std::vector<double> y = oracle::conv2d_loop_f64(x, k);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += static_cast<double>(go.v[i]) * y[i];
      return acc;
    };
    ConvGrads g = conv2d_backward(x, k, go);
    CHECK(oracle::fd_check({k.w.data(), k.w.size()}, g.weights, objective).ok());
    CHECK(oracle::fd_check({k.b.data(), k.b.size()}, g.bias, objective).ok());
    CHECK(oracle::fd_check({x.v.data(), x.v.size()}, g.input.v, objective).ok());
  }
}

TEST_CASE("relu basics") {
  Tensor neg(1, 1, 2, 2, -3.0f);
  Tensor z = relu(neg);
  for (float f : z.v) CHECK(f == 0.0f);

  Tensor pos(1, 1, 2, 2, 1.5f);
  Tensor p = relu(pos);
  for (float f : p.v) CHECK(f == 1.5f);
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
  Rng rng(21);
  Tensor x(1, 2, 4, 4);
  for (float& f : x.v) {
    double u = rng.uniform_real(0.1, 1.0);
    f = static_cast<float>(rng.uniform_int(2) == 0 ? u : -u);
  }
  Tensor go = oracle::rand_tensor(rng, 1, 2, 4, 4);
  auto objective = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += static_cast<double>(go.v[i]) * std::max(0.0, static_cast<double>(x.v[i]));
    }
    return acc;
  };
  Tensor g = relu_backward(x, go);
  CHECK(oracle::fd_check({x.v.data(), x.v.size()}, g.v, objective).ok());
}

TEST_CASE("mse_loss basics and scalar oracle") {
  Rng rng(13);
  Tensor a = oracle::rand_tensor(rng, 2, 3, 4, 4);
  CHECK(mse_loss(a, a) == 0.0);

  Tensor b = a;
  for (float& f : b.v) f += 1.0f;
  CHECK(mse_loss(b, a) == doctest::Approx(1.0).epsilon(1e-6));

  Tensor c = oracle::rand_tensor(rng, 2, 3, 4, 4);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a.v[i]) - c.v[i];
    acc += d * d;
  }
  CHECK(std::abs(mse_loss(a, c) - acc / static_cast<double>(a.size())) < 1e-7);

  Tensor bad(1, 1, 2, 2);
  CHECK_THROWS_AS(mse_loss(a, bad), invalid_argument);
}

TEST_CASE("mse gradient matches finite differences") {
  Rng rng(17);
  Tensor pred = oracle::rand_tensor(rng, 1, 2, 3, 3);
  Tensor target = oracle::rand_tensor(rng, 1, 2, 3, 3);
  Tensor g = mse_loss_grad(pred, target);
  auto objective = [&]() { return mse_loss(pred, target); };
  CHECK(oracle::fd_check({pred.v.data(), pred.v.size()}, g.v, objective).ok());
}

TEST_CASE("downsample2/upsample_nearest basics") {
  Tensor c(1, 2, 4, 4, 2.5f);
  Tensor d = downsample2(c);
  CHECK(d.h == 2);
  for (float f : d.v) CHECK(f == 2.5f);

  Tensor u = upsample_nearest(d, 3);
  CHECK(u.h == 6);
  for (float f : u.v) CHECK(f == 2.5f);

  Tensor same = upsample_nearest(c, 1);
  CHECK(oracle::max_abs_diff(same, c) == doctest::Approx(0.0));

  Tensor odd(1, 1, 3, 3);
  CHECK_THROWS_AS(downsample2(odd), invalid_argument);
  CHECK_THROWS_AS(upsample_nearest(c, 0), invalid_argument);
}

TEST_CASE("downsample2 then upsample restores a per-2x2-constant tensor") {
  Rng rng(23);
  Tensor x(1, 3, 6, 8);
  for (int ic = 0; ic < 3; ++ic) {
    for (int by = 0; by < 3; ++by) {
      for (int bx = 0; bx < 4; ++bx) {
        const float val = static_cast<float>(rng.uniform_real(-2.0, 2.0));
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) x.at(0, ic, 2 * by + dy, 2 * bx + dx) = val;
        }
      }
    }
  }
  Tensor back = upsample_nearest(downsample2(x), 2);
  CHECK(oracle::max_abs_diff(back, x) < 1e-6);
}

TEST_CASE("pooling backwards are the adjoints of the forwards") {
  // <forward(x), g> == <x, backward(g)> for linear maps
  Rng rng(29);
  Tensor x = oracle::rand_tensor(rng, 1, 2, 4, 6);
  Tensor g = oracle::rand_tensor(rng, 1, 2, 2, 3);
  Tensor fx = downsample2(x);
  Tensor bg = downsample2_backward(g);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) lhs += static_cast<double>(fx.v[i]) * g.v[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x.v[i]) * bg.v[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));

  Tensor g2 = oracle::rand_tensor(rng, 1, 2, 8, 12);
  Tensor fx2 = upsample_nearest(x, 2);
  Tensor bg2 = upsample_nearest_backward(g2, 2);
  lhs = rhs = 0.0;
  for (std::size_t i = 0; i < fx2.size(); ++i) lhs += static_cast<double>(fx2.v[i]) * g2.v[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += static_cast<double>(x.v[i]) * bg2.v[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("concat/slice round trip") {
  Rng rng(31);
  Tensor a = oracle::rand_tensor(rng, 2, 3, 4, 4);
  Tensor b = oracle::rand_tensor(rng, 2, 2, 4, 4);
  Tensor cat = concat_channels(a, b);
  CHECK(cat.c == 5);
  CHECK(oracle::max_abs_diff(slice_channels(cat, 0, 3), a) == doctest::Approx(0.0));
  CHECK(oracle::max_abs_diff(slice_channels(cat, 3, 5), b) == doctest::Approx(0.0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<float> p = {1.0f, -2.0f, 0.5f};
  std::vector<float> g(3, 0.0f);
  std::vector<ParamView> params = {{"p", p.data(), p.size()}};
  AdamState st = make_adam_state(params, 0.1);
  adam_step(params, {std::span<const float>(g)}, st);
  CHECK(p[0] == 1.0f);
  CHECK(p[1] == -2.0f);
  CHECK(p[2] == 0.5f);
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step moves a scalar by about lr") {
  float p = 0.0f;
  float g = 1.0f;
  std::vector<ParamView> params = {{"x", &p, 1}};
  AdamState st = make_adam_state(params, 0.1);
  adam_step(params, {std::span<const float>(&g, 1)}, st);
  CHECK(p == doctest::Approx(-0.1).epsilon(1e-4));
}

TEST_CASE("adam: converges on a 1-d quadratic") {
  float x = 0.0f;
  std::vector<ParamView> params = {{"x", &x, 1}};
  AdamState st = make_adam_state(params, 0.1);
  for (int i = 0; i < 100; ++i) {
    float g = 2.0f * (x - 3.0f);
    adam_step(params, {std::span<const float>(&g, 1)}, st);
  }
  CHECK(std::abs(x - 3.0f) < 0.1);
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  std::vector<float> p = {1.0f, 2.0f};
  std::vector<float> g = {0.0f};
  std::vector<ParamView> params = {{"p", p.data(), p.size()}};
  AdamState st = make_adam_state(params, 0.1);
  CHECK_THROWS_AS(adam_step(params, {std::span<const float>(g)}, st), invalid_argument);
}
