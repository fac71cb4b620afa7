// Finite-difference oracles for every layer's backward pass, plus the loss
// identities. These gates run before anything downstream is trusted.
#include <doctest.h>

#include <cmath>
#include <functional>

#include "crackdet/nn/layers.hpp"
#include "crackdet/nn/loss.hpp"
#include "crackdet/nn/network.hpp"
#include "crackdet/nn/optimizer.hpp"
#include "crackdet/rng.hpp"

using namespace crackdet;
using namespace crackdet::nn;

namespace {

void fill_uniform(Tensor& t, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  for (float& v : t.flat()) v = rng.uniform_f(lo, hi);
}

// Scalar probe: L = sum_i u_i * out_i with fixed random u.
struct Probe {
  Tensor u;
  double loss(const Tensor& out) const {
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i) acc += static_cast<double>(u[i]) * out[i];
    return acc;
  }
};

// Checks d(probe)/d(input) and d(probe)/d(params) against central differences.
void grad_check(Layer& layer, const std::vector<int>& in_shape, uint64_t seed,
                float h = 1e-2f, float tol = 5e-2f, bool check_params = true) {
  Rng rng(seed);
  Tensor x(in_shape);
  fill_uniform(x, rng);

  std::vector<const Tensor*> ins{&x};
  Tensor out;
  layer.forward(ins, out, /*training=*/true);

  Probe probe;
  probe.u = Tensor(out.shape());
  fill_uniform(probe.u, rng);

  Tensor dx(x.shape());
  std::vector<Tensor*> dins{&dx};
  for (auto& p : layer.params()) p.grad.fill(0.0f);
  layer.backward(ins, out, probe.u, dins);

  const auto numeric = [&](float* slot) {
    const float orig = *slot;
    *slot = orig + h;
    Tensor out_p;
    layer.forward(ins, out_p, true);
    *slot = orig - h;
    Tensor out_m;
    layer.forward(ins, out_m, true);
    *slot = orig;
    return (probe.loss(out_p) - probe.loss(out_m)) / (2.0 * h);
  };

  // Sample a handful of coordinates of the input gradient.
  Rng pick(seed ^ 0x5eedu);
  for (int k = 0; k < 12; ++k) {
    const size_t i = static_cast<size_t>(pick.uniform_int(x.size()));
    const double num = numeric(&x.data()[i]);
    const double ana = dx[i];
    CAPTURE(i);
    CHECK(std::abs(num - ana) <= tol * std::max({1.0, std::abs(num), std::abs(ana)}));
  }
  if (!check_params) return;
  for (auto& p : layer.params()) {
    if (!p.optimizable) continue;
    for (int k = 0; k < 8; ++k) {
      const size_t i = static_cast<size_t>(pick.uniform_int(p.value.size()));
      const double num = numeric(&p.value.data()[i]);
      const double ana = p.grad[i];
      CAPTURE(p.name);
      CAPTURE(i);
      CHECK(std::abs(num - ana) <= tol * std::max({1.0, std::abs(num), std::abs(ana)}));
    }
  }
}

void init_layer(Layer& layer, const std::vector<Shape3>& in_shapes, uint64_t seed) {
  layer.infer(in_shapes);
  Rng rng(seed);
  layer.init_params(rng);
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("conv2d gradients (same padding, stride 2)") {
  Conv2D layer("c", {5, 3, 3, 2, 2, Padding::Same, true});
  init_layer(layer, {{9, 9, 4}}, 7);
  grad_check(layer, {2, 9, 9, 4}, 11);
}

TEST_CASE("conv2d gradients (valid padding)") {
  Conv2D layer("c", {3, 3, 3, 1, 1, Padding::Valid, true});
  init_layer(layer, {{7, 8, 3}}, 8);
  grad_check(layer, {1, 7, 8, 3}, 12);
}

TEST_CASE("conv2d gradients (1x1 fast path)") {
  Conv2D layer("c", {6, 1, 1, 1, 1, Padding::Valid, false});
  init_layer(layer, {{5, 5, 4}}, 9);
  grad_check(layer, {2, 5, 5, 4}, 13);
}

TEST_CASE("conv2d gradients (asymmetric 1x7 kernel)") {
  Conv2D layer("c", {4, 1, 7, 1, 1, Padding::Same, false});
  init_layer(layer, {{6, 9, 3}}, 10);
  grad_check(layer, {1, 6, 9, 3}, 14);
}

TEST_CASE("depthwise conv gradients") {
  DepthwiseConv2D layer("d", {3, 3, 2, 2, Padding::Same, true});
  init_layer(layer, {{8, 8, 5}}, 15);
  grad_check(layer, {2, 8, 8, 5}, 16);
}

TEST_CASE("dense gradients") {
  Dense layer("fc", 4, true);
  init_layer(layer, {{0, 0, 7}}, 17);
  grad_check(layer, {3, 7}, 18);
}

TEST_CASE("batch_norm gradients (training mode)") {
  BatchNorm layer("bn", 1e-3f);
  init_layer(layer, {{4, 4, 3}}, 19);
  grad_check(layer, {3, 4, 4, 3}, 20, 1e-2f, 8e-2f);
}

TEST_CASE("batch_norm eval mode uses moving statistics") {
  BatchNorm layer("bn", 1e-3f);
  init_layer(layer, {{2, 2, 2}}, 1);
  Tensor x({1, 2, 2, 2});
  Rng rng(2);
  fill_uniform(x, rng, 0.0f, 4.0f);
  std::vector<const Tensor*> ins{&x};
  Tensor out;
  layer.forward(ins, out, /*training=*/false);
  // moving_mean = 0, moving_var = 1, gamma = 1, beta = 0 at init.
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(out[i] == doctest::Approx(x[i] / std::sqrt(1.0f + 1e-3f)).epsilon(1e-5));
}

TEST_CASE("activation gradients") {
  for (Act act : {Act::Relu, Act::Relu6, Act::HardSwish, Act::HardSigmoid, Act::Sigmoid}) {
    Activation layer("a", act);
    init_layer(layer, {{4, 4, 3}}, 21);
    grad_check(layer, {2, 4, 4, 3}, 22 + static_cast<uint64_t>(act), 1e-3f, 5e-2f);
  }
}

TEST_CASE("softmax forward/backward") {
  Activation layer("sm", Act::Softmax);
  init_layer(layer, {{0, 0, 5}}, 23);
  grad_check(layer, {3, 5}, 24, 1e-3f);
}

TEST_CASE("max pool gradients") {
  Pool2D layer("p", {PoolKind::Max, 3, 3, 2, 2, Padding::Same});
  init_layer(layer, {{7, 7, 3}}, 25);
  grad_check(layer, {2, 7, 7, 3}, 26, 1e-4f);  // small h: keep argmax stable
}

TEST_CASE("avg pool gradients (same padding excludes pad)") {
  Pool2D layer("p", {PoolKind::Avg, 3, 3, 1, 1, Padding::Same});
  init_layer(layer, {{5, 5, 2}}, 27);
  grad_check(layer, {1, 5, 5, 2}, 28);

  // Constant input stays constant under exclude-pad averaging.
  Tensor x = Tensor::full({1, 5, 5, 2}, 3.25f);
  std::vector<const Tensor*> ins{&x};
  Tensor out;
  layer.forward(ins, out, false);
  for (float v : out.flat()) CHECK(v == doctest::Approx(3.25f));
}

TEST_CASE("global average pool matches mean") {
  GlobalAvgPool layer("gap", false);
  init_layer(layer, {{3, 4, 2}}, 29);
  grad_check(layer, {2, 3, 4, 2}, 30);
}

TEST_CASE("add / concat / channel scale gradients") {
  Rng rng(31);
  Tensor a({2, 3, 3, 4}), b({2, 3, 3, 4}), gate({2, 1, 1, 4});
  fill_uniform(a, rng);
  fill_uniform(b, rng);
  fill_uniform(gate, rng, 0.1f, 1.0f);

  SUBCASE("add with scales") {
    Add layer("add", {1.0f, 0.3f});
    layer.infer({{3, 3, 4}, {3, 3, 4}});
    std::vector<const Tensor*> ins{&a, &b};
    Tensor out;
    layer.forward(ins, out, false);
    for (size_t i = 0; i < out.size(); ++i)
      CHECK(out[i] == doctest::Approx(a[i] + 0.3f * b[i]));
    Tensor da(a.shape()), db(b.shape());
    std::vector<Tensor*> dins{&da, &db};
    Tensor u(out.shape());
    fill_uniform(u, rng);
    layer.backward(ins, out, u, dins);
    for (size_t i = 0; i < u.size(); ++i) {
      CHECK(da[i] == doctest::Approx(u[i]));
      CHECK(db[i] == doctest::Approx(0.3f * u[i]));
    }
  }

  SUBCASE("concat splits gradient") {
    Concat layer("cat");
    layer.infer({{3, 3, 4}, {3, 3, 4}});
    std::vector<const Tensor*> ins{&a, &b};
    Tensor out;
    layer.forward(ins, out, false);
    CHECK(out.shape() == std::vector<int>{2, 3, 3, 8});
    CHECK(out.at(0, 0, 0, 0) == a.at(0, 0, 0, 0));
    CHECK(out.at(0, 0, 0, 4) == b.at(0, 0, 0, 0));
    Tensor da(a.shape()), db(b.shape());
    std::vector<Tensor*> dins{&da, &db};
    Tensor u(out.shape());
    fill_uniform(u, rng);
    layer.backward(ins, out, u, dins);
    CHECK(da.at(1, 2, 2, 3) == doctest::Approx(u.at(1, 2, 2, 3)));
    CHECK(db.at(1, 2, 2, 3) == doctest::Approx(u.at(1, 2, 2, 7)));
  }

  SUBCASE("channel scale broadcasts the gate") {
    ChannelScale layer("cs");
    layer.infer({{3, 3, 4}, {1, 1, 4}});
    std::vector<const Tensor*> ins{&a, &gate};
    Tensor out;
    layer.forward(ins, out, false);
    CHECK(out.at(1, 2, 1, 3) ==
          doctest::Approx(a.at(1, 2, 1, 3) * gate.at(1, 0, 0, 3)));
    Tensor da(a.shape()), dg(gate.shape());
    std::vector<Tensor*> dins{&da, &dg};
    Tensor u(out.shape());
    fill_uniform(u, rng);
    layer.backward(ins, out, u, dins);
    // dg[c] = sum over pixels of u * a
    double want = 0.0;
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x) want += u.at(0, y, x, 1) * a.at(0, y, x, 1);
    CHECK(dg.at(0, 0, 0, 1) == doctest::Approx(want).epsilon(1e-4));
  }
}

TEST_CASE("cross-entropy identities") {
  // Uniform predictions: loss = ln 2 per sample.
  Tensor logits({4, 2});
  logits.fill(0.0f);
  std::vector<int> labels{0, 1, 0, 1};
  auto r = softmax_cce(logits, labels, true);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  // Confident correct predictions: loss ~ 0.
  Tensor conf({2, 2});
  conf.at(0, 0) = 20.0f;
  conf.at(0, 1) = -20.0f;
  conf.at(1, 0) = -20.0f;
  conf.at(1, 1) = 20.0f;
  auto r2 = softmax_cce(conf, std::vector<int>{0, 1}, false);
  CHECK(r2.loss < 1e-6f);
  CHECK(r2.correct == 2);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(33);
  Tensor logits({3, 2});
  fill_uniform(logits, rng, -2.0f, 2.0f);
  std::vector<int> labels{1, 0, 1};
  auto r = softmax_cce(logits, labels, true);
  const float h = 1e-3f;
  for (size_t i = 0; i < logits.size(); ++i) {
    const float orig = logits[i];
    logits[i] = orig + h;
    const float lp = softmax_cce(logits, labels, false).loss;
    logits[i] = orig - h;
    const float lm = softmax_cce(logits, labels, false).loss;
    logits[i] = orig;
    const double num = (lp - lm) / (2.0 * h);
    CHECK(r.dlogits[i] == doctest::Approx(num).epsilon(5e-3));
  }
}

TEST_CASE("network end-to-end gradient through a small conv net") {
  Network net({6, 6, 3});
  auto conv = std::make_unique<Conv2D>("c0", Conv2DConfig{4, 3, 3, 1, 1, Padding::Same, true});
  const int c0 = net.add(std::move(conv), {net.input_node()});
  const int r0 = net.add(std::make_unique<Activation>("r0", Act::Relu), {c0});
  const int bn0 = net.add(std::make_unique<BatchNorm>("bn0"), {r0});
  const int g = net.add(std::make_unique<GlobalAvgPool>("g", false), {bn0});
  const int fc = net.add(std::make_unique<Dense>("fc", 2, true), {g});
  net.finalize(fc);
  Rng rng(41);
  net.init_params(rng);

  Tensor x({2, 6, 6, 3});
  fill_uniform(x, rng);
  std::vector<int> labels{0, 1};

  net.forward_train(x);
  auto loss = softmax_cce(net.activation(fc), labels, true);
  net.zero_grads();
  net.backward_from(fc, loss.dlogits);

  // Numeric check on a few conv weights through the whole network.
  auto params = net.parameters();
  Param* w = params[0];
  Rng pick(42);
  const float h = 1e-2f;
  for (int k = 0; k < 6; ++k) {
    const size_t i = static_cast<size_t>(pick.uniform_int(w->value.size()));
    const float orig = w->value[i];
    w->value[i] = orig + h;
    net.forward_train(x);
    const float lp = softmax_cce(net.activation(fc), labels, false).loss;
    w->value[i] = orig - h;
    net.forward_train(x);
    const float lm = softmax_cce(net.activation(fc), labels, false).loss;
    w->value[i] = orig;
    const double num = (lp - lm) / (2.0 * h);
    // f32 forward + BN normalization keeps per-weight loss deltas near the
    // rounding floor; the check still catches sign and magnitude errors.
    CHECK(std::abs(num - w->grad[i]) <=
          5e-2 * std::max({0.08, std::abs(num), static_cast<double>(std::abs(w->grad[i]))}));
  }
}

TEST_CASE("sgd and adam step directions") {
  Param p;
  p.name = "p";
  p.value = Tensor({2});
  p.grad = Tensor({2});
  p.value[0] = 1.0f;
  p.value[1] = -1.0f;
  p.grad[0] = 0.5f;
  p.grad[1] = -0.25f;
  std::vector<Param*> params{&p};

  SUBCASE("sgd") {
    Sgd opt(0.1f);
    opt.step(params);
    CHECK(p.value[0] == doctest::Approx(1.0f - 0.1f * 0.5f));
    CHECK(p.value[1] == doctest::Approx(-1.0f + 0.1f * 0.25f));
  }
  SUBCASE("adam first step moves by ~lr in sign of gradient") {
    Adam opt(0.01f);
    opt.step(params);
    CHECK(p.value[0] == doctest::Approx(1.0f - 0.01f).epsilon(1e-3));
    CHECK(p.value[1] == doctest::Approx(-1.0f + 0.01f).epsilon(1e-3));
  }
  SUBCASE("frozen params never move") {
    p.trainable = false;
    Adam opt(0.5f);
    opt.step(params);
    CHECK(p.value[0] == 1.0f);
    CHECK(p.value[1] == -1.0f);
  }
}

TEST_CASE("inference frees intermediates but keeps requested nodes") {
  Network net({4, 4, 2});
  const int c0 = net.add(
      std::make_unique<Conv2D>("c0", Conv2DConfig{3, 3, 3, 1, 1, Padding::Same, true}),
      {net.input_node()});
  const int r0 = net.add(std::make_unique<Activation>("r0", Act::Relu), {c0});
  const int g = net.add(std::make_unique<GlobalAvgPool>("g", false), {r0});
  const int fc = net.add(std::make_unique<Dense>("fc", 2, true), {g});
  net.finalize(fc);
  Rng rng(55);
  net.init_params(rng);

  Tensor x({1, 4, 4, 2});
  fill_uniform(x, rng);
  net.infer(x, std::array<int, 1>{r0});
  CHECK(!net.activation(r0).empty());
  CHECK(!net.activation(fc).empty());
  CHECK(net.activation(c0).empty());  // eagerly freed
}

TEST_SUITE_END();
