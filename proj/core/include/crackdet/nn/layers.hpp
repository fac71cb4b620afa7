#pragma once

#include <memory>
#include <string>
#include <vector>

#include "crackdet/rng.hpp"
#include "crackdet/tensor.hpp"

namespace crackdet::nn {

// Learnable or persistent tensor owned by a layer. `optimizable` is false for
// tensors that are saved/restored but never touched by the optimizer
// (batch-norm moving statistics).
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  bool optimizable = true;
};

// Per-sample activation shape. h == w == 0 denotes a rank-2 [N, C] tensor.
struct Shape3 {
  int h = 0, w = 0, c = 0;
  bool is_vector() const { return h == 0 && w == 0; }
  bool operator==(const Shape3&) const = default;
};

enum class Padding { Same, Valid };

enum class Act { Relu, Relu6, HardSwish, HardSigmoid, Sigmoid, Softmax };

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual const char* kind() const = 0;

  // Shape inference; called once at graph-build time. Allocates params.
  virtual Shape3 infer(const std::vector<Shape3>& in) = 0;
  virtual void init_params(Rng&) {}

  // `training` selects batch statistics / caches backward scratch.
  virtual void forward(const std::vector<const Tensor*>& in, Tensor& out,
                       bool training) = 0;
  // Accumulates (+=) into non-null din entries; fills param grads (+=).
  virtual void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                        const Tensor& dout, const std::vector<Tensor*>& din) = 0;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

 protected:
  Param& add_param(const std::string& suffix, std::vector<int> shape,
                   bool optimizable = true);

  std::string name_;
  std::vector<Param> params_;
};

using LayerPtr = std::unique_ptr<Layer>;

struct Conv2DConfig {
  int filters = 0;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  Padding padding = Padding::Same;
  bool use_bias = true;
};

class Conv2D : public Layer {
 public:
  Conv2D(std::string name, Conv2DConfig cfg) : Layer(std::move(name)), cfg_(cfg) {}
  const char* kind() const override { return "conv2d"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void init_params(Rng& rng) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  Conv2DConfig cfg_;
  Shape3 in_shape_, out_shape_;
  int pad_top_ = 0, pad_left_ = 0;
};

struct DepthwiseConv2DConfig {
  int kh = 3, kw = 3;
  int sh = 1, sw = 1;
  Padding padding = Padding::Same;
  bool use_bias = false;
};

class DepthwiseConv2D : public Layer {
 public:
  DepthwiseConv2D(std::string name, DepthwiseConv2DConfig cfg)
      : Layer(std::move(name)), cfg_(cfg) {}
  const char* kind() const override { return "depthwise_conv2d"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void init_params(Rng& rng) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  DepthwiseConv2DConfig cfg_;
  Shape3 in_shape_, out_shape_;
  int pad_top_ = 0, pad_left_ = 0;
};

class Dense : public Layer {
 public:
  Dense(std::string name, int units, bool use_bias = true)
      : Layer(std::move(name)), units_(units), use_bias_(use_bias) {}
  const char* kind() const override { return "dense"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void init_params(Rng& rng) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  int units_;
  bool use_bias_;
  int in_features_ = 0;
};

class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, float eps = 1e-3f, float momentum = 0.99f)
      : Layer(std::move(name)), eps_(eps), momentum_(momentum) {}
  const char* kind() const override { return "batch_norm"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  float eps_, momentum_;
  Shape3 shape_;
  // Batch statistics cached by the last training-mode forward.
  std::vector<float> mean_, inv_std_;
};

class Activation : public Layer {
 public:
  Activation(std::string name, Act act) : Layer(std::move(name)), act_(act) {}
  const char* kind() const override { return "activation"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;
  Act act() const { return act_; }

 private:
  Act act_;
};

enum class PoolKind { Max, Avg };

struct Pool2DConfig {
  PoolKind kind = PoolKind::Max;
  int kh = 2, kw = 2;
  int sh = 2, sw = 2;
  Padding padding = Padding::Valid;
};

class Pool2D : public Layer {
 public:
  Pool2D(std::string name, Pool2DConfig cfg) : Layer(std::move(name)), cfg_(cfg) {}
  const char* kind() const override { return "pool2d"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  Pool2DConfig cfg_;
  Shape3 in_shape_, out_shape_;
  int pad_top_ = 0, pad_left_ = 0;
  std::vector<int> argmax_;  // cached when training
};

class GlobalAvgPool : public Layer {
 public:
  GlobalAvgPool(std::string name, bool keepdims)
      : Layer(std::move(name)), keepdims_(keepdims) {}
  const char* kind() const override { return "global_avg_pool"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  bool keepdims_;
  Shape3 in_shape_;
};

// out = sum_i scale[i] * in[i]; all inputs share a shape.
class Add : public Layer {
 public:
  Add(std::string name, std::vector<float> scales = {})
      : Layer(std::move(name)), scales_(std::move(scales)) {}
  const char* kind() const override { return "add"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  std::vector<float> scales_;
};

class Concat : public Layer {
 public:
  explicit Concat(std::string name) : Layer(std::move(name)) {}
  const char* kind() const override { return "concat"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;

 private:
  std::vector<int> widths_;
};

// in[0]: [N,H,W,C]; in[1]: [N,1,1,C] gate. out = in[0] * gate (broadcast).
class ChannelScale : public Layer {
 public:
  explicit ChannelScale(std::string name) : Layer(std::move(name)) {}
  const char* kind() const override { return "channel_scale"; }
  Shape3 infer(const std::vector<Shape3>& in) override;
  void forward(const std::vector<const Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<const Tensor*>& in, const Tensor& out,
                const Tensor& dout, const std::vector<Tensor*>& din) override;
};

class Input : public Layer {
 public:
  Input(std::string name, Shape3 shape) : Layer(std::move(name)), shape_(shape) {}
  const char* kind() const override { return "input"; }
  Shape3 infer(const std::vector<Shape3>&) override { return shape_; }
  void forward(const std::vector<const Tensor*>&, Tensor&, bool) override {}
  void backward(const std::vector<const Tensor*>&, const Tensor&, const Tensor&,
                const std::vector<Tensor*>&) override {}

 private:
  Shape3 shape_;
};

}  // namespace crackdet::nn
