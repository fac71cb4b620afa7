#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "crackdet/nn/layers.hpp"

namespace crackdet::nn {

enum class OptimizerKind { Sgd, Adam };

const char* to_string(OptimizerKind k);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual OptimizerKind kind() const = 0;
  // Applies one update to every trainable, optimizable param.
  virtual void step(const std::vector<Param*>& params) = 0;

  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }

 protected:
  float lr_ = 1e-4f;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(float lr, float momentum = 0.0f) : momentum_(momentum) { lr_ = lr; }
  OptimizerKind kind() const override { return OptimizerKind::Sgd; }
  void step(const std::vector<Param*>& params) override;

 private:
  float momentum_;
  std::unordered_map<const Param*, Tensor> velocity_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(float lr, float beta1 = 0.9f, float beta2 = 0.999f,
                float eps = 1e-7f)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    lr_ = lr;
  }
  OptimizerKind kind() const override { return OptimizerKind::Adam; }
  void step(const std::vector<Param*>& params) override;

 private:
  float beta1_, beta2_, eps_;
  long long t_ = 0;
  struct Moments {
    Tensor m, v;
  };
  std::unordered_map<const Param*, Moments> state_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, float lr);

}  // namespace crackdet::nn
