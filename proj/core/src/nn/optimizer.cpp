#include "crackdet/nn/optimizer.hpp"

#include <cmath>

namespace crackdet::nn {

const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

void Sgd::step(const std::vector<Param*>& params) {
  for (Param* p : params) {
    if (!p->trainable || !p->optimizable) continue;
    float* v = p->value.data();
    const float* g = p->grad.data();
    const size_t n = p->value.size();
    if (momentum_ == 0.0f) {
      for (size_t i = 0; i < n; ++i) v[i] -= lr_ * g[i];
    } else {
      Tensor& vel = velocity_[p];
      if (vel.empty()) vel = Tensor(p->value.shape());
      float* m = vel.data();
      for (size_t i = 0; i < n; ++i) {
        m[i] = momentum_ * m[i] - lr_ * g[i];
        v[i] += m[i];
      }
    }
  }
}

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (Param* p : params) {
    if (!p->trainable || !p->optimizable) continue;
    Moments& st = state_[p];
    if (st.m.empty()) {
      st.m = Tensor(p->value.shape());
      st.v = Tensor(p->value.shape());
    }
    float* value = p->value.data();
    const float* g = p->grad.data();
    float* m = st.m.data();
    float* v = st.v.data();
    const size_t n = p->value.size();
    for (size_t i = 0; i < n; ++i) {
      m[i] = beta1_ * m[i] + (1.0f - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0f - beta2_) * g[i] * g[i];
      const float mhat = m[i] / bc1;
      const float vhat = v[i] / bc2;
      value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, float lr) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(lr);
  return std::make_unique<Adam>(lr);
}

}  // namespace crackdet::nn
