#pragma once

#include <span>

#include "crackdet/tensor.hpp"

namespace crackdet::nn {

Tensor softmax(const Tensor& logits);  // [N,C] row-wise

struct BatchLoss {
  float loss = 0.0f;  // mean categorical cross-entropy over the batch
  int correct = 0;    // argmax matches label (ties resolve to the higher index)
  Tensor probs;       // [N,C]
  Tensor dlogits;     // [N,C], populated when want_grad
};

// Categorical cross-entropy over one-hot targets, computed from logits.
// Probabilities are clipped to [1e-7, 1] inside the log.
BatchLoss softmax_cce(const Tensor& logits, std::span<const int> labels,
                      bool want_grad);

float cce_from_probs(const Tensor& probs, std::span<const int> labels);

}  // namespace crackdet::nn
