#include "crackdet/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "crackdet/errors.hpp"

namespace crackdet::nn {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects [N,C]");
  const int N = logits.dim(0), C = logits.dim(1);
  Tensor out({N, C});
  for (int n = 0; n < N; ++n) {
    float mx = logits.at(n, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, logits.at(n, c));
    float sum = 0.0f;
    for (int c = 0; c < C; ++c) {
      out.at(n, c) = std::exp(logits.at(n, c) - mx);
      sum += out.at(n, c);
    }
    for (int c = 0; c < C; ++c) out.at(n, c) /= sum;
  }
  return out;
}

BatchLoss softmax_cce(const Tensor& logits, std::span<const int> labels,
                      bool want_grad) {
  const int N = logits.dim(0), C = logits.dim(1);
  if (static_cast<size_t>(N) != labels.size())
    throw ShapeError("labels/logits batch mismatch");
  BatchLoss r;
  r.probs = softmax(logits);
  if (want_grad) r.dlogits = Tensor({N, C});
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const int y = labels[static_cast<size_t>(n)];
    const float p = std::clamp(r.probs.at(n, y), 1e-7f, 1.0f);
    total -= std::log(p);
    int pred = 0;
    for (int c = 1; c < C; ++c)
      if (r.probs.at(n, c) >= r.probs.at(n, pred)) pred = c;
    if (pred == y) r.correct++;
    if (want_grad) {
      for (int c = 0; c < C; ++c)
        r.dlogits.at(n, c) = (r.probs.at(n, c) - (c == y ? 1.0f : 0.0f)) /
                             static_cast<float>(N);
    }
  }
  r.loss = static_cast<float>(total / N);
  return r;
}

float cce_from_probs(const Tensor& probs, std::span<const int> labels) {
  const int N = probs.dim(0);
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const float p = std::clamp(probs.at(n, labels[static_cast<size_t>(n)]), 1e-7f, 1.0f);
    total -= std::log(p);
  }
  return static_cast<float>(total / N);
}

}  // namespace crackdet::nn
