#pragma once

#include <span>
#include <vector>

#include "crackdet/nn/layers.hpp"

namespace crackdet::nn {

// A DAG of layers. Nodes are added in topological order (node 0 is the
// input placeholder); the executor walks that order forward and its reverse
// for backprop. One Network instance is single-writer during training;
// inference with `infer` is safe to call from one thread at a time.
class Network {
 public:
  explicit Network(Shape3 input_shape);

  int add(LayerPtr layer, std::vector<int> inputs);
  void finalize(int output_node);
  void init_params(Rng& rng);

  int input_node() const { return 0; }
  int output_node() const { return output_node_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  Shape3 node_shape(int id) const { return shapes_[static_cast<size_t>(id)]; }
  Layer& layer(int id) { return *nodes_[static_cast<size_t>(id)].layer; }
  const Layer& layer(int id) const { return *nodes_[static_cast<size_t>(id)].layer; }

  // Inference pass; frees intermediates eagerly except nodes in `keep`
  // (the output node is always kept).
  void infer(const Tensor& input, std::span<const int> keep = {});
  // Training pass; retains every activation for backward().
  void forward_train(const Tensor& input);
  const Tensor& activation(int id) const { return acts_[static_cast<size_t>(id)]; }
  void release_activations();

  void zero_grads();
  // Seed d(loss)/d(activation[node]) and propagate to all trainable params.
  void backward_from(int node, const Tensor& grad);

  // Parameters in build order.
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;

 private:
  struct Node {
    LayerPtr layer;
    std::vector<int> inputs;
    int consumer_count = 0;
  };

  void run_forward(const Tensor& input, bool training, std::span<const int> keep,
                   bool eager_free);
  std::vector<bool> requires_grad() const;

  std::vector<Node> nodes_;
  std::vector<Shape3> shapes_;
  int output_node_ = -1;
  bool finalized_ = false;

  std::vector<Tensor> acts_;
};

}  // namespace crackdet::nn
