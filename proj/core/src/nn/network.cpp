#include "crackdet/nn/network.hpp"

#include <algorithm>

#include "crackdet/errors.hpp"

namespace crackdet::nn {

Network::Network(Shape3 input_shape) {
  Node n;
  n.layer = std::make_unique<Input>("input", input_shape);
  nodes_.push_back(std::move(n));
  shapes_.push_back(input_shape);
}

int Network::add(LayerPtr layer, std::vector<int> inputs) {
  if (finalized_) throw ShapeError("network already finalized");
  std::vector<Shape3> in_shapes;
  for (int i : inputs) {
    if (i < 0 || i >= node_count())
      throw ShapeError("layer '" + layer->name() + "' references unknown node " +
                       std::to_string(i));
    in_shapes.push_back(shapes_[static_cast<size_t>(i)]);
  }
  shapes_.push_back(layer->infer(in_shapes));
  Node n;
  n.layer = std::move(layer);
  n.inputs = std::move(inputs);
  nodes_.push_back(std::move(n));
  return node_count() - 1;
}

void Network::finalize(int output_node) {
  if (output_node < 0 || output_node >= node_count())
    throw ShapeError("bad output node");
  output_node_ = output_node;
  for (auto& n : nodes_) n.consumer_count = 0;
  for (const auto& n : nodes_)
    for (int i : n.inputs) nodes_[static_cast<size_t>(i)].consumer_count++;
  finalized_ = true;
}

void Network::init_params(Rng& rng) {
  for (auto& n : nodes_) n.layer->init_params(rng);
}

void Network::run_forward(const Tensor& input, bool training,
                          std::span<const int> keep, bool eager_free) {
  if (!finalized_) throw ShapeError("network not finalized");
  const Shape3 want = shapes_[0];
  if (input.rank() != 4 || input.dim(1) != want.h || input.dim(2) != want.w ||
      input.dim(3) != want.c)
    throw ShapeError("network input must be [N," + std::to_string(want.h) + "," +
                     std::to_string(want.w) + "," + std::to_string(want.c) +
                     "], got " + input.shape_str());

  acts_.assign(static_cast<size_t>(node_count()), Tensor());
  acts_[0] = input;

  std::vector<int> remaining(static_cast<size_t>(node_count()));
  for (int i = 0; i < node_count(); ++i)
    remaining[static_cast<size_t>(i)] = nodes_[static_cast<size_t>(i)].consumer_count;
  std::vector<bool> kept(static_cast<size_t>(node_count()), false);
  kept[static_cast<size_t>(output_node_)] = true;
  for (int k : keep) kept[static_cast<size_t>(k)] = true;

  std::vector<const Tensor*> ins;
  for (int id = 1; id < node_count(); ++id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    ins.clear();
    for (int i : node.inputs) ins.push_back(&acts_[static_cast<size_t>(i)]);
    node.layer->forward(ins, acts_[static_cast<size_t>(id)], training);
    if (eager_free) {
      for (int i : node.inputs) {
        if (--remaining[static_cast<size_t>(i)] == 0 && !kept[static_cast<size_t>(i)])
          acts_[static_cast<size_t>(i)].release();
      }
    }
  }
}

void Network::infer(const Tensor& input, std::span<const int> keep) {
  run_forward(input, /*training=*/false, keep, /*eager_free=*/true);
}

void Network::forward_train(const Tensor& input) {
  run_forward(input, /*training=*/true, {}, /*eager_free=*/false);
}

void Network::release_activations() { acts_.clear(); }

void Network::zero_grads() {
  for (auto& n : nodes_)
    for (auto& p : n.layer->params()) p.grad.fill(0.0f);
}

std::vector<bool> Network::requires_grad() const {
  std::vector<bool> req(static_cast<size_t>(node_count()), false);
  for (int id = 0; id < node_count(); ++id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    bool r = false;
    for (const auto& p : n.layer->params())
      if (p.trainable && p.optimizable) r = true;
    for (int i : n.inputs)
      if (req[static_cast<size_t>(i)]) r = true;
    req[static_cast<size_t>(id)] = r;
  }
  return req;
}

void Network::backward_from(int node, const Tensor& grad) {
  if (acts_.empty() || acts_[static_cast<size_t>(node)].empty())
    throw ShapeError("backward without retained forward activations");
  const auto req = requires_grad();

  std::vector<Tensor> grads(static_cast<size_t>(node_count()));
  grads[static_cast<size_t>(node)] = grad;

  std::vector<const Tensor*> ins;
  std::vector<Tensor*> dins;
  for (int id = node; id >= 1; --id) {
    Tensor& g = grads[static_cast<size_t>(id)];
    if (g.empty()) continue;
    Node& n = nodes_[static_cast<size_t>(id)];
    ins.clear();
    dins.clear();
    for (int i : n.inputs) {
      ins.push_back(&acts_[static_cast<size_t>(i)]);
      if (i > 0 && req[static_cast<size_t>(i)]) {
        Tensor& gi = grads[static_cast<size_t>(i)];
        if (gi.empty()) gi = Tensor(acts_[static_cast<size_t>(i)].shape());
        dins.push_back(&gi);
      } else {
        dins.push_back(nullptr);
      }
    }
    const bool own_trainable = std::any_of(
        n.layer->params().begin(), n.layer->params().end(),
        [](const Param& p) { return p.trainable && p.optimizable; });
    const bool any_input = std::any_of(dins.begin(), dins.end(),
                                       [](Tensor* t) { return t != nullptr; });
    if (own_trainable || any_input)
      n.layer->backward(ins, acts_[static_cast<size_t>(id)], g, dins);
    g.release();
  }
}

std::vector<Param*> Network::parameters() {
  std::vector<Param*> out;
  for (auto& n : nodes_)
    for (auto& p : n.layer->params()) out.push_back(&p);
  return out;
}

std::vector<const Param*> Network::parameters() const {
  std::vector<const Param*> out;
  for (const auto& n : nodes_)
    for (const auto& p : n.layer->params()) out.push_back(&p);
  return out;
}

}  // namespace crackdet::nn
