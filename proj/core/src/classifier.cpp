#include "crackdet/classifier.hpp"

#include <algorithm>
#include <cstdlib>

#include "crackdet/artifact.hpp"
#include "crackdet/errors.hpp"
#include "crackdet/rng.hpp"

namespace crackdet {

ClassifierModel ClassifierModel::build(const BackboneSpec& spec, Regime regime,
                                       const BuildOptions& opts) {
  find_backbone(spec.name);  // validate against the registry

  ClassifierModel m;
  m.spec_ = spec;
  m.regime_ = regime;
  m.seed_ = opts.seed;
  m.pretrained_ = opts.pretrained;
  m.net_ = std::make_unique<nn::Network>(nn::Shape3{224, 224, 3});

  m.feature_node_ = build_backbone_graph(*m.net_, spec.name);
  m.backbone_param_end_ = m.net_->parameters().size();

  m.gap_node_ = m.net_->add(
      std::make_unique<nn::GlobalAvgPool>("head_gap", /*keepdims=*/false),
      {m.feature_node_});
  m.logits_node_ = m.net_->add(std::make_unique<nn::Dense>("head_dense", 2, true),
                               {m.gap_node_});
  m.probs_node_ = m.net_->add(
      std::make_unique<nn::Activation>("head_softmax", nn::Act::Softmax),
      {m.logits_node_});
  m.net_->finalize(m.probs_node_);

  Rng rng(opts.seed);
  Rng init_rng = rng.fork("init", fnv1a64(spec.name));
  m.net_->init_params(init_rng);

  if (opts.pretrained) {
    std::filesystem::path dir = opts.weights_dir;
    if (dir.empty()) {
      if (const char* env = std::getenv("CRACKDET_WEIGHTS_DIR")) dir = env;
    }
    const std::filesystem::path file = dir / (spec.name + ".tensors");
    if (dir.empty() || !std::filesystem::exists(file))
      throw RegistryError(
          "pretrained weights for " + spec.name + " not found (expected " +
          (dir.empty() ? spec.name + ".tensors under $CRACKDET_WEIGHTS_DIR"
                       : file.string()) +
          "); provide the ImageNet tensor archive or build with pretrained=false");
    auto tensors = read_tensor_archive(file);
    auto params = m.net_->parameters();
    for (size_t i = 0; i < m.backbone_param_end_; ++i) {
      auto it = tensors.find(params[i]->name);
      if (it == tensors.end())
        throw RegistryError("pretrained archive " + file.string() +
                            " misses tensor '" + params[i]->name + "'");
      if (!it->second.same_shape(params[i]->value))
        throw RegistryError("pretrained tensor '" + params[i]->name +
                            "' has shape " + it->second.shape_str() +
                            ", expected " + params[i]->value.shape_str());
      params[i]->value = std::move(it->second);
    }
  }

  m.apply_freeze();
  return m;
}

void ClassifierModel::apply_freeze() {
  auto params = net_->parameters();
  const bool backbone_trainable = regime_ == Regime::Scratch;
  for (size_t i = 0; i < params.size(); ++i)
    params[i]->trainable = i < backbone_param_end_ ? backbone_trainable : true;
}

void ClassifierModel::set_regime(Regime regime) {
  regime_ = regime;
  apply_freeze();
}

void ClassifierModel::set_class_order(const std::array<Label, 2>& order) {
  if (order[0] == order[1]) throw ArtifactError("class_order must name both classes");
  class_order_ = order;
}

std::vector<ClassifierModel::Prediction> ClassifierModel::predict(
    const Tensor& preprocessed, PreprocessMode claimed) {
  if (claimed != spec_.preprocess)
    throw ConfigError("preprocessing-mode mismatch: model " + spec_.name +
                      " records " + to_string(spec_.preprocess) +
                      " but input claims " + to_string(claimed));
  const int batch = preprocessed.dim(0);
  net_->infer(preprocessed, std::array<int, 1>{feature_node_});

  const Tensor& probs = net_->activation(probs_node_);
  const Tensor& feats = net_->activation(feature_node_);
  const auto fs = feature_shape();
  const size_t per_sample = static_cast<size_t>(fs.h) * fs.w * fs.c;

  // Map network output unit i onto canonical index class_order_[i].
  const int unit_of_crack = class_order_[0] == Label::Crack ? 0 : 1;

  std::vector<Prediction> out(static_cast<size_t>(batch));
  for (int n = 0; n < batch; ++n) {
    Prediction& p = out[static_cast<size_t>(n)];
    p.probs[1] = probs.at(n, unit_of_crack);
    p.probs[0] = probs.at(n, 1 - unit_of_crack);
    p.label = p.probs[1] >= p.probs[0] ? Label::Crack : Label::NoCrack;
    p.feature_maps = Tensor({fs.h, fs.w, fs.c});
    std::copy_n(feats.data() + static_cast<size_t>(n) * per_sample, per_sample,
                p.feature_maps.data());
  }
  return out;
}

ClassifierModel::Prediction ClassifierModel::predict_one(const Tensor& preprocessed,
                                                         PreprocessMode claimed) {
  if (preprocessed.dim(0) != 1)
    throw ShapeError("predict_one expects a single-sample batch");
  return predict(preprocessed, claimed)[0];
}

Tensor ClassifierModel::head_weights() const {
  const auto params = net_->parameters();
  const Tensor& w = params[backbone_param_end_]->value;  // head_dense.w [C,2]
  Tensor out(w.shape());
  const int c_rows = w.dim(0);
  const int unit_of_crack = class_order_[0] == Label::Crack ? 0 : 1;
  for (int r = 0; r < c_rows; ++r) {
    out.at(r, 1) = w.at(r, unit_of_crack);
    out.at(r, 0) = w.at(r, 1 - unit_of_crack);
  }
  return out;
}

std::array<float, 2> ClassifierModel::head_bias() const {
  const auto params = net_->parameters();
  const Tensor& b = params[backbone_param_end_ + 1]->value;
  const int unit_of_crack = class_order_[0] == Label::Crack ? 0 : 1;
  return {b[static_cast<size_t>(1 - unit_of_crack)], b[static_cast<size_t>(unit_of_crack)]};
}

int ClassifierModel::feature_width() const {
  return net_->node_shape(feature_node_).c;
}

size_t ClassifierModel::parameter_count() const {
  size_t n = 0;
  for (const auto* p : net_->parameters())
    if (p->optimizable) n += p->value.size();
  return n;
}

size_t ClassifierModel::trainable_parameter_count() const {
  size_t n = 0;
  for (const auto* p : net_->parameters())
    if (p->optimizable && p->trainable) n += p->value.size();
  return n;
}

uint64_t ClassifierModel::backbone_checksum() const {
  uint64_t h = 0xcbf29ce484222325ull;
  const auto params = net_->parameters();
  for (size_t i = 0; i < backbone_param_end_; ++i) h = bit_checksum(params[i]->value, h);
  return h;
}

}  // namespace crackdet
