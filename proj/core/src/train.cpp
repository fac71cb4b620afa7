#include "crackdet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crackdet/errors.hpp"
#include "crackdet/nn/loss.hpp"
#include "crackdet/nn/optimizer.hpp"
#include "crackdet/preprocess.hpp"

using nlohmann::json;

namespace crackdet {

void TrainConfig::validate() const {
  if (epochs < 1) throw TrainError("epochs must be >= 1");
  if (batch_size < 1) throw TrainError("batch_size must be >= 1");
  if (!(val_fraction > 0.0f && val_fraction < 1.0f))
    throw TrainError("val_fraction must lie in (0,1)");
  if (!(lr_factor > 0.0f && lr_factor < 1.0f))
    throw TrainError("lr_factor must lie in (0,1)");
  if (lr_patience < 1) throw TrainError("lr_patience must be >= 1");
}

std::string TrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["val_fraction"] = val_fraction;
  j["lr_patience"] = lr_patience;
  j["lr_factor"] = lr_factor;
  j["min_lr"] = min_lr;
  j["improvement_eps"] = improvement_eps;
  j["seed"] = seed;
  j["augment"] = augment;
  j["augmentation"] = {{"hflip", augmentation.hflip},
                       {"vflip", augmentation.vflip},
                       {"brightness", augmentation.jitter.brightness},
                       {"contrast", augmentation.jitter.contrast},
                       {"saturation", augmentation.jitter.saturation},
                       {"rotation_deg", augmentation.rotation_deg},
                       {"ninety_only", augmentation.ninety_only}};
  return j.dump(2);
}

TrainConfig TrainConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open train config: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("malformed train config: " + std::string(e.what()));
  }
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.val_fraction = j.value("val_fraction", c.val_fraction);
  c.lr_patience = j.value("lr_patience", c.lr_patience);
  c.lr_factor = j.value("lr_factor", c.lr_factor);
  c.min_lr = j.value("min_lr", c.min_lr);
  c.improvement_eps = j.value("improvement_eps", c.improvement_eps);
  c.seed = j.value("seed", c.seed);
  c.augment = j.value("augment", c.augment);
  if (j.contains("augmentation")) {
    const auto& a = j["augmentation"];
    c.augmentation.hflip = a.value("hflip", c.augmentation.hflip);
    c.augmentation.vflip = a.value("vflip", c.augmentation.vflip);
    c.augmentation.jitter.brightness = a.value("brightness", c.augmentation.jitter.brightness);
    c.augmentation.jitter.contrast = a.value("contrast", c.augmentation.jitter.contrast);
    c.augmentation.jitter.saturation = a.value("saturation", c.augmentation.jitter.saturation);
    c.augmentation.rotation_deg = a.value("rotation_deg", c.augmentation.rotation_deg);
    c.augmentation.ninety_only = a.value("ninety_only", c.augmentation.ninety_only);
  }
  return c;
}

std::string TrainConfig::digest() const {
  std::ostringstream os;
  os << std::hex << fnv1a64(to_json());
  return os.str();
}

PlateauScheduler::PlateauScheduler(float initial_lr, int patience, float factor,
                                   float min_lr, float eps)
    : lr_(initial_lr), factor_(factor), min_lr_(min_lr), eps_(eps),
      patience_(patience), best_(std::numeric_limits<float>::infinity()) {}

float PlateauScheduler::on_epoch_end(float val_loss) {
  if (val_loss < best_ - eps_) {
    best_ = val_loss;
    wait_ = 0;
    return lr_;
  }
  if (++wait_ >= patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    ++reductions_;
    wait_ = 0;
  }
  return lr_;
}

namespace {

struct LoadedSet {
  std::vector<Tensor> images;  // [1,224,224,3] float RGB in [0,255]
  std::vector<int> labels;
};

LoadedSet load_set(const std::vector<ImageSample>& samples) {
  LoadedSet set;
  set.images.reserve(samples.size());
  for (const auto& s : samples) {
    set.images.push_back(to_tensor(load_sample_rgb(s)));
    set.labels.push_back(static_cast<int>(s.label));
  }
  return set;
}

// Inference-mode loss/accuracy over a set.
std::pair<float, float> evaluate_set(ClassifierModel& model, const LoadedSet& set,
                                     const PreprocessConstants& constants,
                                     int batch_size) {
  const PreprocessMode mode = model.spec().preprocess;
  auto& net = model.network();
  double loss_sum = 0.0;
  int correct = 0;
  const int total = static_cast<int>(set.images.size());
  for (int start = 0; start < total; start += batch_size) {
    const int n = std::min(batch_size, total - start);
    Tensor batch({n, 224, 224, 3});
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Tensor& img = set.images[static_cast<size_t>(start + i)];
      std::copy_n(img.data(), img.size(), batch.data() + static_cast<size_t>(i) * img.size());
      labels[static_cast<size_t>(i)] = set.labels[static_cast<size_t>(start + i)];
    }
    const Tensor pre = preprocess(batch, mode, constants);
    net.infer(pre);
    const Tensor& probs = net.activation(net.output_node());
    loss_sum += nn::cce_from_probs(probs, labels) * n;
    for (int i = 0; i < n; ++i) {
      const int pred = probs.at(i, 1) >= probs.at(i, 0) ? 1 : 0;
      if (pred == labels[static_cast<size_t>(i)]) ++correct;
    }
  }
  return {static_cast<float>(loss_sum / total),
          static_cast<float>(correct) / static_cast<float>(total)};
}

std::vector<Tensor> snapshot_params(nn::Network& net) {
  std::vector<Tensor> snap;
  for (const auto* p : net.parameters()) snap.push_back(p->value);
  return snap;
}

void restore_params(nn::Network& net, const std::vector<Tensor>& snap) {
  auto params = net.parameters();
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

TrainRecord train(ClassifierModel& model, const TestCaseSplit& split,
                  const TrainConfig& config) {
  config.validate();
  if (split.train.empty()) throw TrainError("training set is empty");
  for (Label l : {Label::Crack, Label::NoCrack}) {
    if (std::none_of(split.train.begin(), split.train.end(),
                     [l](const auto& s) { return s.label == l; }))
      throw TrainError(std::string("training set has no ") + to_string(l) +
                       " samples; a single-class set cannot train a binary head");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const float initial_lr = config.lr > 0.0f ? config.lr : model.spec().default_lr;
  const float min_lr = config.min_lr > 0.0f ? config.min_lr : initial_lr / 100.0f;

  Rng master(config.seed);

  // Stratified validation carve-out from the train portion only.
  std::vector<size_t> by_label[2];
  for (size_t i = 0; i < split.train.size(); ++i)
    by_label[split.train[i].label == Label::Crack ? 1 : 0].push_back(i);
  std::vector<size_t> val_idx, train_idx;
  Rng val_rng = master.fork("val_split");
  for (auto& idx : by_label) {
    val_rng.shuffle(idx);
    size_t n_val = static_cast<size_t>(
        std::lround(config.val_fraction * static_cast<double>(idx.size())));
    n_val = std::min(n_val, idx.size() > 1 ? idx.size() - 1 : size_t{0});
    if (n_val == 0 && idx.size() > 1) n_val = 1;
    for (size_t i = 0; i < idx.size(); ++i)
      (i < n_val ? val_idx : train_idx).push_back(idx[i]);
  }
  if (val_idx.empty())
    throw TrainError("validation split is empty; provide at least two samples per label");
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  std::vector<ImageSample> train_samples, val_samples;
  for (size_t i : train_idx) train_samples.push_back(split.train[i]);
  for (size_t i : val_idx) val_samples.push_back(split.train[i]);

  LoadedSet train_set = load_set(train_samples);
  LoadedSet val_set = load_set(val_samples);

  auto& net = model.network();
  auto params = net.parameters();
  auto optimizer = nn::make_optimizer(model.spec().optimizer, initial_lr);
  PlateauScheduler scheduler(initial_lr, config.lr_patience, config.lr_factor,
                             min_lr, config.improvement_eps);
  const PreprocessMode mode = model.spec().preprocess;
  const auto& constants = model.preprocess_constants();

  TrainRecord record;
  float best_val = std::numeric_limits<float>::infinity();
  std::vector<Tensor> best_snapshot;

  std::vector<size_t> order(train_set.images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng epoch_rng = master.fork("epoch", static_cast<uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double loss_sum = 0.0;
    int correct = 0;
    const int total = static_cast<int>(order.size());
    const float epoch_lr = scheduler.lr();
    optimizer->set_lr(epoch_lr);

    for (int start = 0; start < total; start += config.batch_size) {
      const int n = std::min(config.batch_size, total - start);
      Tensor batch({n, 224, 224, 3});
      std::vector<int> labels(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        const size_t idx = order[static_cast<size_t>(start + i)];
        Tensor img = train_set.images[idx];
        if (config.augment && !config.augmentation.is_identity()) {
          Rng draw = master.fork("augment",
                                 (static_cast<uint64_t>(epoch) << 32) | idx);
          img = augment(img, config.augmentation, draw);
        }
        std::copy_n(img.data(), img.size(),
                    batch.data() + static_cast<size_t>(i) * img.size());
        labels[static_cast<size_t>(i)] = train_set.labels[idx];
      }
      const Tensor pre = preprocess(batch, mode, constants);

      net.forward_train(pre);
      const Tensor& logits = net.activation(model.logits_node());
      auto batch_loss = nn::softmax_cce(logits, labels, /*want_grad=*/true);
      if (!std::isfinite(batch_loss.loss))
        throw TrainError("loss became non-finite at epoch " + std::to_string(epoch + 1) +
                         " (lr " + std::to_string(epoch_lr) + "); aborting");
      loss_sum += static_cast<double>(batch_loss.loss) * n;
      correct += batch_loss.correct;

      net.zero_grads();
      net.backward_from(model.logits_node(), batch_loss.dlogits);
      optimizer->step(params);
      net.release_activations();
    }

    auto [val_loss, val_acc] = evaluate_set(model, val_set, constants, config.batch_size);
    if (!std::isfinite(val_loss))
      throw TrainError("validation loss became non-finite at epoch " +
                       std::to_string(epoch + 1) + "; aborting");

    EpochStats stats;
    stats.train_loss = static_cast<float>(loss_sum / total);
    stats.train_acc = static_cast<float>(correct) / static_cast<float>(total);
    stats.val_loss = val_loss;
    stats.val_acc = val_acc;
    stats.lr = epoch_lr;
    record.epochs.push_back(stats);

    if (val_loss < best_val) {
      best_val = val_loss;
      record.best_epoch = epoch;
      best_snapshot = snapshot_params(net);
    }
    scheduler.on_epoch_end(val_loss);
  }

  if (!best_snapshot.empty()) restore_params(net, best_snapshot);
  record.best_val_loss = best_val;
  record.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

void write_record_json(const TrainRecord& record, const std::filesystem::path& path) {
  json j;
  j["wall_time_seconds"] = record.wall_time_seconds;
  j["best_epoch"] = record.best_epoch;
  j["best_val_loss"] = record.best_val_loss;
  json epochs = json::array();
  for (const auto& e : record.epochs) {
    epochs.push_back({{"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc},
                      {"lr", e.lr}});
  }
  j["epochs"] = epochs;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace crackdet
