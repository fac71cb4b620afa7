#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crackdet/augment.hpp"
#include "crackdet/classifier.hpp"
#include "crackdet/dataset.hpp"

namespace crackdet {

struct TrainConfig {
  int epochs = 50;
  float lr = 0.0f;  // <= 0 means "use the backbone's registry default"
  int batch_size = 8;
  float val_fraction = 0.2f;
  int lr_patience = 5;
  float lr_factor = 0.5f;
  float min_lr = 0.0f;  // <= 0 means initial_lr / 100
  float improvement_eps = 1e-4f;
  uint64_t seed = 0;
  bool augment = true;
  AugmentationPolicy augmentation;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json_file(const std::filesystem::path& path);
  // FNV-1a over the canonical JSON form; stored in artifact metadata.
  std::string digest() const;
};

struct EpochStats {
  float train_loss = 0.0f;
  float train_acc = 0.0f;
  float val_loss = 0.0f;
  float val_acc = 0.0f;
  float lr = 0.0f;  // rate in effect during the epoch
};

struct TrainRecord {
  std::vector<EpochStats> epochs;
  double wall_time_seconds = 0.0;
  int best_epoch = -1;  // epoch whose parameters were restored (best val loss)
  float best_val_loss = 0.0f;
};

// Reduce-on-plateau state: an improvement (val_loss < best - eps) resets the
// wait counter; the patience-th consecutive stagnant epoch multiplies the
// rate by `factor`, clamped at `min_lr`.
class PlateauScheduler {
 public:
  PlateauScheduler(float initial_lr, int patience, float factor, float min_lr,
                   float eps = 1e-4f);
  float on_epoch_end(float val_loss);  // returns the (possibly reduced) lr
  float lr() const { return lr_; }
  int reductions() const { return reductions_; }

 private:
  float lr_, factor_, min_lr_, eps_;
  int patience_, wait_ = 0, reductions_ = 0;
  float best_;
};

// Runs the training loop in place: optimizer per the backbone registry (SGD
// for the VGGs, Adam otherwise), categorical cross-entropy, stratified
// validation carve-out, plateau schedule, best-val-loss weights restored.
TrainRecord train(ClassifierModel& model, const TestCaseSplit& split,
                  const TrainConfig& config);

void write_record_json(const TrainRecord& record, const std::filesystem::path& path);

}  // namespace crackdet
