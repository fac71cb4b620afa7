#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "crackdet/classifier.hpp"

namespace crackdet {

// Model artifact = directory { weights.tensors, metadata.json }.
// metadata.json records backbone, preprocess mode + constants, regime,
// class_order, seed, training_config_digest and created_at; load() refuses
// artifacts whose weights disagree with the declared architecture.
void save_artifact(const ClassifierModel& model, const std::filesystem::path& dir,
                   const std::string& training_config_digest = "");

ClassifierModel load_artifact_model(const std::filesystem::path& dir);

// Bare tensor archive helpers (also used for pretrained backbone weights).
void write_tensor_archive(const std::filesystem::path& path,
                          const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> read_tensor_archive(const std::filesystem::path& path);

}  // namespace crackdet
