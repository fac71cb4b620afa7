#pragma once

#include <stdexcept>
#include <string>

namespace crackdet {

// Error categories map 1:1 onto CLI exit codes; keep the list in sync with
// tools/crackdet.cpp.
enum class ErrorCategory {
  Config = 3,    // missing/invalid inputs, bad directory layout
  Data = 4,      // dataset content problems (deficits, duplicates, decode)
  Registry = 5,  // unknown backbone, missing pretrained weights
  Artifact = 6,  // model artifact malformed or inconsistent
  Train = 7,     // training preconditions or NaN loss
  Shape = 8,     // tensor dimension mismatches
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const { return category_; }
  const char* category_name() const {
    switch (category_) {
      case ErrorCategory::Config: return "config";
      case ErrorCategory::Data: return "data";
      case ErrorCategory::Registry: return "registry";
      case ErrorCategory::Artifact: return "artifact";
      case ErrorCategory::Train: return "train";
      case ErrorCategory::Shape: return "shape";
    }
    return "unknown";
  }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorCategory::Config, m) {}
};
struct DataError : Error {
  explicit DataError(const std::string& m) : Error(ErrorCategory::Data, m) {}
};
struct RegistryError : Error {
  explicit RegistryError(const std::string& m) : Error(ErrorCategory::Registry, m) {}
};
struct ArtifactError : Error {
  explicit ArtifactError(const std::string& m) : Error(ErrorCategory::Artifact, m) {}
};
struct TrainError : Error {
  explicit TrainError(const std::string& m) : Error(ErrorCategory::Train, m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error(ErrorCategory::Shape, m) {}
};

}  // namespace crackdet
