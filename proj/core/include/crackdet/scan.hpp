#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "crackdet/cam.hpp"
#include "crackdet/classifier.hpp"
#include "crackdet/image.hpp"

namespace crackdet {

// Window origins on a step grid, with a final origin flushed against each
// edge when the dimension is not step-aligned. Image must fit the window.
std::vector<std::pair<int, int>> enumerate_windows(int width, int height,
                                                   int window, int step);
std::vector<int> window_axis_positions(int extent, int window, int step);

enum class FusionRule { Mean, Max };

// Accumulation buffers for sliding-window evidence over a full image.
class ScanGrid {
 public:
  ScanGrid(int width, int height, int window, int step,
           FusionRule rule = FusionRule::Mean);

  // Adds one window's [window x window] evidence field at origin (x, y).
  void accumulate(int x, int y, const Tensor& field);

  // Mean rule: evidence / coverage (zero where uncovered). Max rule: the
  // running elementwise max.
  Tensor fused() const;

  const Tensor& evidence() const { return evidence_; }
  int32_t coverage_at(int x, int y) const {
    return coverage_[static_cast<size_t>(y) * width_ + x];
  }
  long long coverage_sum() const;
  int width() const { return width_; }
  int height() const { return height_; }
  int window() const { return window_; }
  int step() const { return step_; }

  // Merge another grid's partial sums (parallel workers).
  void merge(const ScanGrid& other);

 private:
  int width_, height_, window_, step_;
  FusionRule rule_;
  Tensor evidence_;  // [H,W]
  std::vector<int32_t> coverage_;
};

struct WindowPrediction {
  int x = 0, y = 0;
  Label label = Label::NoCrack;
  float prob_crack = 0.0f;
};

struct ScanResult {
  Tensor fused;  // [H,W]
  std::vector<WindowPrediction> per_window;
  ImageU8 overlay;
};

struct ScanOptions {
  int step = 32;
  int window = 224;
  int batch_size = 32;
  FusionRule rule = FusionRule::Mean;
  float threshold = 0.5f;
  float alpha = 0.6f;
  // Optional explicit processing order (indices into enumerate_windows
  // output); used to verify order independence.
  std::vector<int> order;
};

// Slides the model over the image, accumulates the Crack-class CAM of every
// window (upsampled to window size) into a ScanGrid and fuses.
ScanResult scan_image(ClassifierModel& model, const ImageU8& image,
                      const ScanOptions& opts = {});

void write_windows_csv(const std::vector<WindowPrediction>& windows,
                       const std::filesystem::path& path);

}  // namespace crackdet
