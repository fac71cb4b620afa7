#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "crackdet/tensor.hpp"

namespace crackdet {

// 8-bit RGB image, row-major HWC. All file IO goes through OpenCV; everything
// numeric downstream works on this struct or on float Tensors.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;  // height*width*3, RGB

  uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return pixels.empty(); }
};

// Decode any OpenCV-readable file as RGB. nullopt if undecodable.
std::optional<ImageU8> load_image(const std::filesystem::path& path);
// Decode only enough to report dimensions. nullopt if undecodable.
std::optional<std::pair<int, int>> probe_image_size(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const ImageU8& img);

// Bilinear resize (used at ingestion when a source patch is not 224x224).
ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w);

// [1,H,W,3] float tensor with values in [0,255].
Tensor to_tensor(const ImageU8& img);
// Inverse of to_tensor with rounding and clamping.
ImageU8 to_image(const Tensor& t);

}  // namespace crackdet
