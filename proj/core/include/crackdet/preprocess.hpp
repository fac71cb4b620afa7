#pragma once

#include <array>
#include <optional>
#include <string>

#include "crackdet/tensor.hpp"

namespace crackdet {

// Pixel transform families expected by the backbone architectures:
//   BgrCentered       RGB->BGR swap, per-channel ImageNet mean subtracted, no scaling
//   SymmetricUnit     affine map of [0,255] onto [-1,1]
//   UnitImagenetNorm  x/255 then per-channel ImageNet standardization
enum class PreprocessMode { BgrCentered, SymmetricUnit, UnitImagenetNorm };

const char* to_string(PreprocessMode m);
std::optional<PreprocessMode> parse_preprocess_mode(const std::string& s);

// Pinned channel statistics. The BGR means are the classic Caffe ImageNet
// values; the unit-scale mean/std are the canonical per-channel RGB stats.
struct PreprocessConstants {
  std::array<float, 3> bgr_mean{103.939f, 116.779f, 123.68f};
  std::array<float, 3> rgb_mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> rgb_std{0.229f, 0.224f, 0.225f};
};

struct PreprocessOptions {
  // Alternative reading of "scaled between -1 and 1, sample-wise": per-image
  // min/max instead of the fixed affine. Off by default.
  bool per_image_minmax = false;
};

// input: [N,H,W,3] RGB floats in [0,255]. Pure and deterministic.
Tensor preprocess(const Tensor& rgb, PreprocessMode mode,
                  const PreprocessConstants& k = {},
                  const PreprocessOptions& opt = {});

// Inverse affine map back to RGB [0,255]; defined for the fixed-affine modes.
Tensor depreprocess(const Tensor& t, PreprocessMode mode,
                    const PreprocessConstants& k = {});

}  // namespace crackdet
