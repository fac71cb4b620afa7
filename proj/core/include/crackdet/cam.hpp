#pragma once

#include "crackdet/image.hpp"
#include "crackdet/tensor.hpp"

namespace crackdet {

enum class UpsampleConvention { CornerAligned, HalfPixel };

// Attention map for one class: the final dense layer's weights projected onto
// the pre-pool feature maps, plus its bilinear upsample to image size.
struct AttentionMap {
  Tensor raw;   // [H',W']
  Tensor full;  // [H,W]
  int class_index = 1;
  float raw_min = 0.0f;
  float raw_max = 0.0f;
};

// raw[y][x] = sum_c feature_maps[y][x][c] * head_weights[c][class_index].
// The head bias is spatially constant and excluded.
Tensor compute_cam(const Tensor& feature_maps /*[H',W',C]*/,
                   const Tensor& head_weights /*[C,K]*/, int class_index);

// Upsample a [H',W'] field to [H,W]; corner-aligned by default, so grid
// points map exactly and extrema never overshoot.
Tensor upsample_bilinear(const Tensor& raw, int out_h, int out_w,
                         UpsampleConvention conv = UpsampleConvention::CornerAligned);

AttentionMap make_attention_map(const Tensor& feature_maps, const Tensor& head_weights,
                                int class_index, int out_h, int out_w,
                                UpsampleConvention conv = UpsampleConvention::CornerAligned);

// Min-max normalizes the map, then blends pixels whose normalized intensity
// exceeds `threshold` toward red with opacity alpha * intensity. A constant
// map normalizes to all-zero and leaves the image untouched.
ImageU8 overlay(const ImageU8& image, const Tensor& full_map, float threshold = 0.5f,
                float alpha = 0.6f);

Tensor minmax_normalize(const Tensor& field);

}  // namespace crackdet
