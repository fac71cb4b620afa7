#include "crackdet/cam.hpp"

#include <algorithm>
#include <cmath>

#include "crackdet/errors.hpp"

namespace crackdet {

Tensor compute_cam(const Tensor& feature_maps, const Tensor& head_weights,
                   int class_index) {
  if (feature_maps.rank() != 3)
    throw ShapeError("compute_cam expects [H',W',C] feature maps, got " +
                     feature_maps.shape_str());
  if (head_weights.rank() != 2 || head_weights.dim(0) != feature_maps.dim(2))
    throw ShapeError("head weights " + head_weights.shape_str() +
                     " do not match feature channels " + feature_maps.shape_str());
  if (class_index < 0 || class_index >= head_weights.dim(1))
    throw ShapeError("class_index out of range");

  const int h = feature_maps.dim(0), w = feature_maps.dim(1), c = feature_maps.dim(2);
  const int k = head_weights.dim(1);
  Tensor out({h, w});
  const float* f = feature_maps.data();
  const float* wts = head_weights.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* pix = f + (static_cast<size_t>(y) * w + x) * c;
      float acc = 0.0f;
      for (int i = 0; i < c; ++i) acc += pix[i] * wts[static_cast<size_t>(i) * k + class_index];
      out.at(y, x) = acc;
    }
  }
  return out;
}

Tensor upsample_bilinear(const Tensor& raw, int out_h, int out_w,
                         UpsampleConvention conv) {
  if (raw.rank() != 2) throw ShapeError("upsample expects [H,W], got " + raw.shape_str());
  const int in_h = raw.dim(0), in_w = raw.dim(1);
  if (in_h < 1 || in_w < 1) throw ShapeError("upsample: zero-sized input");
  if (out_h < in_h || out_w < in_w)
    throw ShapeError("upsample target smaller than source");
  if (out_h == in_h && out_w == in_w) return raw;

  Tensor out({out_h, out_w});
  const bool corner = conv == UpsampleConvention::CornerAligned;
  const float sy = corner
                       ? (out_h > 1 ? static_cast<float>(in_h - 1) / (out_h - 1) : 0.0f)
                       : static_cast<float>(in_h) / out_h;
  const float sx = corner
                       ? (out_w > 1 ? static_cast<float>(in_w - 1) / (out_w - 1) : 0.0f)
                       : static_cast<float>(in_w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    float fy = corner ? y * sy : (y + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, static_cast<float>(in_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      float fx = corner ? x * sx : (x + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, static_cast<float>(in_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const float wx = fx - x0;
      const float top = raw.at(y0, x0) * (1.0f - wx) + raw.at(y0, x1) * wx;
      const float bot = raw.at(y1, x0) * (1.0f - wx) + raw.at(y1, x1) * wx;
      out.at(y, x) = top * (1.0f - wy) + bot * wy;
    }
  }
  return out;
}

AttentionMap make_attention_map(const Tensor& feature_maps, const Tensor& head_weights,
                                int class_index, int out_h, int out_w,
                                UpsampleConvention conv) {
  AttentionMap map;
  map.class_index = class_index;
  map.raw = compute_cam(feature_maps, head_weights, class_index);
  float lo = map.raw[0], hi = map.raw[0];
  for (float v : map.raw.flat()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  map.raw_min = lo;
  map.raw_max = hi;
  map.full = upsample_bilinear(map.raw, out_h, out_w, conv);
  return map;
}

Tensor minmax_normalize(const Tensor& field) {
  Tensor out(field.shape());
  if (field.size() == 0) return out;
  float lo = field[0], hi = field[0];
  for (float v : field.flat()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) return out;  // constant field -> all zero
  const float inv = 1.0f / (hi - lo);
  for (size_t i = 0; i < field.size(); ++i) out[i] = (field[i] - lo) * inv;
  return out;
}

ImageU8 overlay(const ImageU8& image, const Tensor& full_map, float threshold,
                float alpha) {
  if (full_map.rank() != 2 || full_map.dim(0) != image.height ||
      full_map.dim(1) != image.width)
    throw ShapeError("overlay: map " + full_map.shape_str() + " does not match image " +
                     std::to_string(image.height) + "x" + std::to_string(image.width));
  const Tensor norm = minmax_normalize(full_map);
  ImageU8 out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const float s = norm.at(y, x);
      if (s <= threshold) continue;
      const float f = std::clamp(alpha * s, 0.0f, 1.0f);
      const float r = static_cast<float>(image.at(y, x, 0));
      const float g = static_cast<float>(image.at(y, x, 1));
      const float b = static_cast<float>(image.at(y, x, 2));
      out.at(y, x, 0) = static_cast<uint8_t>(std::lround(r * (1.0f - f) + 255.0f * f));
      out.at(y, x, 1) = static_cast<uint8_t>(std::lround(g * (1.0f - f)));
      out.at(y, x, 2) = static_cast<uint8_t>(std::lround(b * (1.0f - f)));
    }
  }
  return out;
}

}  // namespace crackdet
