#include "crackdet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crackdet/errors.hpp"

namespace crackdet {

namespace {

void check_image(const Tensor& img) {
  if (img.rank() != 4 || img.dim(0) != 1 || img.dim(3) != 3)
    throw ShapeError("augment expects [1,H,W,3], got " + img.shape_str());
}

inline float clamp255(float v) { return std::clamp(v, 0.0f, 255.0f); }

// Reflect index into [0, n) without repeating the border pixel.
inline int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

}  // namespace

Tensor flip_horizontal(const Tensor& img) {
  check_image(img);
  const int h = img.dim(1), w = img.dim(2);
  Tensor out({1, h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(0, y, x, c) = img.at(0, y, w - 1 - x, c);
  return out;
}

Tensor flip_vertical(const Tensor& img) {
  check_image(img);
  const int h = img.dim(1), w = img.dim(2);
  Tensor out({1, h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(0, y, x, c) = img.at(0, h - 1 - y, x, c);
  return out;
}

Tensor rotate(const Tensor& img, float degrees) {
  check_image(img);
  if (degrees == 0.0f) return img;
  const int h = img.dim(1), w = img.dim(2);
  Tensor out({1, h, w, 3});
  const float rad = degrees * std::numbers::pi_v<float> / 180.0f;
  const float cs = std::cos(rad), sn = std::sin(rad);
  const float cy = (h - 1) * 0.5f, cx = (w - 1) * 0.5f;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Inverse mapping: rotate destination back into source space.
      const float dy = y - cy, dx = x - cx;
      const float sx = cs * dx + sn * dy + cx;
      const float sy = -sn * dx + cs * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const float fx = sx - x0, fy = sy - y0;
      const int xa = reflect(x0, w), xb = reflect(x0 + 1, w);
      const int ya = reflect(y0, h), yb = reflect(y0 + 1, h);
      for (int c = 0; c < 3; ++c) {
        const float top = img.at(0, ya, xa, c) * (1 - fx) + img.at(0, ya, xb, c) * fx;
        const float bot = img.at(0, yb, xa, c) * (1 - fx) + img.at(0, yb, xb, c) * fx;
        out.at(0, y, x, c) = clamp255(top * (1 - fy) + bot * fy);
      }
    }
  }
  return out;
}

Tensor adjust_brightness(const Tensor& img, float factor) {
  check_image(img);
  Tensor out = img;
  for (float& v : out.flat()) v = clamp255(v * factor);
  return out;
}

Tensor adjust_contrast(const Tensor& img, float factor) {
  check_image(img);
  double sum = 0;
  for (float v : img.flat()) sum += v;
  const float mean = static_cast<float>(sum / static_cast<double>(img.size()));
  Tensor out = img;
  for (float& v : out.flat()) v = clamp255((v - mean) * factor + mean);
  return out;
}

Tensor adjust_saturation(const Tensor& img, float factor) {
  check_image(img);
  const int h = img.dim(1), w = img.dim(2);
  Tensor out({1, h, w, 3});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float r = img.at(0, y, x, 0), g = img.at(0, y, x, 1), b = img.at(0, y, x, 2);
      const float gray = 0.299f * r + 0.587f * g + 0.114f * b;
      out.at(0, y, x, 0) = clamp255(gray + (r - gray) * factor);
      out.at(0, y, x, 1) = clamp255(gray + (g - gray) * factor);
      out.at(0, y, x, 2) = clamp255(gray + (b - gray) * factor);
    }
  }
  return out;
}

Tensor augment(const Tensor& img, const AugmentationPolicy& policy, Rng& rng) {
  check_image(img);
  if (policy.is_identity()) return img;

  Tensor out = img;
  if (policy.hflip && rng.bernoulli(0.5)) out = flip_horizontal(out);
  if (policy.vflip && rng.bernoulli(0.5)) out = flip_vertical(out);
  if (policy.ninety_only) {
    const int k = static_cast<int>(rng.uniform_int(4));
    if (k > 0) out = rotate(out, 90.0f * k);
  } else if (policy.rotation_deg > 0.0f) {
    out = rotate(out, rng.uniform_f(-policy.rotation_deg, policy.rotation_deg));
  }
  if (policy.jitter.brightness > 0.0f)
    out = adjust_brightness(out, 1.0f + rng.uniform_f(-policy.jitter.brightness,
                                                      policy.jitter.brightness));
  if (policy.jitter.contrast > 0.0f)
    out = adjust_contrast(out, 1.0f + rng.uniform_f(-policy.jitter.contrast,
                                                    policy.jitter.contrast));
  if (policy.jitter.saturation > 0.0f)
    out = adjust_saturation(out, 1.0f + rng.uniform_f(-policy.jitter.saturation,
                                                      policy.jitter.saturation));
  return out;
}

ImageU8 load_sample_rgb(const ImageSample& sample, int side) {
  auto img = load_image(sample.path);
  if (!img) throw DataError("undecodable image: " + sample.path.string());
  if (img->height != side || img->width != side)
    return resize_bilinear(*img, side, side);
  return *img;
}

}  // namespace crackdet
