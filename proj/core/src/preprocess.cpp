#include "crackdet/preprocess.hpp"

#include <algorithm>

#include "crackdet/errors.hpp"

namespace crackdet {

const char* to_string(PreprocessMode m) {
  switch (m) {
    case PreprocessMode::BgrCentered: return "bgr_centered";
    case PreprocessMode::SymmetricUnit: return "symmetric_unit";
    case PreprocessMode::UnitImagenetNorm: return "unit_imagenet_norm";
  }
  return "?";
}

std::optional<PreprocessMode> parse_preprocess_mode(const std::string& s) {
  if (s == "bgr_centered") return PreprocessMode::BgrCentered;
  if (s == "symmetric_unit") return PreprocessMode::SymmetricUnit;
  if (s == "unit_imagenet_norm") return PreprocessMode::UnitImagenetNorm;
  return std::nullopt;
}

namespace {
void check_rgb(const Tensor& t) {
  if (t.rank() != 4 || t.dim(3) != 3)
    throw ShapeError("preprocess expects [N,H,W,3], got " + t.shape_str());
}
}  // namespace

Tensor preprocess(const Tensor& rgb, PreprocessMode mode, const PreprocessConstants& k,
                  const PreprocessOptions& opt) {
  check_rgb(rgb);
  const int n = rgb.dim(0), h = rgb.dim(1), w = rgb.dim(2);
  Tensor out({n, h, w, 3});
  switch (mode) {
    case PreprocessMode::BgrCentered:
      for (int i = 0; i < n; ++i)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
              out.at(i, y, x, c) = rgb.at(i, y, x, 2 - c) - k.bgr_mean[static_cast<size_t>(c)];
      break;
    case PreprocessMode::SymmetricUnit:
      if (opt.per_image_minmax) {
        for (int i = 0; i < n; ++i) {
          float lo = 255.0f, hi = 0.0f;
          for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
              for (int c = 0; c < 3; ++c) {
                lo = std::min(lo, rgb.at(i, y, x, c));
                hi = std::max(hi, rgb.at(i, y, x, c));
              }
          const float span = hi > lo ? hi - lo : 1.0f;
          for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
              for (int c = 0; c < 3; ++c)
                out.at(i, y, x, c) = (rgb.at(i, y, x, c) - lo) / span * 2.0f - 1.0f;
        }
      } else {
        const float* src = rgb.data();
        float* dst = out.data();
        for (size_t i = 0; i < rgb.size(); ++i) dst[i] = src[i] / 127.5f - 1.0f;
      }
      break;
    case PreprocessMode::UnitImagenetNorm:
      for (int i = 0; i < n; ++i)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
              out.at(i, y, x, c) = (rgb.at(i, y, x, c) / 255.0f - k.rgb_mean[static_cast<size_t>(c)]) /
                                   k.rgb_std[static_cast<size_t>(c)];
      break;
  }
  return out;
}

Tensor depreprocess(const Tensor& t, PreprocessMode mode, const PreprocessConstants& k) {
  check_rgb(t);
  const int n = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out({n, h, w, 3});
  switch (mode) {
    case PreprocessMode::BgrCentered:
      for (int i = 0; i < n; ++i)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
              out.at(i, y, x, 2 - c) = t.at(i, y, x, c) + k.bgr_mean[static_cast<size_t>(c)];
      break;
    case PreprocessMode::SymmetricUnit: {
      const float* src = t.data();
      float* dst = out.data();
      for (size_t i = 0; i < t.size(); ++i) dst[i] = (src[i] + 1.0f) * 127.5f;
      break;
    }
    case PreprocessMode::UnitImagenetNorm:
      for (int i = 0; i < n; ++i)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
              out.at(i, y, x, c) = (t.at(i, y, x, c) * k.rgb_std[static_cast<size_t>(c)] +
                                    k.rgb_mean[static_cast<size_t>(c)]) * 255.0f;
      break;
  }
  return out;
}

}  // namespace crackdet
