#pragma once

#include "crackdet/dataset.hpp"
#include "crackdet/image.hpp"
#include "crackdet/rng.hpp"
#include "crackdet/tensor.hpp"

namespace crackdet {

struct JitterMagnitudes {
  float brightness = 0.1f;
  float contrast = 0.1f;
  float saturation = 0.1f;
};

struct AugmentationPolicy {
  bool hflip = true;
  bool vflip = true;
  JitterMagnitudes jitter;
  float rotation_deg = 15.0f;   // uniform in [-rotation_deg, +rotation_deg]
  bool ninety_only = false;     // rotate by a random multiple of 90 deg instead
  uint64_t seed = 0;

  static AugmentationPolicy identity() {
    AugmentationPolicy p;
    p.hflip = p.vflip = false;
    p.jitter = {0.0f, 0.0f, 0.0f};
    p.rotation_deg = 0.0f;
    return p;
  }
  bool is_identity() const {
    return !hflip && !vflip && rotation_deg == 0.0f && jitter.brightness == 0.0f &&
           jitter.contrast == 0.0f && jitter.saturation == 0.0f;
  }
};

// Deterministic primitives over [1,H,W,3] tensors with values in [0,255].
Tensor flip_horizontal(const Tensor& img);
Tensor flip_vertical(const Tensor& img);
// Rotation about the image center, bilinear sampling, reflection padding.
Tensor rotate(const Tensor& img, float degrees);
Tensor adjust_brightness(const Tensor& img, float factor);  // v * factor
Tensor adjust_contrast(const Tensor& img, float factor);    // (v - mean) * factor + mean
Tensor adjust_saturation(const Tensor& img, float factor);  // lerp from per-pixel gray

// Apply the policy with draws from `rng`. Shape and value range are
// preserved; the identity policy returns the input bytes unchanged.
Tensor augment(const Tensor& img, const AugmentationPolicy& policy, Rng& rng);

// Decode a sample and resize to 224x224 if the source differs.
ImageU8 load_sample_rgb(const ImageSample& sample, int side = 224);

}  // namespace crackdet
