#include <doctest.h>

#include <cmath>

#include "crackdet/errors.hpp"
#include "crackdet/preprocess.hpp"
#include "crackdet/rng.hpp"

using namespace crackdet;

namespace {

Tensor constant_image(float value, int side = 4) {
  Tensor t({1, side, side, 3});
  t.fill(value);
  return t;
}

Tensor pixel_image(float r, float g, float b) {
  Tensor t({1, 1, 1, 3});
  t[0] = r;
  t[1] = g;
  t[2] = b;
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("preprocess");

TEST_CASE("symmetric unit maps the endpoints onto -1 and +1") {
  const Tensor hi = preprocess(constant_image(255.0f), PreprocessMode::SymmetricUnit);
  const Tensor lo = preprocess(constant_image(0.0f), PreprocessMode::SymmetricUnit);
  for (float v : hi.flat()) CHECK(v == doctest::Approx(1.0f));
  for (float v : lo.flat()) CHECK(v == doctest::Approx(-1.0f));
}

TEST_CASE("symmetric unit output always lies in [-1, 1]") {
  Rng rng(5);
  Tensor img({2, 8, 8, 3});
  for (float& v : img.flat()) v = rng.uniform_f(0.0f, 255.0f);
  const Tensor out = preprocess(img, PreprocessMode::SymmetricUnit);
  for (float v : out.flat()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("bgr centering maps the reference means onto zero, in BGR order") {
  const PreprocessConstants k;
  // RGB pixel assembled from the (B,G,R) means.
  const Tensor img = pixel_image(k.bgr_mean[2], k.bgr_mean[1], k.bgr_mean[0]);
  const Tensor out = preprocess(img, PreprocessMode::BgrCentered, k);
  for (float v : out.flat()) CHECK(v == doctest::Approx(0.0f).epsilon(1e-5));
}

TEST_CASE("bgr centering swaps channels 0 and 2 exactly") {
  // Channel impulse: pure red input must land in output channel 2.
  const Tensor img = pixel_image(200.0f, 0.0f, 0.0f);
  const PreprocessConstants k;
  const Tensor out = preprocess(img, PreprocessMode::BgrCentered, k);
  CHECK(out[0] == doctest::Approx(0.0f - k.bgr_mean[0]));
  CHECK(out[1] == doctest::Approx(0.0f - k.bgr_mean[1]));
  CHECK(out[2] == doctest::Approx(200.0f - k.bgr_mean[2]));
}

TEST_CASE("imagenet-normalized pixel (124,116,104) sits near the origin") {
  const Tensor img = pixel_image(124.0f, 116.0f, 104.0f);
  const Tensor out = preprocess(img, PreprocessMode::UnitImagenetNorm);
  for (float v : out.flat()) CHECK(std::abs(v) < 0.05f);
}

TEST_CASE("preprocess is pure: identical inputs give bit-identical outputs") {
  Rng rng(6);
  Tensor img({1, 16, 16, 3});
  for (float& v : img.flat()) v = rng.uniform_f(0.0f, 255.0f);
  for (auto mode : {PreprocessMode::BgrCentered, PreprocessMode::SymmetricUnit,
                    PreprocessMode::UnitImagenetNorm}) {
    const Tensor a = preprocess(img, mode);
    const Tensor b = preprocess(img, mode);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("de-preprocess inverts the affine map within 1e-6") {
  Rng rng(7);
  Tensor img({1, 8, 8, 3});
  for (float& v : img.flat()) v = rng.uniform_f(0.0f, 255.0f);
  for (auto mode : {PreprocessMode::BgrCentered, PreprocessMode::SymmetricUnit,
                    PreprocessMode::UnitImagenetNorm}) {
    const Tensor back = depreprocess(preprocess(img, mode), mode);
    for (size_t i = 0; i < img.size(); ++i)
      CHECK(back[i] == doctest::Approx(img[i]).epsilon(1e-6).scale(255.0));
  }
}

TEST_CASE("per-image min/max variant spans exactly [-1, 1]") {
  Rng rng(8);
  Tensor img({1, 8, 8, 3});
  for (float& v : img.flat()) v = rng.uniform_f(40.0f, 200.0f);
  PreprocessOptions opt;
  opt.per_image_minmax = true;
  const Tensor out = preprocess(img, PreprocessMode::SymmetricUnit, {}, opt);
  float lo = 1e9f, hi = -1e9f;
  for (float v : out.flat()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(-1.0f));
  CHECK(hi == doctest::Approx(1.0f));
}

TEST_CASE("wrong channel count is a shape error") {
  Tensor gray({1, 4, 4, 1});
  CHECK_THROWS_AS(preprocess(gray, PreprocessMode::SymmetricUnit), ShapeError);
}

TEST_SUITE_END();
