#include "crackdet/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

#include "crackdet/errors.hpp"

namespace crackdet {

namespace {

ImageU8 from_mat(const cv::Mat& bgr) {
  ImageU8 img;
  img.height = bgr.rows;
  img.width = bgr.cols;
  img.pixels.resize(static_cast<size_t>(bgr.rows) * bgr.cols * 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      img.at(y, x, 0) = row[x][2];
      img.at(y, x, 1) = row[x][1];
      img.at(y, x, 2) = row[x][0];
    }
  }
  return img;
}

cv::Mat to_mat(const ImageU8& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width; ++x) {
      row[x] = cv::Vec3b(img.at(y, x, 2), img.at(y, x, 1), img.at(y, x, 0));
    }
  }
  return bgr;
}

}  // namespace

std::optional<ImageU8> load_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) return std::nullopt;
  return from_mat(m);
}

std::optional<std::pair<int, int>> probe_image_size(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) return std::nullopt;
  return std::make_pair(m.cols, m.rows);
}

void save_image(const std::filesystem::path& path, const ImageU8& img) {
  if (!cv::imwrite(path.string(), to_mat(img)))
    throw ConfigError("cannot write image: " + path.string());
}

ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w) {
  if (img.height == out_h && img.width == out_w) return img;
  cv::Mat m = to_mat(img);
  cv::Mat out;
  cv::resize(m, out, cv::Size(out_w, out_h), 0, 0, cv::INTER_LINEAR);
  return from_mat(out);
}

Tensor to_tensor(const ImageU8& img) {
  Tensor t({1, img.height, img.width, 3});
  float* d = t.data();
  const size_t n = img.pixels.size();
  for (size_t i = 0; i < n; ++i) d[i] = static_cast<float>(img.pixels[i]);
  return t;
}

ImageU8 to_image(const Tensor& t) {
  if (t.rank() != 4 || t.dim(0) != 1 || t.dim(3) != 3)
    throw ShapeError("to_image expects [1,H,W,3], got " + t.shape_str());
  ImageU8 img;
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.pixels.resize(t.size());
  const float* d = t.data();
  for (size_t i = 0; i < t.size(); ++i) {
    img.pixels[i] = static_cast<uint8_t>(std::clamp(std::lround(d[i]), 0l, 255l));
  }
  return img;
}

}  // namespace crackdet
