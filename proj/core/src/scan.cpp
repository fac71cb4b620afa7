#include "crackdet/scan.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "crackdet/errors.hpp"
#include "crackdet/preprocess.hpp"

namespace crackdet {

std::vector<int> window_axis_positions(int extent, int window, int step) {
  std::vector<int> pos;
  for (int p = 0; p + window <= extent; p += step) pos.push_back(p);
  // Edge flush: make sure the last window touches the boundary.
  if (pos.empty() || pos.back() != extent - window) pos.push_back(extent - window);
  return pos;
}

std::vector<std::pair<int, int>> enumerate_windows(int width, int height,
                                                   int window, int step) {
  if (step < 1) throw ConfigError("scan step must be >= 1");
  if (width < window || height < window)
    throw DataError("image " + std::to_string(width) + "x" + std::to_string(height) +
                    " is smaller than the " + std::to_string(window) +
                    "px window; classify it directly in patch mode instead");
  const auto xs = window_axis_positions(width, window, step);
  const auto ys = window_axis_positions(height, window, step);
  std::vector<std::pair<int, int>> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) out.emplace_back(x, y);
  return out;
}

ScanGrid::ScanGrid(int width, int height, int window, int step, FusionRule rule)
    : width_(width), height_(height), window_(window), step_(step), rule_(rule),
      evidence_({height, width}),
      coverage_(static_cast<size_t>(width) * height, 0) {
  if (width < window || height < window)
    throw DataError("scan grid smaller than window");
}

void ScanGrid::accumulate(int x, int y, const Tensor& field) {
  if (field.rank() != 2 || field.dim(0) != window_ || field.dim(1) != window_)
    throw ShapeError("window field must be [" + std::to_string(window_) + "," +
                     std::to_string(window_) + "], got " + field.shape_str());
  if (x < 0 || y < 0 || x + window_ > width_ || y + window_ > height_)
    throw ShapeError("window origin out of bounds");
  for (int j = 0; j < window_; ++j) {
    float* erow = evidence_.data() + static_cast<size_t>(y + j) * width_ + x;
    int32_t* crow = coverage_.data() + static_cast<size_t>(y + j) * width_ + x;
    const float* frow = field.data() + static_cast<size_t>(j) * window_;
    if (rule_ == FusionRule::Mean) {
      for (int i = 0; i < window_; ++i) {
        erow[i] += frow[i];
        crow[i] += 1;
      }
    } else {
      for (int i = 0; i < window_; ++i) {
        erow[i] = crow[i] == 0 ? frow[i] : std::max(erow[i], frow[i]);
        crow[i] += 1;
      }
    }
  }
}

Tensor ScanGrid::fused() const {
  Tensor out({height_, width_});
  const float* e = evidence_.data();
  float* o = out.data();
  for (size_t i = 0; i < out.size(); ++i) {
    if (coverage_[i] == 0) continue;
    o[i] = rule_ == FusionRule::Mean ? e[i] / static_cast<float>(coverage_[i]) : e[i];
  }
  return out;
}

long long ScanGrid::coverage_sum() const {
  return std::accumulate(coverage_.begin(), coverage_.end(), 0ll);
}

void ScanGrid::merge(const ScanGrid& other) {
  if (other.width_ != width_ || other.height_ != height_ || other.rule_ != rule_)
    throw ShapeError("cannot merge mismatched scan grids");
  float* e = evidence_.data();
  const float* oe = other.evidence_.data();
  for (size_t i = 0; i < evidence_.size(); ++i) {
    if (rule_ == FusionRule::Mean) {
      e[i] += oe[i];
    } else if (other.coverage_[i] > 0) {
      e[i] = coverage_[i] == 0 ? oe[i] : std::max(e[i], oe[i]);
    }
    coverage_[i] += other.coverage_[i];
  }
}

ScanResult scan_image(ClassifierModel& model, const ImageU8& image,
                      const ScanOptions& opts) {
  const auto windows = enumerate_windows(image.width, image.height, opts.window, opts.step);
  std::vector<int> order = opts.order;
  if (order.empty()) {
    order.resize(windows.size());
    std::iota(order.begin(), order.end(), 0);
  } else if (order.size() != windows.size()) {
    throw ConfigError("scan order permutation size mismatch");
  }

  const PreprocessMode mode = model.spec().preprocess;
  const Tensor weights = model.head_weights();
  constexpr int kCrack = static_cast<int>(Label::Crack);

  ScanGrid grid(image.width, image.height, opts.window, opts.step, opts.rule);
  ScanResult result;
  result.per_window.resize(windows.size());

  const int batch = std::max(1, opts.batch_size);
  Tensor patch_batch;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch)) {
    const size_t n = std::min(order.size() - start, static_cast<size_t>(batch));
    patch_batch = Tensor({static_cast<int>(n), opts.window, opts.window, 3});
    for (size_t i = 0; i < n; ++i) {
      const auto [wx, wy] = windows[static_cast<size_t>(order[start + i])];
      float* dst = patch_batch.data() +
                   i * static_cast<size_t>(opts.window) * opts.window * 3;
      for (int y = 0; y < opts.window; ++y)
        for (int x = 0; x < opts.window; ++x)
          for (int c = 0; c < 3; ++c)
            *dst++ = static_cast<float>(image.at(wy + y, wx + x, c));
    }
    const Tensor pre = preprocess(patch_batch, mode, model.preprocess_constants());
    auto preds = model.predict(pre, mode);
    for (size_t i = 0; i < n; ++i) {
      const int widx = order[start + i];
      const auto [wx, wy] = windows[static_cast<size_t>(widx)];
      const auto& p = preds[i];
      result.per_window[static_cast<size_t>(widx)] = {wx, wy, p.label, p.probs[1]};
      // Signed pre-normalization Crack evidence, stacked over the footprint.
      Tensor cam = compute_cam(p.feature_maps, weights, kCrack);
      Tensor up = upsample_bilinear(cam, opts.window, opts.window);
      grid.accumulate(wx, wy, up);
    }
  }

  result.fused = grid.fused();
  result.overlay = overlay(image, result.fused, opts.threshold, opts.alpha);
  return result;
}

void write_windows_csv(const std::vector<WindowPrediction>& windows,
                       const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << "x,y,label,prob_crack\n";
  for (const auto& w : windows)
    f << w.x << ',' << w.y << ',' << to_string(w.label) << ',' << w.prob_crack << '\n';
}

}  // namespace crackdet
