#include "crackdet/charts.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "crackdet/errors.hpp"

namespace crackdet {

namespace {

const cv::Scalar kBg(255, 255, 255);
const cv::Scalar kAxis(60, 60, 60);

// BGR palette, one entry per registry backbone.
const std::vector<cv::Scalar>& palette() {
  static const std::vector<cv::Scalar> kColors = {
      {180, 119, 31},  {14, 127, 255},  {44, 160, 44},   {40, 39, 214},
      {189, 103, 148}, {75, 86, 140},   {194, 119, 227}, {127, 127, 127},
      {34, 189, 188},  {207, 190, 23},  {150, 100, 80},
  };
  return kColors;
}

void draw_axes(cv::Mat& img, const cv::Rect& plot, const std::string& title) {
  cv::rectangle(img, plot, kAxis, 1);
  cv::putText(img, title, {plot.x, plot.y - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
              kAxis, 1, cv::LINE_AA);
}

void polyline(cv::Mat& img, const cv::Rect& plot, const std::vector<float>& ys,
              float lo, float hi, const cv::Scalar& color) {
  if (ys.size() < 1 || hi <= lo) return;
  std::vector<cv::Point> pts;
  for (size_t i = 0; i < ys.size(); ++i) {
    const float fx = ys.size() > 1 ? static_cast<float>(i) / (ys.size() - 1) : 0.0f;
    const float fy = (ys[i] - lo) / (hi - lo);
    pts.emplace_back(plot.x + static_cast<int>(fx * (plot.width - 1)),
                     plot.y + plot.height - 1 - static_cast<int>(fy * (plot.height - 1)));
  }
  for (size_t i = 1; i < pts.size(); ++i)
    cv::line(img, pts[i - 1], pts[i], color, 2, cv::LINE_AA);
}

}  // namespace

void write_curves_png(const TrainRecord& record, const std::filesystem::path& path) {
  if (record.epochs.empty()) throw DataError("no epochs recorded; nothing to plot");
  const int W = 960, H = 420;
  cv::Mat img(H, W, CV_8UC3, kBg);
  const cv::Rect acc_plot(60, 50, 380, 300);
  const cv::Rect loss_plot(530, 50, 380, 300);

  std::vector<float> ta, va, tl, vl;
  for (const auto& e : record.epochs) {
    ta.push_back(e.train_acc);
    va.push_back(e.val_acc);
    tl.push_back(e.train_loss);
    vl.push_back(e.val_loss);
  }
  float loss_hi = 0.0f;
  for (float v : tl) loss_hi = std::max(loss_hi, v);
  for (float v : vl) loss_hi = std::max(loss_hi, v);
  loss_hi = std::max(loss_hi * 1.05f, 1e-6f);

  draw_axes(img, acc_plot, "accuracy");
  polyline(img, acc_plot, ta, 0.0f, 1.0f, palette()[0]);
  polyline(img, acc_plot, va, 0.0f, 1.0f, palette()[1]);
  draw_axes(img, loss_plot, "loss");
  polyline(img, loss_plot, tl, 0.0f, loss_hi, palette()[0]);
  polyline(img, loss_plot, vl, 0.0f, loss_hi, palette()[1]);

  cv::putText(img, "train", {60, 380}, cv::FONT_HERSHEY_SIMPLEX, 0.5, palette()[0], 1,
              cv::LINE_AA);
  cv::putText(img, "validation", {130, 380}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
              palette()[1], 1, cv::LINE_AA);
  cv::putText(img, "epochs: " + std::to_string(record.epochs.size()), {530, 380},
              cv::FONT_HERSHEY_SIMPLEX, 0.5, kAxis, 1, cv::LINE_AA);

  if (!cv::imwrite(path.string(), img))
    throw ConfigError("cannot write " + path.string());
}

void write_comparison_chart(const std::vector<EvalReport>& reports,
                            ChartMetric metric, const std::string& regime,
                            const std::filesystem::path& path) {
  std::vector<const EvalReport*> rows;
  std::set<int> cases;
  for (const auto& r : reports) {
    if (r.regime != regime) continue;
    rows.push_back(&r);
    cases.insert(r.case_id);
  }
  if (rows.empty()) throw DataError("no reports for regime " + regime);

  const auto& registry = backbone_registry();
  std::map<std::string, int> model_index;
  for (size_t i = 0; i < registry.size(); ++i)
    model_index[registry[i].name] = static_cast<int>(i);

  double hi = 0.0;
  const auto value_of = [&](const EvalReport& r) {
    return metric == ChartMetric::Accuracy ? r.accuracy : r.train_seconds;
  };
  for (const auto* r : rows) hi = std::max(hi, value_of(*r));
  if (metric == ChartMetric::Accuracy) hi = 1.0;
  if (hi <= 0.0) hi = 1.0;

  const int W = 1200, H = 520;
  cv::Mat img(H, W, CV_8UC3, kBg);
  const cv::Rect plot(70, 60, W - 110, H - 180);
  const std::string title =
      std::string(metric == ChartMetric::Accuracy ? "testing accuracy" : "training time (s)") +
      " - " + regime;
  draw_axes(img, plot, title);

  const int n_cases = static_cast<int>(cases.size());
  const int group_w = plot.width / std::max(1, n_cases);
  const int bar_w = std::max(2, group_w / (static_cast<int>(registry.size()) + 2));
  int gi = 0;
  for (int case_id : cases) {
    const int gx = plot.x + gi * group_w;
    cv::putText(img, "case " + std::to_string(case_id),
                {gx + group_w / 2 - 24, plot.y + plot.height + 20},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, kAxis, 1, cv::LINE_AA);
    for (const auto* r : rows) {
      if (r->case_id != case_id) continue;
      auto it = model_index.find(r->backbone);
      if (it == model_index.end()) continue;
      const int mi = it->second;
      const double v = value_of(*r);
      const int bh = static_cast<int>(v / hi * (plot.height - 2));
      const int bx = gx + bar_w / 2 + mi * bar_w;
      cv::rectangle(img,
                    cv::Rect(bx, plot.y + plot.height - 1 - bh, bar_w - 1, bh),
                    palette()[static_cast<size_t>(mi) % palette().size()], cv::FILLED);
    }
    ++gi;
  }
  // Legend
  int lx = 70, ly = H - 86;
  for (size_t i = 0; i < registry.size(); ++i) {
    cv::rectangle(img, cv::Rect(lx, ly - 10, 12, 12),
                  palette()[i % palette().size()], cv::FILLED);
    cv::putText(img, registry[i].name, {lx + 16, ly}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                kAxis, 1, cv::LINE_AA);
    lx += 16 + 9 * static_cast<int>(registry[i].name.size());
    if (lx > W - 200) {
      lx = 70;
      ly += 22;
    }
  }

  if (!cv::imwrite(path.string(), img))
    throw ConfigError("cannot write " + path.string());
}

}  // namespace crackdet
