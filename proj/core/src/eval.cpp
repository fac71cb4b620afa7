#include "crackdet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crackdet/augment.hpp"
#include "crackdet/errors.hpp"
#include "crackdet/preprocess.hpp"

using nlohmann::json;

namespace crackdet {

int ConfusionMatrix::total() const {
  return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

void ConfusionMatrix::normalize() {
  for (size_t t = 0; t < 2; ++t) {
    const int row = counts[t][0] + counts[t][1];
    for (size_t p = 0; p < 2; ++p)
      normalized[t][p] = row > 0 ? static_cast<double>(counts[t][p]) / row : 0.0;
  }
}

EvalReport metrics_from_confusion(const ConfusionMatrix& cm) {
  EvalReport r;
  r.confusion = cm;
  r.confusion.normalize();

  const auto& c = cm.counts;
  const int total = cm.total();
  int correct = 0;
  for (size_t k = 0; k < 2; ++k) {
    const int tp = c[k][k];
    const int fp = c[1 - k][k];
    const int fn = c[k][1 - k];
    ClassMetrics& m = r.per_class[k];
    m.support = tp + fn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    if (m.support > 0)
      m.recall = static_cast<double>(tp) / m.support;
    else
      r.warnings.push_back(std::string(to_string(static_cast<Label>(k))) +
                           " absent from test set; recall undefined and excluded "
                           "from the weighted average");
    const double rec = m.recall.value_or(0.0);
    m.f1 = (m.precision + rec) > 0.0 ? 2.0 * m.precision * rec / (m.precision + rec) : 0.0;
    correct += tp;
  }
  r.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;

  double wsum = 0.0, wp = 0.0, wr = 0.0, wf = 0.0;
  double mp = 0.0, mr = 0.0, mf = 0.0;
  int defined = 0;
  for (const auto& m : r.per_class) {
    if (!m.recall.has_value()) continue;  // absent class contributes no weight
    wsum += m.support;
    wp += m.support * m.precision;
    wr += m.support * *m.recall;
    wf += m.support * m.f1;
    mp += m.precision;
    mr += *m.recall;
    mf += m.f1;
    ++defined;
  }
  if (wsum > 0.0) {
    r.precision = wp / wsum;
    r.recall = wr / wsum;
    r.f1 = wf / wsum;
  }
  if (defined > 0) {
    r.macro_precision = mp / defined;
    r.macro_recall = mr / defined;
    r.macro_f1 = mf / defined;
  }
  return r;
}

EvalReport evaluate(ClassifierModel& model, const std::vector<ImageSample>& test,
                    int batch_size) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  if (batch_size < 1) batch_size = 1;
  const auto t0 = std::chrono::steady_clock::now();

  ConfusionMatrix cm;
  const PreprocessMode mode = model.spec().preprocess;
  for (size_t start = 0; start < test.size(); start += static_cast<size_t>(batch_size)) {
    const size_t n = std::min(test.size() - start, static_cast<size_t>(batch_size));
    Tensor batch({static_cast<int>(n), 224, 224, 3});
    for (size_t i = 0; i < n; ++i) {
      const ImageU8 img = load_sample_rgb(test[start + i]);
      std::copy(img.pixels.begin(), img.pixels.end(),
                batch.data() + i * img.pixels.size());
    }
    const Tensor pre = preprocess(batch, mode, model.preprocess_constants());
    const auto preds = model.predict(pre, mode);
    for (size_t i = 0; i < n; ++i) cm.add(test[start + i].label, preds[i].label);
  }

  EvalReport r = metrics_from_confusion(cm);
  r.backbone = model.spec().name;
  r.regime = to_string(model.regime());
  r.model_id = r.backbone;
  r.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

int registry_rank(const std::string& backbone) {
  const auto& reg = backbone_registry();
  for (size_t i = 0; i < reg.size(); ++i)
    if (reg[i].name == backbone) return static_cast<int>(i);
  return static_cast<int>(reg.size());
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string fmt_lr(double lr) {
  std::ostringstream os;
  os << std::setprecision(6) << lr;
  return os.str();
}

}  // namespace

std::string render_tables(std::vector<EvalReport> reports,
                          const std::filesystem::path& csv_path,
                          const std::filesystem::path& md_path) {
  if (reports.empty()) throw DataError("render_tables: no reports");
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    if (a.case_id != b.case_id) return a.case_id < b.case_id;
    if (a.regime != b.regime) return a.regime < b.regime;
    return registry_rank(a.backbone) < registry_rank(b.backbone);
  });

  std::ostringstream csv;
  csv << "case,regime,model,epochs,learning_rate,precision,recall,f1_score,"
         "accuracy,training_time_s\n";
  std::ostringstream md;
  md << "| case | regime | model | epochs | learning rate | precision | recall "
        "| f1-score | accuracy | tr time |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    csv << r.case_id << ',' << r.regime << ',' << r.backbone << ',' << r.epochs
        << ',' << fmt_lr(r.learning_rate) << ',' << fmt(r.precision) << ','
        << fmt(r.recall) << ',' << fmt(r.f1) << ',' << fmt(r.accuracy) << ','
        << fmt(r.train_seconds, 3) << '\n';
    md << "| " << r.case_id << " | " << r.regime << " | " << r.backbone << " | "
       << r.epochs << " | " << fmt_lr(r.learning_rate) << " | " << fmt(r.precision)
       << " | " << fmt(r.recall) << " | " << fmt(r.f1) << " | " << fmt(r.accuracy)
       << " | " << fmt(r.train_seconds, 3) << " |\n";
  }

  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw ConfigError("cannot write " + csv_path.string());
    f << csv.str();
  }
  if (!md_path.empty()) {
    std::ofstream f(md_path);
    if (!f) throw ConfigError("cannot write " + md_path.string());
    f << md.str();
  }
  return md.str();
}

void write_confusion_json(const EvalReport& r, const std::filesystem::path& path) {
  json doc;
  doc["model"] = r.model_id;
  doc["case_id"] = r.case_id;
  doc["labels"] = {"NoCrack", "Crack"};
  doc["counts"] = r.confusion.counts;
  doc["normalized"] = r.confusion.normalized;
  doc["accuracy"] = r.accuracy;
  doc["precision"] = r.precision;
  doc["recall"] = r.recall;
  doc["f1"] = r.f1;
  doc["macro"] = {{"precision", r.macro_precision},
                  {"recall", r.macro_recall},
                  {"f1", r.macro_f1}};
  json pc = json::array();
  for (size_t k = 0; k < 2; ++k) {
    const auto& m = r.per_class[k];
    json e;
    e["label"] = to_string(static_cast<Label>(k));
    e["precision"] = m.precision;
    if (m.recall)
      e["recall"] = *m.recall;
    else
      e["recall"] = nullptr;
    e["f1"] = m.f1;
    e["support"] = m.support;
    pc.push_back(e);
  }
  doc["per_class"] = pc;
  if (!r.warnings.empty()) doc["warnings"] = r.warnings;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

void write_report_json(const EvalReport& r, const std::filesystem::path& path) {
  json doc;
  doc["model_id"] = r.model_id;
  doc["backbone"] = r.backbone;
  doc["regime"] = r.regime;
  doc["case_id"] = r.case_id;
  doc["precision"] = r.precision;
  doc["recall"] = r.recall;
  doc["f1"] = r.f1;
  doc["macro_precision"] = r.macro_precision;
  doc["macro_recall"] = r.macro_recall;
  doc["macro_f1"] = r.macro_f1;
  doc["accuracy"] = r.accuracy;
  doc["epochs"] = r.epochs;
  doc["learning_rate"] = r.learning_rate;
  doc["train_seconds"] = r.train_seconds;
  doc["wall_time_seconds"] = r.wall_time_seconds;
  doc["confusion_counts"] = r.confusion.counts;
  doc["confusion_normalized"] = r.confusion.normalized;
  json pc = json::array();
  for (size_t k = 0; k < 2; ++k) {
    const auto& m = r.per_class[k];
    json e = {{"precision", m.precision}, {"f1", m.f1}, {"support", m.support}};
    if (m.recall)
      e["recall"] = *m.recall;
    else
      e["recall"] = nullptr;
    pc.push_back(e);
  }
  doc["per_class"] = pc;
  if (!r.warnings.empty()) doc["warnings"] = r.warnings;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

EvalReport read_report_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open report: " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("malformed report json " + path.string() + ": " + e.what());
  }
  EvalReport r;
  r.model_id = doc.value("model_id", "");
  r.backbone = doc.value("backbone", "");
  r.regime = doc.value("regime", "");
  r.case_id = doc.value("case_id", -1);
  r.precision = doc.value("precision", 0.0);
  r.recall = doc.value("recall", 0.0);
  r.f1 = doc.value("f1", 0.0);
  r.macro_precision = doc.value("macro_precision", 0.0);
  r.macro_recall = doc.value("macro_recall", 0.0);
  r.macro_f1 = doc.value("macro_f1", 0.0);
  r.accuracy = doc.value("accuracy", 0.0);
  r.epochs = doc.value("epochs", 0);
  r.learning_rate = doc.value("learning_rate", 0.0);
  r.train_seconds = doc.value("train_seconds", 0.0);
  r.wall_time_seconds = doc.value("wall_time_seconds", 0.0);
  if (doc.contains("confusion_counts"))
    r.confusion.counts = doc["confusion_counts"].get<std::array<std::array<int, 2>, 2>>();
  r.confusion.normalize();
  if (doc.contains("per_class")) {
    for (size_t k = 0; k < 2 && k < doc["per_class"].size(); ++k) {
      const auto& e = doc["per_class"][k];
      r.per_class[k].precision = e.value("precision", 0.0);
      r.per_class[k].f1 = e.value("f1", 0.0);
      r.per_class[k].support = e.value("support", 0);
      if (e.contains("recall") && !e["recall"].is_null())
        r.per_class[k].recall = e["recall"].get<double>();
    }
  }
  return r;
}

}  // namespace crackdet
