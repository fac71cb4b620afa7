#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crackdet/classifier.hpp"
#include "crackdet/dataset.hpp"

namespace crackdet {

// counts[true][pred] over the canonical (NoCrack, Crack) order.
struct ConfusionMatrix {
  std::array<std::array<int, 2>, 2> counts{{{0, 0}, {0, 0}}};
  std::array<std::array<double, 2>, 2> normalized{{{0, 0}, {0, 0}}};

  int total() const;
  void add(Label truth, Label pred) {
    counts[static_cast<size_t>(truth)][static_cast<size_t>(pred)]++;
  }
  void normalize();  // row-normalize (rows with zero support stay zero)
};

struct ClassMetrics {
  double precision = 0.0;
  std::optional<double> recall;  // null when the class is absent from the test set
  double f1 = 0.0;
  int support = 0;
};

struct EvalReport {
  std::string model_id;
  std::string backbone;
  std::string regime;
  int case_id = -1;

  std::array<ClassMetrics, 2> per_class;  // [NoCrack, Crack]
  double precision = 0.0;  // support-weighted headline values
  double recall = 0.0;
  double f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::string> warnings;

  // Filled by the training pipeline for table rendering.
  int epochs = 0;
  double learning_rate = 0.0;
  double train_seconds = 0.0;
  double wall_time_seconds = 0.0;  // evaluation wall time
};

// Pure metric computation from a confusion matrix; the evaluate() path and
// the oracle tests share it.
EvalReport metrics_from_confusion(const ConfusionMatrix& counts);

// Runs the model over the test set (preprocessing applied internally with the
// model's recorded mode).
EvalReport evaluate(ClassifierModel& model, const std::vector<ImageSample>& test,
                    int batch_size = 8);

// Appendix-style tables: one row per (case, model) in registry order.
// Returns the markdown table; writes CSV + markdown when paths given.
std::string render_tables(std::vector<EvalReport> reports,
                          const std::filesystem::path& csv_path = {},
                          const std::filesystem::path& md_path = {});

void write_confusion_json(const EvalReport& report, const std::filesystem::path& path);

// Full-report JSON round-trip; the `report` and `matrix` commands aggregate
// these files across runs.
void write_report_json(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report_json(const std::filesystem::path& path);

}  // namespace crackdet
