#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crackdet/eval.hpp"
#include "crackdet/train.hpp"

namespace crackdet {

// Two-panel accuracy/loss curves (train + validation per epoch).
void write_curves_png(const TrainRecord& record, const std::filesystem::path& path);

enum class ChartMetric { Accuracy, TrainingTime };

// Grouped bar chart: one group per test case, one bar per backbone, for the
// given regime ("transfer"/"scratch").
void write_comparison_chart(const std::vector<EvalReport>& reports,
                            ChartMetric metric, const std::string& regime,
                            const std::filesystem::path& path);

}  // namespace crackdet
