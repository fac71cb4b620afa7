// crackdet — train, evaluate and deploy stone-masonry crack classifiers.
//
// Subcommands: prepare, train, eval, localize, scan, report, matrix.
// Every run writes its outputs plus a resolved_config.json snapshot under
// runs/<timestamp>-<command>/ (override the base with --out).
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "crackdet/artifact.hpp"
#include "crackdet/augment.hpp"
#include "crackdet/cam.hpp"
#include "crackdet/charts.hpp"
#include "crackdet/classifier.hpp"
#include "crackdet/dataset.hpp"
#include "crackdet/errors.hpp"
#include "crackdet/eval.hpp"
#include "crackdet/npy.hpp"
#include "crackdet/runcfg.hpp"
#include "crackdet/scan.hpp"
#include "crackdet/train.hpp"

namespace fs = std::filesystem;
using namespace crackdet;

namespace {

fs::path dataset_root_or_die(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("CRACK_CH_ROOT")) return env;
  throw ConfigError("no dataset root: pass --data or set CRACK_CH_ROOT");
}

struct CommonOpts {
  std::string out_base = "runs";
  uint64_t seed = 0;
};

fs::path new_run_dir(const CommonOpts& c, const std::string& command) {
  return make_run_dir(c.out_base, command);
}

TrainConfig resolve_train_config(const std::string& config_file,
                                 const std::optional<int>& epochs,
                                 const std::optional<double>& lr,
                                 const std::optional<int>& batch,
                                 const std::optional<double>& val_fraction,
                                 const std::optional<int>& patience,
                                 const std::optional<double>& lr_factor,
                                 const std::optional<double>& min_lr,
                                 bool no_augment, uint64_t seed) {
  TrainConfig cfg;
  if (!config_file.empty()) cfg = TrainConfig::from_json_file(config_file);
  if (epochs) cfg.epochs = *epochs;
  if (lr) cfg.lr = static_cast<float>(*lr);
  if (batch) cfg.batch_size = *batch;
  if (val_fraction) cfg.val_fraction = static_cast<float>(*val_fraction);
  if (patience) cfg.lr_patience = *patience;
  if (lr_factor) cfg.lr_factor = static_cast<float>(*lr_factor);
  if (min_lr) cfg.min_lr = static_cast<float>(*min_lr);
  if (no_augment) cfg.augment = false;
  cfg.seed = seed;
  return cfg;
}

struct TrainCellResult {
  EvalReport report;
  fs::path model_dir;
};

// Shared by `train`, `eval`-after-train and `matrix`: one full train+eval cell.
TrainCellResult run_train_cell(const DatasetManifest& manifest,
                               const std::string& backbone, int case_id,
                               Regime regime, bool pretrained,
                               const std::string& weights_dir,
                               const TrainConfig& cfg, const fs::path& cell_dir) {
  fs::create_directories(cell_dir);
  const auto& spec = find_backbone(backbone);
  TestCaseSplit split = make_split(manifest, case_id, cfg.seed);
  write_split_json(split, cell_dir / ("split_case" + std::to_string(case_id) + ".json"));

  ClassifierModel::BuildOptions opts;
  opts.pretrained = pretrained;
  opts.seed = cfg.seed;
  if (!weights_dir.empty()) opts.weights_dir = weights_dir;
  ClassifierModel model = ClassifierModel::build(spec, regime, opts);

  TrainRecord record = train(model, split, cfg);
  write_record_json(record, cell_dir / "record.json");
  write_curves_png(record, cell_dir / "curves.png");

  const fs::path model_dir = cell_dir / "model";
  save_artifact(model, model_dir, cfg.digest());

  EvalReport report = evaluate(model, split.test, cfg.batch_size);
  report.case_id = case_id;
  report.epochs = cfg.epochs;
  report.learning_rate = cfg.lr > 0 ? cfg.lr : spec.default_lr;
  report.train_seconds = record.wall_time_seconds;
  write_report_json(report, cell_dir / "eval_report.json");
  write_confusion_json(report, cell_dir / ("confusion_" + backbone + "_case" +
                                           std::to_string(case_id) + ".json"));
  render_tables({report}, cell_dir / "report.csv", cell_dir / "report.md");
  return {std::move(report), model_dir};
}

ImageU8 load_image_or_die(const std::string& path) {
  auto img = load_image(path);
  if (!img) throw DataError("cannot decode image: " + path);
  return *img;
}

void collect_reports(const fs::path& dir, std::vector<EvalReport>& out) {
  if (!fs::exists(dir)) throw ConfigError("no such report directory: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() == "eval_report.json")
      out.push_back(read_report_json(e.path()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crack detection toolkit for stone masonry imagery"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--out", common.out_base, "base directory for run outputs")
      ->capture_default_str();

  // ------------------------------------------------------------- prepare
  auto* prepare = app.add_subcommand(
      "prepare", "scan the dataset tree, report tallies, materialize splits");
  std::string prep_data;
  std::vector<int> prep_cases{0, 1, 2, 3, 4, 5};
  uint64_t prep_seed = 0;
  prepare->add_option("--data", prep_data, "dataset root (default $CRACK_CH_ROOT)");
  prepare->add_option("--case", prep_cases, "test cases to materialize");
  prepare->add_option("--seed", prep_seed, "seed for the shuffled cases");

  // --------------------------------------------------------------- train
  auto* train_cmd = app.add_subcommand("train", "train one classifier");
  std::string tr_data, tr_backbone, tr_regime = "scratch", tr_config, tr_weights;
  int tr_case = 0;
  bool tr_pretrained = false, tr_no_augment = false;
  uint64_t tr_seed = 0;
  std::optional<int> tr_epochs, tr_batch, tr_patience;
  std::optional<double> tr_lr, tr_valfrac, tr_factor, tr_minlr;
  train_cmd->add_option("--data", tr_data, "dataset root (default $CRACK_CH_ROOT)");
  train_cmd->add_option("--backbone", tr_backbone, "registry backbone name")->required();
  train_cmd->add_option("--case", tr_case, "test case 0..5")->capture_default_str();
  train_cmd->add_option("--regime", tr_regime, "scratch|transfer")->capture_default_str();
  train_cmd->add_flag("--pretrained", tr_pretrained,
                      "load ImageNet backbone weights (default for transfer)");
  train_cmd->add_option("--weights-dir", tr_weights,
                        "directory holding <backbone>.tensors pretrained archives");
  train_cmd->add_option("--config", tr_config, "train.json config file");
  train_cmd->add_option("--epochs", tr_epochs);
  train_cmd->add_option("--lr", tr_lr);
  train_cmd->add_option("--batch", tr_batch);
  train_cmd->add_option("--val-fraction", tr_valfrac);
  train_cmd->add_option("--patience", tr_patience);
  train_cmd->add_option("--lr-factor", tr_factor);
  train_cmd->add_option("--min-lr", tr_minlr);
  train_cmd->add_flag("--no-augment", tr_no_augment);
  train_cmd->add_option("--seed", tr_seed);

  // ---------------------------------------------------------------- eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model artifact");
  std::string ev_model, ev_data, ev_split;
  int ev_case = 0, ev_batch = 8;
  uint64_t ev_seed = 0;
  eval_cmd->add_option("--model", ev_model, "model artifact directory")->required();
  eval_cmd->add_option("--data", ev_data, "dataset root (default $CRACK_CH_ROOT)");
  eval_cmd->add_option("--split", ev_split, "split_case<k>.json (overrides --case)");
  eval_cmd->add_option("--case", ev_case, "test case 0..5")->capture_default_str();
  eval_cmd->add_option("--seed", ev_seed, "seed for shuffled cases");
  eval_cmd->add_option("--batch", ev_batch);

  // ------------------------------------------------------------ localize
  auto* loc = app.add_subcommand("localize", "classify a patch and emit its attention map");
  std::string lc_model, lc_image;
  double lc_threshold = 0.5, lc_alpha = 0.6;
  bool lc_crack_cam = false;
  loc->add_option("--model", lc_model)->required();
  loc->add_option("--image", lc_image)->required();
  loc->add_option("--threshold", lc_threshold)->capture_default_str();
  loc->add_option("--alpha", lc_alpha)->capture_default_str();
  loc->add_flag("--crack-cam", lc_crack_cam,
                "project the Crack class even when NoCrack is predicted");

  // ---------------------------------------------------------------- scan
  auto* scan_cmd = app.add_subcommand("scan", "sliding-window scan of a full-resolution image");
  std::string sc_model, sc_image, sc_fusion = "mean";
  int sc_step = 32, sc_window = 224, sc_batch = 32;
  double sc_threshold = 0.5, sc_alpha = 0.6;
  scan_cmd->add_option("--model", sc_model)->required();
  scan_cmd->add_option("--image", sc_image)->required();
  scan_cmd->add_option("--step", sc_step)->capture_default_str();
  scan_cmd->add_option("--window", sc_window)->capture_default_str();
  scan_cmd->add_option("--batch", sc_batch)->capture_default_str();
  scan_cmd->add_option("--fusion", sc_fusion, "mean|max")->capture_default_str();
  scan_cmd->add_option("--threshold", sc_threshold)->capture_default_str();
  scan_cmd->add_option("--alpha", sc_alpha)->capture_default_str();

  // -------------------------------------------------------------- report
  auto* rep = app.add_subcommand("report", "aggregate eval reports into tables and charts");
  std::vector<std::string> rp_inputs;
  rep->add_option("--inputs", rp_inputs, "run directories to scan for eval_report.json")
      ->required();

  // -------------------------------------------------------------- matrix
  auto* mx = app.add_subcommand("matrix", "train/evaluate a backbone x case grid");
  std::string mx_data, mx_regime = "scratch", mx_config, mx_weights;
  std::vector<std::string> mx_backbones;
  std::vector<int> mx_cases{0, 1, 2, 3, 4, 5};
  bool mx_pretrained = false, mx_no_augment = false;
  uint64_t mx_seed = 0;
  std::optional<int> mx_epochs, mx_batch, mx_patience;
  std::optional<double> mx_lr, mx_valfrac, mx_factor, mx_minlr;
  mx->add_option("--data", mx_data, "dataset root (default $CRACK_CH_ROOT)");
  mx->add_option("--backbones", mx_backbones, "backbone names (default: all 11)");
  mx->add_option("--cases", mx_cases, "test cases")->capture_default_str();
  mx->add_option("--regime", mx_regime)->capture_default_str();
  mx->add_flag("--pretrained", mx_pretrained);
  mx->add_option("--weights-dir", mx_weights);
  mx->add_option("--config", mx_config);
  mx->add_option("--epochs", mx_epochs);
  mx->add_option("--lr", mx_lr);
  mx->add_option("--batch", mx_batch);
  mx->add_option("--val-fraction", mx_valfrac);
  mx->add_option("--patience", mx_patience);
  mx->add_option("--lr-factor", mx_factor);
  mx->add_option("--min-lr", mx_minlr);
  mx->add_flag("--no-augment", mx_no_augment);
  mx->add_option("--seed", mx_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      const fs::path root = dataset_root_or_die(prep_data);
      const fs::path run = new_run_dir(common, "prepare");
      RunConfig rc;
      rc.command = "prepare";
      rc.dataset_root = root;
      rc.out_dir = run;
      rc.seed = prep_seed;
      rc.write_snapshot(run);

      DatasetManifest manifest = load_manifest(root);
      write_skip_report(manifest, run / "ingest_skipped.txt");
      std::cout << "manifest: " << manifest.total() << " samples ("
                << manifest.count(Label::Crack) << " Crack / "
                << manifest.count(Label::NoCrack) << " NoCrack), "
                << manifest.skipped.size() << " skipped\n";
      for (const auto& m : manifest.table1_mismatches())
        std::cout << "note: tally differs from the published table: " << m << "\n";
      for (int k : prep_cases) {
        try {
          TestCaseSplit split = make_split(manifest, k, prep_seed);
          write_split_json(split, run / ("split_case" + std::to_string(k) + ".json"));
          std::cout << "case " << k << ": train " << split.train.size() << ", test "
                    << split.test.size() << "\n";
        } catch (const DataError& e) {
          std::cout << "case " << k << ": not materializable (" << e.what() << ")\n";
        }
      }
      std::cout << "outputs: " << run.string() << "\n";
      return 0;
    }

    if (*train_cmd) {
      const fs::path root = dataset_root_or_die(tr_data);
      auto regime = parse_regime(tr_regime);
      if (!regime) throw ConfigError("regime must be scratch or transfer");
      if (*regime == Regime::Transfer && !train_cmd->count("--pretrained"))
        tr_pretrained = true;
      TrainConfig cfg = resolve_train_config(tr_config, tr_epochs, tr_lr, tr_batch,
                                             tr_valfrac, tr_patience, tr_factor,
                                             tr_minlr, tr_no_augment, tr_seed);
      const fs::path run = new_run_dir(common, "train");
      RunConfig rc;
      rc.command = "train";
      rc.dataset_root = root;
      rc.out_dir = run;
      rc.backbone = tr_backbone;
      rc.case_id = tr_case;
      rc.regime = *regime;
      rc.seed = tr_seed;
      rc.train = cfg;
      rc.write_snapshot(run);

      DatasetManifest manifest = load_manifest(root);
      auto cell = run_train_cell(manifest, tr_backbone, tr_case, *regime,
                                 tr_pretrained, tr_weights, cfg, run);
      std::cout << "model: " << cell.model_dir.string() << "\n"
                << "accuracy: " << cell.report.accuracy << "\n"
                << "outputs: " << run.string() << "\n";
      return 0;
    }

    if (*eval_cmd) {
      const fs::path run = new_run_dir(common, "eval");
      ClassifierModel model = load_artifact_model(ev_model);
      TestCaseSplit split;
      if (!ev_split.empty()) {
        split = read_split_json(ev_split);
      } else {
        const fs::path root = dataset_root_or_die(ev_data);
        DatasetManifest manifest = load_manifest(root);
        split = make_split(manifest, ev_case, ev_seed);
      }
      RunConfig rc;
      rc.command = "eval";
      rc.out_dir = run;
      rc.backbone = model.spec().name;
      rc.case_id = split.case_id;
      rc.regime = model.regime();
      rc.seed = ev_seed;
      rc.extra["model"] = ev_model;
      rc.write_snapshot(run);

      EvalReport report = evaluate(model, split.test, ev_batch);
      report.case_id = split.case_id;
      write_report_json(report, run / "eval_report.json");
      write_confusion_json(report, run / ("confusion_" + report.backbone + "_case" +
                                          std::to_string(split.case_id) + ".json"));
      std::cout << render_tables({report}, run / "report.csv", run / "report.md");
      std::cout << "outputs: " << run.string() << "\n";
      return 0;
    }

    if (*loc) {
      const fs::path run = new_run_dir(common, "localize");
      ClassifierModel model = load_artifact_model(lc_model);
      const ImageU8 original = load_image_or_die(lc_image);
      const ImageU8 patch = (original.width == 224 && original.height == 224)
                                ? original
                                : resize_bilinear(original, 224, 224);

      const Tensor rgb = to_tensor(patch);
      const Tensor pre = preprocess(rgb, model.spec().preprocess,
                                    model.preprocess_constants());
      auto prediction = model.predict_one(pre, model.spec().preprocess);
      const int cls = lc_crack_cam ? static_cast<int>(Label::Crack)
                                   : static_cast<int>(prediction.label);
      AttentionMap map = make_attention_map(prediction.feature_maps,
                                            model.head_weights(), cls,
                                            original.height, original.width);
      const std::string stem = fs::path(lc_image).stem().string();
      save_image(run / (stem + "_cam.png"),
                 overlay(original, map.full, static_cast<float>(lc_threshold),
                         static_cast<float>(lc_alpha)));
      write_npy(run / (stem + "_cam.npy"), map.raw);
      std::ofstream side(run / (stem + "_cam.json"));
      side << "{\n  \"label\": \"" << to_string(prediction.label)
           << "\",\n  \"prob_crack\": " << prediction.probs[1]
           << ",\n  \"cam_class_index\": " << cls << "\n}\n";

      RunConfig rc;
      rc.command = "localize";
      rc.out_dir = run;
      rc.backbone = model.spec().name;
      rc.extra["model"] = lc_model;
      rc.extra["image"] = lc_image;
      rc.write_snapshot(run);
      std::cout << "label: " << to_string(prediction.label)
                << " prob_crack: " << prediction.probs[1] << "\n"
                << "outputs: " << run.string() << "\n";
      return 0;
    }

    if (*scan_cmd) {
      const fs::path run = new_run_dir(common, "scan");
      ClassifierModel model = load_artifact_model(sc_model);
      const ImageU8 image = load_image_or_die(sc_image);
      ScanOptions opts;
      opts.step = sc_step;
      opts.window = sc_window;
      opts.batch_size = sc_batch;
      opts.threshold = static_cast<float>(sc_threshold);
      opts.alpha = static_cast<float>(sc_alpha);
      if (sc_fusion == "max")
        opts.rule = FusionRule::Max;
      else if (sc_fusion != "mean")
        throw ConfigError("fusion must be mean or max");

      ScanResult result = scan_image(model, image, opts);
      write_npy(run / "fused.npy", result.fused);
      save_image(run / "overlay.png", result.overlay);
      write_windows_csv(result.per_window, run / "windows.csv");

      RunConfig rc;
      rc.command = "scan";
      rc.out_dir = run;
      rc.backbone = model.spec().name;
      rc.extra["model"] = sc_model;
      rc.extra["image"] = sc_image;
      rc.extra["step"] = std::to_string(sc_step);
      rc.extra["fusion"] = sc_fusion;
      rc.write_snapshot(run);
      int crack_windows = 0;
      for (const auto& w : result.per_window)
        if (w.label == Label::Crack) ++crack_windows;
      std::cout << "windows: " << result.per_window.size() << " (" << crack_windows
                << " crack)\noutputs: " << run.string() << "\n";
      return 0;
    }

    if (*rep) {
      const fs::path run = new_run_dir(common, "report");
      std::vector<EvalReport> reports;
      for (const auto& dir : rp_inputs) collect_reports(dir, reports);
      if (reports.empty()) throw DataError("no eval_report.json found under the inputs");
      std::cout << render_tables(reports, run / "report.csv", run / "report.md");
      for (const std::string regime : {"scratch", "transfer"}) {
        const bool any = std::any_of(reports.begin(), reports.end(),
                                     [&](const auto& r) { return r.regime == regime; });
        if (!any) continue;
        write_comparison_chart(reports, ChartMetric::Accuracy, regime,
                               run / ("accuracy_" + regime + ".png"));
        write_comparison_chart(reports, ChartMetric::TrainingTime, regime,
                               run / ("training_time_" + regime + ".png"));
      }
      RunConfig rc;
      rc.command = "report";
      rc.out_dir = run;
      rc.write_snapshot(run);
      std::cout << "outputs: " << run.string() << "\n";
      return 0;
    }

    if (*mx) {
      const fs::path root = dataset_root_or_die(mx_data);
      auto regime = parse_regime(mx_regime);
      if (!regime) throw ConfigError("regime must be scratch or transfer");
      if (*regime == Regime::Transfer && !mx->count("--pretrained")) mx_pretrained = true;
      if (mx_backbones.empty())
        for (const auto& spec : backbone_registry()) mx_backbones.push_back(spec.name);
      TrainConfig cfg = resolve_train_config(mx_config, mx_epochs, mx_lr, mx_batch,
                                             mx_valfrac, mx_patience, mx_factor,
                                             mx_minlr, mx_no_augment, mx_seed);
      const fs::path run = new_run_dir(common, "matrix");
      RunConfig rc;
      rc.command = "matrix";
      rc.dataset_root = root;
      rc.out_dir = run;
      rc.regime = *regime;
      rc.seed = mx_seed;
      rc.train = cfg;
      rc.write_snapshot(run);

      DatasetManifest manifest = load_manifest(root);
      std::vector<EvalReport> reports;
      std::ofstream failures(run / "failures.txt");
      for (int case_id : mx_cases) {
        for (const auto& backbone : mx_backbones) {
          const fs::path cell =
              run / "cells" / (backbone + "_case" + std::to_string(case_id));
          try {
            auto result = run_train_cell(manifest, backbone, case_id, *regime,
                                         mx_pretrained, mx_weights, cfg, cell);
            reports.push_back(result.report);
            std::cout << backbone << " case " << case_id << ": accuracy "
                      << result.report.accuracy << "\n";
          } catch (const std::exception& e) {
            failures << backbone << "\tcase" << case_id << '\t' << e.what() << '\n';
            std::cout << backbone << " case " << case_id << ": FAILED (" << e.what()
                      << ")\n";
          }
        }
      }
      if (!reports.empty()) {
        render_tables(reports, run / "report.csv", run / "report.md");
        write_comparison_chart(reports, ChartMetric::Accuracy, to_string(*regime),
                               run / ("accuracy_" + std::string(to_string(*regime)) + ".png"));
        write_comparison_chart(reports, ChartMetric::TrainingTime, to_string(*regime),
                               run / ("training_time_" + std::string(to_string(*regime)) + ".png"));
      }
      std::cout << "outputs: " << run.string() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: category=" << e.category_name() << " message=\"" << e.what()
              << "\"\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
