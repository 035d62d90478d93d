// SPDX-License-Identifier: Apache-2.0
//
// fillmass: command-line front end for dataset generation, feature
// extraction, training, prediction, capacity estimation, scoring and
// cross-validation.

#include <charconv>
#include <cstdio>
#include <iostream>
#include <map>
#include <regex>

#include <CLI11.hpp>

#include "fillmass/audio_features.hpp"
#include "fillmass/capacity_geom.hpp"
#include "fillmass/errors.hpp"
#include "fillmass/fusion_mass.hpp"
#include "fillmass/media_io.hpp"
#include "fillmass/pipeline.hpp"
#include "fillmass/synth_harness.hpp"

namespace fs = std::filesystem;
using namespace fillmass;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitEvaluation = 3;

void log_line(const std::string& msg) { std::cerr << msg << "\n"; }

/// Model and pipeline options shared by train, predict and cross-validate.
struct ConfigFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  int hidden = 0;
  int layers_audio = 0;
  int layers_video = 0;
  int epochs = 0;
  double lr = 0;
  int batch = 0;
  int n_trees = 0;
  std::vector<int> tune_grid;
  bool no_tune = false;
  bool consistency = false;
  double prior_ml = 0;
  std::vector<std::string> type_models;
  std::vector<std::string> level_models;

  std::map<std::string, CLI::Option*> opts;

  void add_to(CLI::App& app) {
    opts["config"] = app.add_option("--config", config_path, "JSON configuration file")
                         ->check(CLI::ExistingFile);
    opts["seed"] = app.add_option("--seed", seed, "Master seed");
    opts["hidden"] = app.add_option("--hidden", hidden, "GRU hidden size")->check(CLI::PositiveNumber);
    opts["layers"] = app.add_option("--layers", layers_audio, "GRU layers for the audio stream")
                         ->check(CLI::PositiveNumber);
    opts["video-layers"] =
        app.add_option("--video-layers", layers_video, "GRU layers for the video stream")
            ->check(CLI::PositiveNumber);
    opts["epochs"] = app.add_option("--epochs", epochs, "Maximum GRU epochs")->check(CLI::PositiveNumber);
    opts["lr"] = app.add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    opts["batch"] = app.add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
    opts["n-trees"] = app.add_option("--n-trees", n_trees, "Forest size when not tuning")
                          ->check(CLI::PositiveNumber);
    opts["tune-grid"] = app.add_option("--tune-grid", tune_grid, "Tree counts to choose from");
    opts["no-tune"] = app.add_flag("--no-tune", no_tune, "Use --n-trees without tuning");
    opts["consistency"] =
        app.add_flag("--consistency", consistency, "Forbid liquid fillings in boxes");
    opts["prior-ml"] = app.add_option("--prior-ml", prior_ml, "Capacity fallback in mL")
                           ->check(CLI::PositiveNumber);
    opts["type-models"] = app.add_option("--type-models", type_models,
                                         "Models fused for filling type (forest, audio_gru)");
    opts["level-models"] = app.add_option(
        "--level-models", level_models, "Models fused for filling level (forest, audio_gru, video_gru)");
  }

  bool given(const char* name) const { return opts.at(name)->count() > 0; }

  pipeline::PipelineConfig resolve() const {
    pipeline::PipelineConfig cfg;
    if (!config_path.empty()) cfg = pipeline::config_from_json(io::read_text_file(config_path), cfg);
    if (given("seed")) cfg.seed = seed;
    if (given("hidden")) cfg.hidden = hidden;
    if (given("layers")) cfg.audio_layers = layers_audio;
    if (given("video-layers")) cfg.video_layers = layers_video;
    if (given("epochs")) cfg.training.max_epochs = epochs;
    if (given("lr")) cfg.training.adam.lr = lr;
    if (given("batch")) cfg.training.batch_size = batch;
    if (given("n-trees")) cfg.n_trees = n_trees;
    if (given("tune-grid")) cfg.tune_grid = tune_grid;
    if (no_tune) cfg.tune_grid.clear();
    if (consistency) cfg.consistency = true;
    if (given("prior-ml")) cfg.prior_ml = prior_ml;
    auto kinds = [](const std::vector<std::string>& names) {
      std::vector<pipeline::ModelKind> out;
      for (const auto& n : names) {
        const auto k = pipeline::parse_model_kind(n);
        if (!k) throw ValidationError("unknown model '" + n + "'");
        out.push_back(*k);
      }
      return out;
    };
    if (given("type-models")) cfg.type_models = kinds(type_models);
    if (given("level-models")) cfg.level_models = kinds(level_models);
    cfg.validate();
    return cfg;
  }
};

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print_scores(const char* task, const std::vector<pipeline::ModelScore>& scores) {
  for (const auto& s : scores) {
    std::printf("%-6s %-10s weighted F1 %.4f\n", task, s.model.c_str(), s.weighted_f1);
  }
}

int run_synth_gen(const std::string& out, int n_per_class, std::uint64_t seed, int width,
                  int height) {
  synth::DatasetOptions opts;
  opts.n_per_class = n_per_class;
  opts.seed = seed;
  opts.width = width;
  opts.height = height;
  const auto manifest = synth::generate_dataset(out, opts);
  std::printf("wrote %zu sequences to %s\n", manifest.records.size(), out.c_str());
  return kExitOk;
}

int run_extract(const std::string& manifest_path, const std::string& out,
                const std::string& frames_dir) {
  const auto manifest = io::read_manifest(manifest_path);
  std::string csv = "sequence_id";
  for (const auto& n : audio::long_term_feature_names()) csv += "," + n;
  csv += "\n";
  for (const auto& rec : manifest.records) {
    const auto clip = io::read_wav(rec.audio);
    const auto frames = audio::short_term_features(clip);
    const auto lt = audio::aggregate_long_term(frames);
    csv += rec.sequence_id;
    for (double v : lt.values) csv += "," + shortest(v);
    csv += "\n";
    if (!frames_dir.empty()) {
      io::write_text_file(fs::path(frames_dir) / (rec.sequence_id + ".csv"),
                          audio::format_frames_csv(frames));
    }
  }
  io::write_text_file(out, csv);
  std::printf("wrote features for %zu sequences to %s\n", manifest.records.size(), out.c_str());
  return kExitOk;
}

int run_train(const std::string& manifest_path, const std::string& models_dir,
              const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  const auto manifest = io::read_manifest(manifest_path);
  const auto data = pipeline::load_sequences(manifest, cfg);
  const auto models = pipeline::train_models(data, cfg, log_line);
  pipeline::save_models(models_dir, models);
  io::write_text_file(fs::path(models_dir) / "config.json", pipeline::config_to_json(cfg));
  std::printf("trained on %zu sequences; models in %s\n", data.size(), models_dir.c_str());
  return kExitOk;
}

int run_predict(const std::string& manifest_path, const std::string& models_dir,
                const std::string& out, const std::string& sidecar, const std::string& report,
                ConfigFlags flags) {
  const fs::path saved = fs::path(models_dir) / "config.json";
  if (flags.config_path.empty() && fs::exists(saved)) flags.config_path = saved.string();
  const auto cfg = flags.resolve();
  const auto manifest = io::read_manifest(manifest_path);
  const auto data = pipeline::load_sequences(manifest, cfg);
  auto models = pipeline::load_models(models_dir);
  if (cfg.prior_ml) models.prior_ml = *cfg.prior_ml;
  const auto preds = pipeline::predict(models, data, cfg, log_line);
  const auto rows = pipeline::submission_rows(preds);
  io::write_text_file(out, fusion::format_submission(rows));
  io::write_text_file(sidecar.empty() ? out + ".log.json" : sidecar,
                      pipeline::format_sidecar_json(preds));
  std::printf("wrote %zu rows to %s\n", rows.size(), out.c_str());
  const bool labelled = std::all_of(manifest.records.begin(), manifest.records.end(),
                                    [](const io::SequenceRecord& r) { return r.labels.has_value(); });
  if (labelled && !manifest.records.empty()) {
    const auto rep = pipeline::evaluate(rows, manifest);
    std::fputs(fusion::format_report_table(rep).c_str(), stdout);
    if (!report.empty()) io::write_text_file(report, fusion::format_report_json(rep));
  }
  return kExitOk;
}

int run_capacity(const std::string& masks_dir, const std::vector<std::string>& calib, double prior,
                 int num_frames, const std::string& config_path) {
  pipeline::PipelineConfig cfg;
  if (!config_path.empty()) cfg = pipeline::config_from_json(io::read_text_file(config_path), cfg);
  cfg.validate();
  const std::array<io::CameraCalibration, 2> calibs = {io::read_calibration(calib.at(0)),
                                                       io::read_calibration(calib.at(1))};
  std::map<int, std::array<fs::path, 2>> found;
  const std::regex name(R"(c([12])_(\d+)\.pgm)");
  for (const auto& entry : fs::directory_iterator(masks_dir)) {
    std::smatch m;
    const std::string file = entry.path().filename().string();
    if (std::regex_match(file, m, name)) {
      found[std::stoi(m[2])][std::stoi(m[1]) - 1] = entry.path();
    }
  }
  std::vector<int> frames;
  if (num_frames > 0) {
    const auto sel = geom::select_frames(num_frames);
    frames.push_back(sel.first);
    if (sel.second != sel.first) frames.push_back(sel.second);
  } else {
    for (const auto& [f, paths] : found) frames.push_back(f);
  }
  std::vector<geom::FramePair> pairs;
  for (int f : frames) {
    const auto it = found.find(f);
    if (it == found.end() || it->second[0].empty() || it->second[1].empty()) {
      log_line("frame " + std::to_string(f) + ": masks missing in one or both views");
      continue;
    }
    pairs.push_back({io::read_pgm_mask(it->second[0]), io::read_pgm_mask(it->second[1])});
  }
  const auto est = geom::estimate_capacity_sequence(pairs, calibs, prior, cfg.fit);
  std::printf("capacity_ml,used_prior,frames_used,r_bar_m,height_m\n%s,%s,%d,%s,%s\n",
              shortest(est.capacity_ml).c_str(), est.used_prior ? "true" : "false",
              est.frames_used, shortest(est.r_bar).c_str(), shortest(est.height).c_str());
  return kExitOk;
}

int run_evaluate(const std::string& submission, const std::string& manifest_path,
                 const std::string& report) {
  const auto rows = fusion::parse_submission(io::read_text_file(submission));
  const auto manifest = io::read_manifest(manifest_path);
  const auto rep = pipeline::evaluate(rows, manifest);
  std::fputs(fusion::format_report_table(rep).c_str(), stdout);
  if (!report.empty()) io::write_text_file(report, fusion::format_report_json(rep));
  return kExitOk;
}

int run_cross_validate(const std::string& manifest_path, const std::string& out, int folds,
                       const ConfigFlags& flags) {
  const auto cfg = flags.resolve();
  const auto manifest = io::read_manifest(manifest_path);
  const auto data = pipeline::load_sequences(manifest, cfg);
  const auto res = pipeline::run_cross_validation(data, cfg, folds, log_line);
  print_scores("type", res.type_scores);
  print_scores("level", res.level_scores);
  std::fputs(fusion::format_report_table(res.report).c_str(), stdout);
  if (!out.empty()) {
    const auto rows = pipeline::submission_rows(res.predictions);
    io::write_text_file(fs::path(out) / "oof_submission.csv", fusion::format_submission(rows));
    io::write_text_file(fs::path(out) / "oof_report.json", fusion::format_report_json(res.report));
    io::write_text_file(fs::path(out) / "oof_predictions.log.json",
                        pipeline::format_sidecar_json(res.predictions));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filling type, level, capacity and mass estimation"};
  app.require_subcommand(1);

  std::string out, manifest, models_dir, sidecar, report, masks_dir, submission, frames_dir;
  int n_per_class = 1, width = 640, height = 480, num_frames = 0, folds = 3;
  std::uint64_t gen_seed = 0;
  double cap_prior = 0;
  std::vector<std::string> calib;

  auto* gen = app.add_subcommand("synth-gen", "Generate a labelled synthetic dataset");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--n-per-class", n_per_class, "Repetitions of the 12 type/level cells")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--width", width, "Mask width in pixels")->check(CLI::PositiveNumber);
  gen->add_option("--height", height, "Mask height in pixels")->check(CLI::PositiveNumber);

  auto* extract = app.add_subcommand("extract-features", "Write 136-d classical audio features");
  extract->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  extract->add_option("--out", out, "Output CSV")->required();
  extract->add_option("--frames-dir", frames_dir, "Also write per-window features here");

  ConfigFlags train_flags, predict_flags, cv_flags;
  auto* train = app.add_subcommand("train", "Train every enabled model");
  train->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  train->add_option("--models", models_dir, "Model directory")->required();
  train_flags.add_to(*train);

  auto* predict = app.add_subcommand("predict", "Write a submission CSV");
  predict->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  predict->add_option("--models", models_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--out", out, "Submission CSV")->required();
  predict->add_option("--sidecar", sidecar, "Per-sequence log JSON (default <out>.log.json)");
  predict->add_option("--report", report, "Metric report JSON when labels exist");
  predict_flags.add_to(*predict);

  auto* capacity = app.add_subcommand("capacity", "Estimate capacity from two-view masks");
  capacity->add_option("--masks", masks_dir, "Directory of c1_<frame>.pgm / c2_<frame>.pgm")
      ->required()
      ->check(CLI::ExistingDirectory);
  capacity->add_option("--calib", calib, "Calibrations of camera 1 and camera 2")
      ->required()
      ->expected(2)
      ->check(CLI::ExistingFile);
  capacity->add_option("--prior-ml", cap_prior, "Fallback capacity")->required()->check(
      CLI::PositiveNumber);
  capacity->add_option("--num-frames", num_frames,
                       "Sequence length; selects the first and 20th-from-last frames")
      ->check(CLI::PositiveNumber);
  std::string cap_config;
  capacity->add_option("--config", cap_config, "JSON configuration (fit parameters)")
      ->check(CLI::ExistingFile);

  auto* evaluate = app.add_subcommand("evaluate", "Score a submission against labels");
  evaluate->add_option("--submission", submission)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--report", report, "Metric report JSON");

  auto* cv = app.add_subcommand("cross-validate", "Per-type object cross-validation");
  cv->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  cv->add_option("--out", out, "Directory for out-of-fold outputs");
  cv->add_option("--folds", folds, "Objects per container type")->check(CLI::Range(2, 100));
  cv_flags.add_to(*cv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen) return run_synth_gen(out, n_per_class, gen_seed, width, height);
    if (*extract) return run_extract(manifest, out, frames_dir);
    if (*train) return run_train(manifest, models_dir, train_flags);
    if (*predict) return run_predict(manifest, models_dir, out, sidecar, report, predict_flags);
    if (*capacity) return run_capacity(masks_dir, calib, cap_prior, num_frames, cap_config);
    if (*evaluate) return run_evaluate(submission, manifest, report);
    if (*cv) return run_cross_validate(manifest, out, folds, cv_flags);
  } catch (const EvaluationError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitEvaluation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DimensionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const SplitError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
