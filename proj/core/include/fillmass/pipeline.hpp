// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: per-task model sets, late fusion, capacity with a
// training prior, mass composition, per-type object cross-validation and
// submission scoring.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fillmass/audio_features.hpp"
#include "fillmass/capacity_geom.hpp"
#include "fillmass/forest.hpp"
#include "fillmass/fusion_mass.hpp"
#include "fillmass/media_io.hpp"
#include "fillmass/seqnet.hpp"

namespace fillmass::pipeline {

// ---------------------------------------------------------------------------
// Cross-validation splits

struct ObjectRef {
  int id = 0;
  ContainerType type = ContainerType::cup;
};

struct Fold {
  std::vector<int> train_object_ids;
  std::vector<int> val_object_ids;
};

struct CvSplit {
  std::vector<Fold> folds;
};

/// Fold i validates the i-th object of every container type after a seeded
/// per-type shuffle. Objects are sorted by id first, so the result does not
/// depend on input order. SplitError when a type does not have exactly k objects.
CvSplit make_cv_splits(std::span<const ObjectRef> objects, int k = 3, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Configuration

enum class ModelKind { forest, audio_gru, video_gru };

std::string_view name_of(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

struct PipelineConfig {
  std::uint64_t seed = 0;

  geom::FitConfig fit;
  fusion::DensityTable densities;
  /// Capacity fallback; when unset the mean training capacity is used.
  std::optional<double> prior_ml;
  bool consistency = false;

  int n_trees = 100;
  /// Non-empty: choose the tree count on the inner holdout.
  std::vector<int> tune_grid = forest::kDefaultTreeGrid;
  forest::ForestConfig forest;

  int hidden = 512;
  int audio_layers = 5;
  int video_layers = 3;
  seqnet::TrainingConfig training;

  /// Fraction of training sequences held out for epoch and tree-count selection.
  double inner_val_fraction = 0.2;

  std::vector<ModelKind> type_models = {ModelKind::forest, ModelKind::audio_gru};
  std::vector<ModelKind> level_models = {ModelKind::forest, ModelKind::audio_gru,
                                         ModelKind::video_gru};

  audio::FrameConfig frames;

  /// ValidationError on empty model sets, a video model for the type task or
  /// out-of-range hyper-parameters.
  void validate() const;
};

/// Keys missing from the document keep their current value in `base`.
PipelineConfig config_from_json(const std::string& json_text, PipelineConfig base = {});
std::string config_to_json(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Loaded sequences

/// Everything the classifiers need for one sequence. Masks are read lazily by
/// the capacity stage so large datasets need not reside in memory.
struct SequenceData {
  io::SequenceRecord record;
  std::optional<audio::LongTermVector> classical;
  std::optional<seqnet::Matrix> audio_embedding;
  std::vector<seqnet::Matrix> video_embeddings;
  std::vector<std::string> warnings;
};

SequenceData load_sequence(const io::SequenceRecord& record, const PipelineConfig& cfg);
std::vector<SequenceData> load_sequences(const io::DatasetManifest& manifest,
                                         const PipelineConfig& cfg);

std::vector<ObjectRef> objects_of(std::span<const SequenceData> data);

// ---------------------------------------------------------------------------
// Models

struct TaskModels {
  std::optional<forest::RandomForestModel> forest;
  std::optional<seqnet::SequenceClassifier> audio_gru;
  std::optional<seqnet::SequenceClassifier> video_gru;
};

struct TrainedModels {
  TaskModels type;
  TaskModels level;
  double prior_ml = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains every enabled model of both tasks on labelled sequences.
/// ValidationError when a sequence lacks labels or an enabled model has no
/// usable training input.
TrainedModels train_models(std::span<const SequenceData> train, const PipelineConfig& cfg,
                           const LogFn& log = {});

void save_models(const std::filesystem::path& dir, const TrainedModels& models);
TrainedModels load_models(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Prediction

struct ModelOutput {
  ModelKind kind;
  std::vector<double> probs;
};

struct SequencePrediction {
  std::string sequence_id;
  std::vector<ModelOutput> type_outputs;
  std::vector<ModelOutput> level_outputs;
  fusion::ClassProbs type_probs{std::vector<double>(kNumFillingTypes, 1.0 / kNumFillingTypes)};
  fusion::ClassProbs level_probs{std::vector<double>(kNumFillingLevels, 1.0 / kNumFillingLevels)};
  geom::CapacityEstimate capacity;
  fusion::SubmissionRow row;
  std::vector<std::string> warnings;
  double seconds = 0;
};

/// Per-model outputs for the enabled models whose modality is present.
std::vector<ModelOutput> task_outputs(const TaskModels& models, std::span<const ModelKind> enabled,
                                      const SequenceData& seq);

/// Mean of the given outputs; uniform with a warning when there are none.
fusion::ClassProbs fuse(std::span<const ModelOutput> outputs, int classes,
                        std::vector<std::string>* warnings = nullptr);

/// Reads the sequence's selected-frame masks and calibrations and runs the
/// capacity estimator; any read failure counts as a failed frame.
geom::CapacityEstimate estimate_capacity(const io::SequenceRecord& record, double prior_ml,
                                         const geom::FitConfig& fit,
                                         std::vector<std::string>* warnings = nullptr);

SequencePrediction predict_sequence(const TrainedModels& models, const SequenceData& seq,
                                    const PipelineConfig& cfg);

std::vector<SequencePrediction> predict(const TrainedModels& models,
                                        std::span<const SequenceData> data,
                                        const PipelineConfig& cfg, const LogFn& log = {});

std::vector<fusion::SubmissionRow> submission_rows(std::span<const SequencePrediction> preds);

/// Per-sequence timing, capacity fallback flags, model outputs and warnings.
std::string format_sidecar_json(std::span<const SequencePrediction> preds);

// ---------------------------------------------------------------------------
// Evaluation

/// Scores a submission against the labelled manifest. EvaluationError lists
/// every manifest id absent from the submission.
fusion::MetricReport evaluate(std::span<const fusion::SubmissionRow> rows,
                              const io::DatasetManifest& manifest);

struct ModelScore {
  std::string model;  ///< model name, or "fused"
  double weighted_f1 = 0;
};

struct CrossValidationResult {
  std::vector<SequencePrediction> predictions;  ///< out-of-fold, manifest order
  std::vector<ModelScore> type_scores;
  std::vector<ModelScore> level_scores;
  fusion::MetricReport report;
  CvSplit split;
};

/// Trains on each fold's training objects and predicts its validation objects.
CrossValidationResult run_cross_validation(std::span<const SequenceData> data,
                                           const PipelineConfig& cfg, int k = 3,
                                           const LogFn& log = {});

double score_of(std::span<const ModelScore> scores, std::string_view model);

}  // namespace fillmass::pipeline
