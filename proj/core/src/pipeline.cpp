// SPDX-License-Identifier: Apache-2.0
#include "fillmass/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "fillmass/errors.hpp"
#include "fillmass/random.hpp"

namespace fillmass::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Results
/// are written by index, so ordering never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

CvSplit make_cv_splits(std::span<const ObjectRef> objects, int k, std::uint64_t seed) {
  if (k < 2) throw SplitError("cross-validation needs at least 2 folds");
  std::array<std::vector<int>, kNumContainerTypes> by_type;
  std::set<int> seen;
  for (const auto& o : objects) {
    if (!seen.insert(o.id).second) throw SplitError("duplicate object id " + std::to_string(o.id));
    by_type[index_of(o.type)].push_back(o.id);
  }
  for (int t = 0; t < kNumContainerTypes; ++t) {
    if (static_cast<int>(by_type[t].size()) != k) {
      throw SplitError("container type '" + std::string(name_of(container_type_from_index(t))) +
                       "' has " + std::to_string(by_type[t].size()) + " objects, expected " +
                       std::to_string(k));
    }
    std::sort(by_type[t].begin(), by_type[t].end());
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    shuffle(by_type[t], rng);
  }
  CvSplit split;
  split.folds.resize(k);
  for (int i = 0; i < k; ++i) {
    for (int t = 0; t < kNumContainerTypes; ++t) {
      for (int j = 0; j < k; ++j) {
        (j == i ? split.folds[i].val_object_ids : split.folds[i].train_object_ids)
            .push_back(by_type[t][j]);
      }
    }
    std::sort(split.folds[i].train_object_ids.begin(), split.folds[i].train_object_ids.end());
    std::sort(split.folds[i].val_object_ids.begin(), split.folds[i].val_object_ids.end());
  }
  return split;
}

// ---------------------------------------------------------------------------

std::string_view name_of(ModelKind kind) {
  switch (kind) {
    case ModelKind::forest: return "forest";
    case ModelKind::audio_gru: return "audio_gru";
    case ModelKind::video_gru: return "video_gru";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::forest, ModelKind::audio_gru, ModelKind::video_gru}) {
    if (name == name_of(k)) return k;
  }
  return std::nullopt;
}

void PipelineConfig::validate() const {
  if (type_models.empty()) throw ValidationError("filling-type task has no enabled model");
  if (level_models.empty()) throw ValidationError("filling-level task has no enabled model");
  if (std::find(type_models.begin(), type_models.end(), ModelKind::video_gru) !=
      type_models.end()) {
    throw ValidationError("the filling-type task has no video model");
  }
  if (n_trees < 1) throw ValidationError("n_trees must be at least 1");
  for (int g : tune_grid) {
    if (g < 1) throw ValidationError("tree grid entries must be at least 1");
  }
  if (hidden < 1 || audio_layers < 1 || video_layers < 1) {
    throw ValidationError("GRU hidden size and layer counts must be at least 1");
  }
  if (training.batch_size < 1 || training.max_epochs < 1 || !(training.adam.lr > 0)) {
    throw ValidationError("batch, epochs and learning rate must be positive");
  }
  if (!(inner_val_fraction >= 0 && inner_val_fraction < 1)) {
    throw ValidationError("inner_val_fraction must lie in [0, 1)");
  }
  if (prior_ml && !(*prior_ml > 0)) throw ValidationError("prior_ml must be positive");
  try {
    fit.validate();
    densities.validate();
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
}

namespace {

std::vector<ModelKind> models_from_json(const json& j) {
  std::vector<ModelKind> out;
  for (const auto& v : j) {
    const auto k = parse_model_kind(v.get<std::string>());
    if (!k) throw ValidationError("unknown model '" + v.get<std::string>() + "'");
    out.push_back(*k);
  }
  return out;
}

json models_to_json(const std::vector<ModelKind>& models) {
  json out = json::array();
  for (auto k : models) out.push_back(std::string(name_of(k)));
  return out;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

PipelineConfig config_from_json(const std::string& json_text, PipelineConfig cfg) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  try {
    read_key(j, "seed", cfg.seed);
    if (j.contains("prior_ml")) {
      cfg.prior_ml = j["prior_ml"].is_null() ? std::nullopt
                                             : std::optional<double>(j["prior_ml"].get<double>());
    }
    read_key(j, "consistency", cfg.consistency);
    read_key(j, "n_trees", cfg.n_trees);
    read_key(j, "tune_grid", cfg.tune_grid);
    read_key(j, "max_depth", cfg.forest.max_depth);
    read_key(j, "min_samples_split", cfg.forest.min_samples_split);
    read_key(j, "hidden", cfg.hidden);
    read_key(j, "audio_layers", cfg.audio_layers);
    read_key(j, "video_layers", cfg.video_layers);
    read_key(j, "epochs", cfg.training.max_epochs);
    read_key(j, "batch", cfg.training.batch_size);
    read_key(j, "lr", cfg.training.adam.lr);
    read_key(j, "inner_val_fraction", cfg.inner_val_fraction);
    if (j.contains("type_models")) cfg.type_models = models_from_json(j["type_models"]);
    if (j.contains("level_models")) cfg.level_models = models_from_json(j["level_models"]);
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      read_key(f, "r_max", cfg.fit.r_max);
      read_key(f, "half_height", cfg.fit.half_height);
      read_key(f, "ring_spacing", cfg.fit.ring_spacing);
      read_key(f, "shrink_step", cfg.fit.shrink_step);
      read_key(f, "r_min", cfg.fit.r_min);
      read_key(f, "n_angles", cfg.fit.n_angles);
    }
    if (j.contains("densities")) {
      const auto& d = j["densities"];
      read_key(d, "pasta", cfg.densities.pasta);
      read_key(d, "rice", cfg.densities.rice);
      read_key(d, "water", cfg.densities.water);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config has a value of the wrong type: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["prior_ml"] = cfg.prior_ml ? json(*cfg.prior_ml) : json(nullptr);
  j["consistency"] = cfg.consistency;
  j["n_trees"] = cfg.n_trees;
  j["tune_grid"] = cfg.tune_grid;
  j["max_depth"] = cfg.forest.max_depth;
  j["min_samples_split"] = cfg.forest.min_samples_split;
  j["hidden"] = cfg.hidden;
  j["audio_layers"] = cfg.audio_layers;
  j["video_layers"] = cfg.video_layers;
  j["epochs"] = cfg.training.max_epochs;
  j["batch"] = cfg.training.batch_size;
  j["lr"] = cfg.training.adam.lr;
  j["inner_val_fraction"] = cfg.inner_val_fraction;
  j["type_models"] = models_to_json(cfg.type_models);
  j["level_models"] = models_to_json(cfg.level_models);
  j["fit"] = {{"r_max", cfg.fit.r_max},           {"half_height", cfg.fit.half_height},
              {"ring_spacing", cfg.fit.ring_spacing}, {"shrink_step", cfg.fit.shrink_step},
              {"r_min", cfg.fit.r_min},           {"n_angles", cfg.fit.n_angles}};
  j["densities"] = {{"pasta", cfg.densities.pasta},
                    {"rice", cfg.densities.rice},
                    {"water", cfg.densities.water}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

SequenceData load_sequence(const io::SequenceRecord& record, const PipelineConfig& cfg) {
  SequenceData d;
  d.record = record;
  if (!record.audio.empty()) {
    try {
      d.classical = audio::classical_features(io::read_wav(record.audio), cfg.frames);
    } catch (const TooShortError& e) {
      d.warnings.push_back(std::string("audio too short for classical features: ") + e.what());
    }
  } else {
    d.warnings.push_back("no audio file");
  }
  if (record.audio_embedding) {
    d.audio_embedding = io::read_embedding_sequence(*record.audio_embedding).data();
    if (d.audio_embedding->cols() != io::kAudioEmbeddingDim) {
      throw DimensionError("audio embedding of " + record.sequence_id + " is not 128-d");
    }
  }
  for (std::size_t c = 0; c < record.video_embeddings.size(); ++c) {
    auto seq = io::read_embedding_sequence(record.video_embeddings[c], static_cast<int>(c));
    if (seq.dim() != io::kVideoEmbeddingDim) {
      throw DimensionError("video embedding of " + record.sequence_id + " is not 512-d");
    }
    d.video_embeddings.push_back(seq.data());
  }
  return d;
}

std::vector<SequenceData> load_sequences(const io::DatasetManifest& manifest,
                                         const PipelineConfig& cfg) {
  std::vector<SequenceData> out(manifest.records.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = load_sequence(manifest.records[i], cfg); });
  return out;
}

std::vector<ObjectRef> objects_of(std::span<const SequenceData> data) {
  std::map<int, ContainerType> objects;
  for (const auto& d : data) {
    const auto [it, inserted] = objects.emplace(d.record.container_id, d.record.container_type);
    if (!inserted && it->second != d.record.container_type) {
      throw ValidationError("container " + std::to_string(d.record.container_id) +
                            " appears with two container types");
    }
  }
  std::vector<ObjectRef> out;
  for (const auto& [id, type] : objects) out.push_back({id, type});
  return out;
}

// ---------------------------------------------------------------------------

namespace {

enum class Task { type, level };

int label_of(const SequenceData& d, Task task) {
  if (!d.record.labels) throw ValidationError("sequence " + d.record.sequence_id + " has no labels");
  return task == Task::type ? index_of(d.record.labels->filling_type)
                            : index_of(d.record.labels->filling_level);
}

int classes_of(Task task) { return task == Task::type ? kNumFillingTypes : kNumFillingLevels; }

const char* task_name(Task task) { return task == Task::type ? "type" : "level"; }

std::optional<seqnet::SequenceItem> gru_item(const SequenceData& d, ModelKind kind, int label) {
  seqnet::SequenceItem item;
  item.label = label;
  if (kind == ModelKind::audio_gru) {
    if (!d.audio_embedding) return std::nullopt;
    item.streams.push_back(*d.audio_embedding);
  } else {
    if (d.video_embeddings.empty()) return std::nullopt;
    item.streams = d.video_embeddings;
  }
  return item;
}

struct InnerSplit {
  std::vector<int> fit;
  std::vector<int> holdout;
};

InnerSplit inner_split(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x1a4e));
  shuffle(idx, rng);
  std::size_t hold = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (fraction > 0 && hold == 0 && n >= 2) hold = 1;
  InnerSplit s;
  s.holdout.assign(idx.begin(), idx.begin() + static_cast<long>(hold));
  s.fit.assign(idx.begin() + static_cast<long>(hold), idx.end());
  std::sort(s.holdout.begin(), s.holdout.end());
  std::sort(s.fit.begin(), s.fit.end());
  return s;
}

forest::RandomForestModel train_task_forest(std::span<const SequenceData> train, Task task,
                                            const InnerSplit& inner, const PipelineConfig& cfg,
                                            const LogFn& log) {
  std::vector<int> usable;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].classical) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty()) {
    throw ValidationError(std::string("no training sequence has classical audio features (") +
                          task_name(task) + " forest)");
  }
  auto build = [&](const std::vector<int>& rows, Eigen::MatrixXd& X, std::vector<int>& y) {
    X.resize(static_cast<long>(rows.size()), audio::kLongTermDim);
    y.clear();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& v = train[rows[r]].classical->values;
      for (int c = 0; c < audio::kLongTermDim; ++c) X(static_cast<long>(r), c) = v[c];
      y.push_back(label_of(train[rows[r]], task));
    }
  };
  const std::uint64_t seed = mix_seed(cfg.seed, task == Task::type ? 11 : 12);
  int n_trees = cfg.n_trees;
  if (!cfg.tune_grid.empty()) {
    std::vector<int> fit, hold;
    for (int i : inner.fit) {
      if (train[i].classical) fit.push_back(i);
    }
    for (int i : inner.holdout) {
      if (train[i].classical) hold.push_back(i);
    }
    if (!fit.empty() && !hold.empty()) {
      Eigen::MatrixXd Xf, Xh;
      std::vector<int> yf, yh;
      build(fit, Xf, yf);
      build(hold, Xh, yh);
      const auto tuning = forest::tune_n_trees(Xf, yf, Xh, yh, classes_of(task), cfg.tune_grid,
                                               seed, cfg.forest);
      n_trees = tuning.chosen;
      if (log) {
        log(std::string(task_name(task)) + " forest: " + std::to_string(n_trees) +
            " trees chosen on the inner holdout");
      }
    }
  }
  Eigen::MatrixXd X;
  std::vector<int> y;
  build(usable, X, y);
  return forest::train_forest(X, y, classes_of(task), n_trees, seed, cfg.forest);
}

seqnet::SequenceClassifier train_task_gru(std::span<const SequenceData> train, Task task,
                                          ModelKind kind, const InnerSplit& inner,
                                          const PipelineConfig& cfg, const LogFn& log) {
  std::vector<seqnet::SequenceItem> fit, hold;
  for (int i : inner.fit) {
    if (auto it = gru_item(train[i], kind, label_of(train[i], task))) fit.push_back(std::move(*it));
  }
  for (int i : inner.holdout) {
    if (auto it = gru_item(train[i], kind, label_of(train[i], task))) hold.push_back(std::move(*it));
  }
  if (fit.empty()) {
    throw ValidationError(std::string("no training sequence carries the modality of ") +
                          std::string(name_of(kind)) + " (" + task_name(task) + " task)");
  }
  const std::uint64_t code = (task == Task::type ? 20 : 30) + static_cast<int>(kind);
  const int dim = kind == ModelKind::audio_gru ? io::kAudioEmbeddingDim : io::kVideoEmbeddingDim;
  const int layers = kind == ModelKind::audio_gru ? cfg.audio_layers : cfg.video_layers;
  auto model = seqnet::SequenceClassifier::random(dim, cfg.hidden, layers, classes_of(task),
                                                  mix_seed(cfg.seed, code));
  seqnet::TrainingConfig tc = cfg.training;
  tc.seed = mix_seed(cfg.seed, code + 100);
  auto result = seqnet::train(std::move(model), fit, hold, tc);
  if (log) {
    const auto& best = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
    log(std::string(task_name(task)) + " " + std::string(name_of(kind)) + ": epoch " +
        std::to_string(result.best_epoch) + " selected (holdout accuracy " +
        std::to_string(best.val_accuracy) + ")");
  }
  return std::move(result.model);
}

TaskModels train_task(std::span<const SequenceData> train, Task task,
                      std::span<const ModelKind> enabled, const InnerSplit& inner,
                      const PipelineConfig& cfg, const LogFn& log) {
  TaskModels m;
  for (auto kind : enabled) {
    if (kind == ModelKind::forest) {
      m.forest = train_task_forest(train, task, inner, cfg, log);
    } else if (kind == ModelKind::audio_gru) {
      m.audio_gru = train_task_gru(train, task, kind, inner, cfg, log);
    } else {
      m.video_gru = train_task_gru(train, task, kind, inner, cfg, log);
    }
  }
  return m;
}

}  // namespace

TrainedModels train_models(std::span<const SequenceData> train, const PipelineConfig& cfg,
                           const LogFn& log) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  double cap_sum = 0;
  for (const auto& d : train) {
    if (!d.record.labels) {
      throw ValidationError("training sequence " + d.record.sequence_id + " has no labels");
    }
    cap_sum += d.record.labels->capacity_ml;
  }
  TrainedModels out;
  out.prior_ml = cfg.prior_ml ? *cfg.prior_ml : cap_sum / static_cast<double>(train.size());
  if (!(out.prior_ml > 0)) throw ValidationError("capacity prior must be positive");
  const auto inner = inner_split(train.size(), cfg.inner_val_fraction, cfg.seed);
  out.type = train_task(train, Task::type, cfg.type_models, inner, cfg, log);
  out.level = train_task(train, Task::level, cfg.level_models, inner, cfg, log);
  return out;
}

// ---------------------------------------------------------------------------

void save_models(const fs::path& dir, const TrainedModels& models) {
  json index;
  index["format"] = "fillmass.pipeline_models";
  index["version"] = 1;
  index["prior_ml"] = models.prior_ml;
  json files = json::object();
  auto save = [&](const std::string& name, const std::string& text) {
    io::write_text_file(dir / (name + ".json"), text);
    files[name] = name + ".json";
  };
  for (auto [prefix, task] : {std::pair{"type", &models.type}, std::pair{"level", &models.level}}) {
    const std::string p = prefix;
    if (task->forest) save(p + "_forest", forest::serialize(*task->forest));
    if (task->audio_gru) save(p + "_audio_gru", seqnet::serialize(*task->audio_gru));
    if (task->video_gru) save(p + "_video_gru", seqnet::serialize(*task->video_gru));
  }
  index["models"] = files;
  io::write_text_file(dir / "pipeline.json", index.dump(2) + "\n");
}

TrainedModels load_models(const fs::path& dir) {
  json index;
  try {
    index = json::parse(io::read_text_file(dir / "pipeline.json"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("pipeline.json is not valid JSON: ") + e.what());
  }
  if (index.value("format", "") != "fillmass.pipeline_models" || index.value("version", 0) != 1) {
    throw FormatError("unsupported model directory format");
  }
  TrainedModels m;
  m.prior_ml = index.at("prior_ml").get<double>();
  const auto& files = index.at("models");
  auto text = [&](const std::string& name) -> std::optional<std::string> {
    if (!files.contains(name)) return std::nullopt;
    return io::read_text_file(dir / files[name].get<std::string>());
  };
  for (auto [prefix, task] : {std::pair{"type", &m.type}, std::pair{"level", &m.level}}) {
    const std::string p = prefix;
    if (auto t = text(p + "_forest")) task->forest = forest::deserialize_forest(*t);
    if (auto t = text(p + "_audio_gru")) task->audio_gru = seqnet::deserialize_classifier(*t);
    if (auto t = text(p + "_video_gru")) task->video_gru = seqnet::deserialize_classifier(*t);
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<ModelOutput> task_outputs(const TaskModels& models, std::span<const ModelKind> enabled,
                                      const SequenceData& seq) {
  std::vector<ModelOutput> out;
  for (auto kind : enabled) {
    switch (kind) {
      case ModelKind::forest:
        if (models.forest && seq.classical) {
          out.push_back({kind, models.forest->predict_proba(seq.classical->values)});
        }
        break;
      case ModelKind::audio_gru:
      case ModelKind::video_gru: {
        const auto& net = kind == ModelKind::audio_gru ? models.audio_gru : models.video_gru;
        if (!net) break;
        if (auto item = gru_item(seq, kind, 0)) {
          out.push_back({kind, seqnet::predict_proba(*net, *item)});
        }
        break;
      }
    }
  }
  return out;
}

fusion::ClassProbs fuse(std::span<const ModelOutput> outputs, int classes,
                        std::vector<std::string>* warnings) {
  if (outputs.empty()) {
    if (warnings) warnings->push_back("no model produced an output; using a uniform distribution");
    return fusion::ClassProbs(std::vector<double>(classes, 1.0 / classes));
  }
  std::vector<fusion::ClassProbs> probs;
  for (const auto& o : outputs) {
    std::vector<double> p = o.probs;
    // Softmax and leaf averages can drift from 1 by a few ulps.
    double sum = 0;
    for (double v : p) sum += v;
    for (double& v : p) v /= sum;
    probs.emplace_back(std::move(p));
  }
  return fusion::average_probs(probs);
}

geom::CapacityEstimate estimate_capacity(const io::SequenceRecord& record, double prior_ml,
                                         const geom::FitConfig& fit,
                                         std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  std::vector<geom::FramePair> frames;
  std::array<io::CameraCalibration, 2> calibs;
  bool calib_ok = record.calibrations.size() >= 2;
  if (calib_ok) {
    try {
      calibs = {io::read_calibration(record.calibrations[0]),
                io::read_calibration(record.calibrations[1])};
    } catch (const Error& e) {
      warn(std::string("calibration unreadable: ") + e.what());
      calib_ok = false;
    }
  } else {
    warn("sequence has fewer than two calibrations");
  }
  if (calib_ok && record.num_frames >= 1) {
    const auto sel = geom::select_frames(record.num_frames);
    std::vector<int> wanted = {sel.first};
    if (sel.second != sel.first) wanted.push_back(sel.second);
    for (int f : wanted) {
      const auto it = std::find_if(record.masks.begin(), record.masks.end(),
                                   [&](const io::FrameMasks& m) { return m.frame == f; });
      if (it == record.masks.end() || it->per_camera.size() < 2) {
        warn("no masks for frame " + std::to_string(f));
        continue;
      }
      try {
        frames.push_back({io::read_pgm_mask(it->per_camera[0]), io::read_pgm_mask(it->per_camera[1])});
      } catch (const Error& e) {
        warn("masks of frame " + std::to_string(f) + " unreadable: " + e.what());
      }
    }
  }
  auto est = geom::estimate_capacity_sequence(frames, calibs, prior_ml, fit);
  if (est.used_prior) warn("no frame produced a detection; capacity prior used");
  return est;
}

SequencePrediction predict_sequence(const TrainedModels& models, const SequenceData& seq,
                                    const PipelineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  SequencePrediction p;
  p.sequence_id = seq.record.sequence_id;
  p.warnings = seq.warnings;
  p.type_outputs = task_outputs(models.type, cfg.type_models, seq);
  p.level_outputs = task_outputs(models.level, cfg.level_models, seq);
  for (auto [outputs, enabled] : {std::pair{&p.type_outputs, &cfg.type_models},
                                  std::pair{&p.level_outputs, &cfg.level_models}}) {
    for (auto kind : *enabled) {
      const bool present = std::any_of(outputs->begin(), outputs->end(),
                                       [&](const ModelOutput& o) { return o.kind == kind; });
      if (!present) {
        p.warnings.push_back(std::string(name_of(kind)) +
                             " skipped: model or input modality missing");
      }
    }
  }
  p.type_probs = fuse(p.type_outputs, kNumFillingTypes, &p.warnings);
  if (cfg.consistency) {
    p.type_probs = fusion::apply_container_consistency(p.type_probs, seq.record.container_type);
  }
  p.level_probs = fuse(p.level_outputs, kNumFillingLevels, &p.warnings);
  p.capacity = estimate_capacity(seq.record, models.prior_ml, cfg.fit, &p.warnings);

  p.row.sequence_id = p.sequence_id;
  p.row.capacity_ml = p.capacity.capacity_ml;
  p.row.filling_type = filling_type_from_index(fusion::decode_label(p.type_probs));
  p.row.filling_level = filling_level_from_index(fusion::decode_label(p.level_probs));
  p.row.mass_g =
      fusion::filling_mass(p.row.capacity_ml, p.row.filling_level, p.row.filling_type, cfg.densities);
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

std::vector<SequencePrediction> predict(const TrainedModels& models,
                                        std::span<const SequenceData> data,
                                        const PipelineConfig& cfg, const LogFn& log) {
  cfg.validate();
  std::vector<std::optional<SequencePrediction>> slots(data.size());
  parallel_for(data.size(), [&](std::size_t i) { slots[i] = predict_sequence(models, data[i], cfg); });
  std::vector<SequencePrediction> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    if (log) {
      for (const auto& w : s->warnings) log(s->sequence_id + ": " + w);
    }
    out.push_back(std::move(*s));
  }
  return out;
}

std::vector<fusion::SubmissionRow> submission_rows(std::span<const SequencePrediction> preds) {
  std::vector<fusion::SubmissionRow> rows;
  rows.reserve(preds.size());
  for (const auto& p : preds) rows.push_back(p.row);
  return rows;
}

std::string format_sidecar_json(std::span<const SequencePrediction> preds) {
  json doc;
  doc["schema"] = "fillmass.prediction_log";
  doc["version"] = 1;
  json seqs = json::array();
  for (const auto& p : preds) {
    json outputs = json::object();
    for (const auto& o : p.type_outputs) outputs["type_" + std::string(name_of(o.kind))] = o.probs;
    for (const auto& o : p.level_outputs) outputs["level_" + std::string(name_of(o.kind))] = o.probs;
    seqs.push_back({{"sequence_id", p.sequence_id},
                    {"seconds", p.seconds},
                    {"used_prior", p.capacity.used_prior},
                    {"frames_used", p.capacity.frames_used},
                    {"capacity_ml", p.capacity.capacity_ml},
                    {"r_bar_m", p.capacity.r_bar},
                    {"height_m", p.capacity.height},
                    {"type_probs", p.type_probs.values()},
                    {"level_probs", p.level_probs.values()},
                    {"model_outputs", outputs},
                    {"warnings", p.warnings}});
  }
  doc["sequences"] = seqs;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

fusion::MetricReport evaluate(std::span<const fusion::SubmissionRow> rows,
                              const io::DatasetManifest& manifest) {
  std::map<std::string, const fusion::SubmissionRow*> by_id;
  for (const auto& r : rows) by_id[r.sequence_id] = &r;
  std::vector<std::string> missing;
  for (const auto& rec : manifest.records) {
    if (!by_id.count(rec.sequence_id)) missing.push_back(rec.sequence_id);
  }
  if (!missing.empty()) {
    std::string msg = "submission is missing " + std::to_string(missing.size()) + " sequence(s):";
    for (const auto& id : missing) msg += " " + id;
    throw EvaluationError(msg);
  }
  fusion::MetricReport report;
  std::vector<int> pt, tt, pl, tl;
  double cap = 0, mass = 0;
  for (const auto& rec : manifest.records) {
    if (!rec.labels) continue;
    const auto& row = *by_id[rec.sequence_id];
    const auto& lab = *rec.labels;
    fusion::SequenceScore s;
    s.sequence_id = rec.sequence_id;
    s.type_correct = row.filling_type == lab.filling_type;
    s.level_correct = row.filling_level == lab.filling_level;
    s.capacity_score = fusion::capacity_score(row.capacity_ml, lab.capacity_ml);
    s.mass_score = fusion::mass_score(row.mass_g, lab.mass_g);
    pt.push_back(index_of(row.filling_type));
    tt.push_back(index_of(lab.filling_type));
    pl.push_back(index_of(row.filling_level));
    tl.push_back(index_of(lab.filling_level));
    cap += s.capacity_score;
    mass += s.mass_score;
    report.sequences.push_back(std::move(s));
  }
  if (report.sequences.empty()) throw EvaluationError("manifest has no labelled sequences");
  const double n = static_cast<double>(report.sequences.size());
  report.weighted_f1_type = fusion::weighted_f1(pt, tt, kNumFillingTypes);
  report.weighted_f1_level = fusion::weighted_f1(pl, tl, kNumFillingLevels);
  report.capacity_score = cap / n;
  report.mass_score = mass / n;
  return report;
}

namespace {

std::vector<ModelScore> task_scores(std::span<const SequencePrediction> preds,
                                    std::span<const SequenceData> data, Task task,
                                    std::span<const ModelKind> enabled) {
  std::vector<ModelScore> scores;
  for (auto kind : enabled) {
    std::vector<int> p, t;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& outs = task == Task::type ? preds[i].type_outputs : preds[i].level_outputs;
      for (const auto& o : outs) {
        if (o.kind != kind) continue;
        p.push_back(static_cast<int>(std::max_element(o.probs.begin(), o.probs.end()) -
                                     o.probs.begin()));
        t.push_back(label_of(data[i], task));
      }
    }
    if (!t.empty()) {
      scores.push_back({std::string(name_of(kind)), fusion::weighted_f1(p, t, classes_of(task))});
    }
  }
  std::vector<int> p, t;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p.push_back(fusion::decode_label(task == Task::type ? preds[i].type_probs : preds[i].level_probs));
    t.push_back(label_of(data[i], task));
  }
  scores.push_back({"fused", fusion::weighted_f1(p, t, classes_of(task))});
  return scores;
}

}  // namespace

CrossValidationResult run_cross_validation(std::span<const SequenceData> data,
                                           const PipelineConfig& cfg, int k, const LogFn& log) {
  cfg.validate();
  CrossValidationResult result;
  result.split = make_cv_splits(objects_of(data), k, cfg.seed);
  std::vector<std::optional<SequencePrediction>> slots(data.size());
  for (std::size_t f = 0; f < result.split.folds.size(); ++f) {
    const auto& fold = result.split.folds[f];
    const std::set<int> val_ids(fold.val_object_ids.begin(), fold.val_object_ids.end());
    std::vector<SequenceData> train;
    std::vector<std::size_t> val;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (val_ids.count(data[i].record.container_id)) {
        val.push_back(i);
      } else {
        train.push_back(data[i]);
      }
    }
    if (log) {
      log("fold " + std::to_string(f + 1) + ": " + std::to_string(train.size()) + " train / " +
          std::to_string(val.size()) + " validation sequences");
    }
    PipelineConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, 1000 + f);
    const auto models = train_models(train, fold_cfg, log);
    parallel_for(val.size(), [&](std::size_t j) {
      slots[val[j]] = predict_sequence(models, data[val[j]], fold_cfg);
    });
  }
  for (auto& s : slots) result.predictions.push_back(std::move(*s));
  result.type_scores = task_scores(result.predictions, data, Task::type, cfg.type_models);
  result.level_scores = task_scores(result.predictions, data, Task::level, cfg.level_models);
  io::DatasetManifest manifest;
  for (const auto& d : data) manifest.records.push_back(d.record);
  result.report = evaluate(submission_rows(result.predictions), manifest);
  return result;
}

double score_of(std::span<const ModelScore> scores, std::string_view model) {
  for (const auto& s : scores) {
    if (s.model == model) return s.weighted_f1;
  }
  throw DomainError("no score recorded for model " + std::string(model));
}

}  // namespace fillmass::pipeline
