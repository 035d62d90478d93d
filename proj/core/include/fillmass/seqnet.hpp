// SPDX-License-Identifier: Apache-2.0
//
// Many-to-one GRU sequence classifier: stacked GRU layers, a linear head on
// the top layer's last true hidden state, softmax cross-entropy and Adam.
//
// Gate equations per layer (h_0 = 0):
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   g = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - z) * h + z * g
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fillmass/random.hpp"

namespace fillmass::seqnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct GruLayerParams {
  Matrix W_z, W_r, W_h;  // H x D_in
  Matrix U_z, U_r, U_h;  // H x H
  Vector b_z, b_r, b_h;  // H

  static GruLayerParams zeros(int input_dim, int hidden);
  int input_dim() const { return static_cast<int>(W_z.cols()); }
  int hidden() const { return static_cast<int>(W_z.rows()); }
};

class GruStack {
 public:
  GruStack() = default;
  explicit GruStack(std::vector<GruLayerParams> layers);

  static GruStack zeros(int input_dim, int hidden, int num_layers);
  /// Uniform(-k, k) with k = 1/sqrt(hidden) for every weight and bias.
  static GruStack random(int input_dim, int hidden, int num_layers, Rng& rng);

  int input_dim() const { return layers_.front().input_dim(); }
  int hidden() const { return layers_.front().hidden(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<GruLayerParams>& layers() const { return layers_; }
  std::vector<GruLayerParams>& layers() { return layers_; }

 private:
  std::vector<GruLayerParams> layers_;
};

struct ClassifierHead {
  Matrix W;  // C x H
  Vector b;  // C

  static ClassifierHead zeros(int hidden, int classes);
  static ClassifierHead random(int hidden, int classes, Rng& rng);
  int classes() const { return static_cast<int>(W.rows()); }
};

struct SequenceClassifier {
  GruStack gru;
  ClassifierHead head;

  static SequenceClassifier random(int input_dim, int hidden, int num_layers, int classes,
                                   std::uint64_t seed);
  static SequenceClassifier zeros_like(const SequenceClassifier& other);

  /// Every trainable array as a flat view, in a fixed order.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::size_t parameter_count() const;
};

/// Top-layer hidden states, T x H. DomainError on shape mismatch or T = 0.
Matrix gru_forward(const GruStack& stack, const Matrix& sequence);

/// Logits from the top-layer state after `length` steps; rows >= length are never read.
Vector classify(const GruStack& stack, const ClassifierHead& head, const Matrix& sequence,
                int length);
Vector classify(const SequenceClassifier& model, const Matrix& sequence);

/// Numerically stable softmax (max-subtracted).
Vector softmax(const Vector& logits);

/// softmax of the elementwise sum of per-stream logits.
std::vector<double> combine_streams(std::span<const Vector> logits);

struct CrossEntropy {
  double loss = 0;
  Vector grad;  // d loss / d logits
};

CrossEntropy cross_entropy(const Vector& logits, int label);

// ---------------------------------------------------------------------------
// Optimization

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long step = 0;
};

/// In-place bias-corrected Adam update. Throws TrainingError (before touching
/// any parameter) if a gradient entry is not finite.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Training

/// One labeled example: one stream for audio, one per camera for video.
/// Logits of all streams are summed before the softmax.
struct SequenceItem {
  std::vector<Matrix> streams;  // each T_i x D
  int label = 0;
};

struct LossAndGradient {
  double loss = 0;  ///< mean cross-entropy over items
  SequenceClassifier grad;
};

/// Full-batch loss and analytic gradient via backpropagation through time
/// over padded streams.
LossAndGradient loss_and_gradient(const SequenceClassifier& model,
                                  std::span<const SequenceItem> items);

/// Mean cross-entropy only, computed through the unbatched path.
double loss(const SequenceClassifier& model, std::span<const SequenceItem> items);

Vector item_logits(const SequenceClassifier& model, const SequenceItem& item);
std::vector<double> predict_proba(const SequenceClassifier& model, const SequenceItem& item);
double accuracy(const SequenceClassifier& model, std::span<const SequenceItem> items);

struct TrainingConfig {
  int batch_size = 64;
  int max_epochs = 30;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double val_accuracy = 0;
  double val_loss = 0;
};

struct TrainResult {
  SequenceClassifier model;  ///< parameters from the selected epoch
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
};

/// Seeded mini-batch Adam. After every epoch the model is scored on `val`;
/// the epoch with the best validation accuracy (then lowest validation loss)
/// is returned. Without a validation set the last epoch is returned.
TrainResult train(SequenceClassifier model, std::span<const SequenceItem> train_items,
                  std::span<const SequenceItem> val_items, const TrainingConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

std::string serialize(const SequenceClassifier& model);
SequenceClassifier deserialize_classifier(const std::string& text);

}  // namespace fillmass::seqnet
