// SPDX-License-Identifier: Apache-2.0
#include "fillmass/seqnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "fillmass/errors.hpp"

namespace fillmass::seqnet {

using json = nlohmann::json;

namespace {

Matrix sigmoid(const Matrix& a) {
  return a.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Matrix tanh_of(const Matrix& a) {
  return a.unaryExpr([](double x) { return std::tanh(x); });
}

void fill_uniform(Matrix& m, double k, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-k, k);
}

void fill_uniform(Vector& v, double k, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-k, k);
}

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

GruLayerParams GruLayerParams::zeros(int input_dim, int hidden) {
  GruLayerParams p;
  p.W_z = p.W_r = p.W_h = Matrix::Zero(hidden, input_dim);
  p.U_z = p.U_r = p.U_h = Matrix::Zero(hidden, hidden);
  p.b_z = p.b_r = p.b_h = Vector::Zero(hidden);
  return p;
}

GruStack::GruStack(std::vector<GruLayerParams> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DomainError("GRU stack needs at least one layer");
  const int h = layers_.front().hidden();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& p = layers_[l];
    const int d = p.input_dim();
    const bool ok = p.W_r.rows() == h && p.W_h.rows() == h && p.W_z.rows() == h &&
                    p.W_r.cols() == d && p.W_h.cols() == d && p.U_z.rows() == h &&
                    p.U_z.cols() == h && p.U_r.rows() == h && p.U_r.cols() == h &&
                    p.U_h.rows() == h && p.U_h.cols() == h && p.b_z.size() == h &&
                    p.b_r.size() == h && p.b_h.size() == h && (l == 0 || d == h);
    if (!ok) throw DomainError("inconsistent GRU layer shapes at layer " + std::to_string(l));
  }
}

GruStack GruStack::zeros(int input_dim, int hidden, int num_layers) {
  if (input_dim < 1 || hidden < 1 || num_layers < 1) throw DomainError("bad GRU dimensions");
  std::vector<GruLayerParams> layers;
  for (int l = 0; l < num_layers; ++l) {
    layers.push_back(GruLayerParams::zeros(l == 0 ? input_dim : hidden, hidden));
  }
  return GruStack(std::move(layers));
}

GruStack GruStack::random(int input_dim, int hidden, int num_layers, Rng& rng) {
  GruStack s = zeros(input_dim, hidden, num_layers);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& p : s.layers_) {
    for (Matrix* m : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h}) fill_uniform(*m, k, rng);
    for (Vector* v : {&p.b_z, &p.b_r, &p.b_h}) fill_uniform(*v, k, rng);
  }
  return s;
}

ClassifierHead ClassifierHead::zeros(int hidden, int classes) {
  if (hidden < 1 || classes < 1) throw DomainError("bad classifier head dimensions");
  return {Matrix::Zero(classes, hidden), Vector::Zero(classes)};
}

ClassifierHead ClassifierHead::random(int hidden, int classes, Rng& rng) {
  ClassifierHead h = zeros(hidden, classes);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill_uniform(h.W, k, rng);
  fill_uniform(h.b, k, rng);
  return h;
}

SequenceClassifier SequenceClassifier::random(int input_dim, int hidden, int num_layers,
                                              int classes, std::uint64_t seed) {
  Rng rng(seed);
  SequenceClassifier m;
  m.gru = GruStack::random(input_dim, hidden, num_layers, rng);
  m.head = ClassifierHead::random(hidden, classes, rng);
  return m;
}

SequenceClassifier SequenceClassifier::zeros_like(const SequenceClassifier& other) {
  SequenceClassifier m;
  m.gru = GruStack::zeros(other.gru.input_dim(), other.gru.hidden(), other.gru.num_layers());
  m.head = ClassifierHead::zeros(other.gru.hidden(), other.head.classes());
  return m;
}

std::vector<std::span<double>> SequenceClassifier::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto& p : gru.layers()) {
    for (Matrix* m : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h}) out.push_back(view(*m));
    for (Vector* v : {&p.b_z, &p.b_r, &p.b_h}) out.push_back(view(*v));
  }
  out.push_back(view(head.W));
  out.push_back(view(head.b));
  return out;
}

std::vector<std::span<const double>> SequenceClassifier::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto& p : gru.layers()) {
    for (const Matrix* m : {&p.W_z, &p.W_r, &p.W_h, &p.U_z, &p.U_r, &p.U_h})
      out.push_back(view(*m));
    for (const Vector* v : {&p.b_z, &p.b_r, &p.b_h}) out.push_back(view(*v));
  }
  out.push_back(view(head.W));
  out.push_back(view(head.b));
  return out;
}

std::size_t SequenceClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : parameter_blocks()) n += b.size();
  return n;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

/// Runs one layer over a D x T input (one column per step) from h_0 = 0.
Matrix layer_forward(const GruLayerParams& p, const Matrix& input) {
  const Eigen::Index steps = input.cols();
  const Matrix wz = (p.W_z * input).colwise() + p.b_z;
  const Matrix wr = (p.W_r * input).colwise() + p.b_r;
  const Matrix wh = (p.W_h * input).colwise() + p.b_h;
  Matrix out(p.hidden(), steps);
  Vector h = Vector::Zero(p.hidden());
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Vector z = sigmoid(wz.col(t) + p.U_z * h);
    const Vector r = sigmoid(wr.col(t) + p.U_r * h);
    const Vector g = tanh_of(wh.col(t) + p.U_h * r.cwiseProduct(h));
    h = (Vector::Ones(h.size()) - z).cwiseProduct(h) + z.cwiseProduct(g);
    out.col(t) = h;
  }
  return out;
}

Matrix top_states_columns(const GruStack& stack, const Matrix& sequence_rows) {
  if (sequence_rows.rows() < 1) throw DomainError("sequence must have at least one step");
  if (sequence_rows.cols() != stack.input_dim()) {
    throw DomainError("sequence dimension " + std::to_string(sequence_rows.cols()) +
                      " does not match GRU input " + std::to_string(stack.input_dim()));
  }
  Matrix x = sequence_rows.transpose();
  for (const auto& layer : stack.layers()) x = layer_forward(layer, x);
  return x;
}

}  // namespace

Matrix gru_forward(const GruStack& stack, const Matrix& sequence) {
  return top_states_columns(stack, sequence).transpose();
}

Vector classify(const GruStack& stack, const ClassifierHead& head, const Matrix& sequence,
                int length) {
  if (length < 1) throw DomainError("classify needs length >= 1");
  if (length > sequence.rows()) throw DomainError("length exceeds sequence rows");
  if (head.W.cols() != stack.hidden()) throw DomainError("head does not match hidden size");
  const Matrix states = top_states_columns(stack, sequence.topRows(length));
  return head.W * states.col(length - 1) + head.b;
}

Vector classify(const SequenceClassifier& model, const Matrix& sequence) {
  return classify(model.gru, model.head, sequence, static_cast<int>(sequence.rows()));
}

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw DomainError("softmax of an empty vector");
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

std::vector<double> combine_streams(std::span<const Vector> logits) {
  if (logits.empty()) throw DomainError("combine_streams needs at least one stream");
  Vector sum = Vector::Zero(logits.front().size());
  for (const auto& l : logits) {
    if (l.size() != sum.size()) throw DomainError("streams disagree on class count");
    sum += l;
  }
  const Vector p = softmax(sum);
  return {p.data(), p.data() + p.size()};
}

CrossEntropy cross_entropy(const Vector& logits, int label) {
  if (label < 0 || label >= logits.size()) throw DomainError("label outside [0, C)");
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  CrossEntropy ce;
  ce.loss = lse - logits[label];
  ce.grad = softmax(logits);
  ce.grad[label] -= 1.0;
  return ce;
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw DomainError("parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size()) throw DomainError("parameter/gradient size mismatch");
    for (std::size_t i = 0; i < grads[b].size(); ++i) {
      if (!std::isfinite(grads[b][i])) {
        throw TrainingError("non-finite gradient in parameter block " + std::to_string(b) +
                            " at index " + std::to_string(i) + " (step " +
                            std::to_string(state.step + 1) + ")");
      }
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw DomainError("Adam state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.m[b];
    auto& v = state.v[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[b][i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Batched forward/backward

namespace {

struct LayerCache {
  Matrix input;  // D_in x (T*B)
  Matrix hprev;  // H x (T*B)
  Matrix z, r, g;
  Matrix output;
};

struct Batch {
  Eigen::Index steps = 0;    // T_max
  Eigen::Index columns = 0;  // total streams B
  std::vector<int> length;   // per column
  std::vector<int> item_of;  // per column
  Matrix input;              // D x (T*B); block t holds step t of every column
};

Batch pack(std::span<const SequenceItem> items, int input_dim) {
  Batch b;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].streams.empty()) throw DomainError("sequence item without streams");
    for (const auto& s : items[i].streams) {
      if (s.rows() < 1) throw DomainError("empty stream in training item");
      if (s.cols() != input_dim) throw DomainError("stream dimension mismatch");
      b.length.push_back(static_cast<int>(s.rows()));
      b.item_of.push_back(static_cast<int>(i));
      b.steps = std::max<Eigen::Index>(b.steps, s.rows());
    }
  }
  b.columns = static_cast<Eigen::Index>(b.length.size());
  b.input = Matrix::Zero(input_dim, b.steps * b.columns);
  Eigen::Index col = 0;
  for (const auto& item : items) {
    for (const auto& s : item.streams) {
      for (Eigen::Index t = 0; t < s.rows(); ++t) {
        b.input.col(t * b.columns + col) = s.row(t).transpose();
      }
      ++col;
    }
  }
  return b;
}

void forward_layer(const GruLayerParams& p, Eigen::Index steps, Eigen::Index cols,
                   LayerCache& c) {
  const Eigen::Index h = p.hidden();
  const Matrix wz = (p.W_z * c.input).colwise() + p.b_z;
  const Matrix wr = (p.W_r * c.input).colwise() + p.b_r;
  const Matrix wh = (p.W_h * c.input).colwise() + p.b_h;
  c.hprev.resize(h, steps * cols);
  c.z.resize(h, steps * cols);
  c.r.resize(h, steps * cols);
  c.g.resize(h, steps * cols);
  c.output.resize(h, steps * cols);
  Matrix state = Matrix::Zero(h, cols);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::Index off = t * cols;
    c.hprev.middleCols(off, cols) = state;
    c.z.middleCols(off, cols) = sigmoid(wz.middleCols(off, cols) + p.U_z * state);
    c.r.middleCols(off, cols) = sigmoid(wr.middleCols(off, cols) + p.U_r * state);
    const Matrix rh = c.r.middleCols(off, cols).cwiseProduct(state);
    c.g.middleCols(off, cols) = tanh_of(wh.middleCols(off, cols) + p.U_h * rh);
    const auto z = c.z.middleCols(off, cols);
    state = (1.0 - z.array()).matrix().cwiseProduct(state) +
            z.cwiseProduct(c.g.middleCols(off, cols));
    c.output.middleCols(off, cols) = state;
  }
}

/// Accumulates parameter gradients into `grad`, returns d loss / d input.
Matrix backward_layer(const GruLayerParams& p, const LayerCache& c, const Matrix& d_out,
                      Eigen::Index steps, Eigen::Index cols, GruLayerParams& grad) {
  const Eigen::Index h = p.hidden();
  Matrix d_az(h, steps * cols), d_ar(h, steps * cols), d_ah(h, steps * cols);
  Matrix d_next = Matrix::Zero(h, cols);
  const Matrix Uz_t = p.U_z.transpose();
  const Matrix Ur_t = p.U_r.transpose();
  const Matrix Uh_t = p.U_h.transpose();
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::Index off = t * cols;
    const Matrix dh = d_out.middleCols(off, cols) + d_next;
    const auto z = c.z.middleCols(off, cols).array();
    const auto r = c.r.middleCols(off, cols).array();
    const auto g = c.g.middleCols(off, cols).array();
    const auto hp = c.hprev.middleCols(off, cols).array();
    const auto dha = dh.array();
    d_az.middleCols(off, cols) = (dha * (g - hp) * z * (1.0 - z)).matrix();
    d_ah.middleCols(off, cols) = (dha * z * (1.0 - g * g)).matrix();
    const Matrix d_rh = Uh_t * d_ah.middleCols(off, cols);
    d_ar.middleCols(off, cols) = (d_rh.array() * hp * r * (1.0 - r)).matrix();
    d_next = (dha * (1.0 - z)).matrix() + (d_rh.array() * r).matrix() +
             Uz_t * d_az.middleCols(off, cols) + Ur_t * d_ar.middleCols(off, cols);
  }
  const Matrix rh = c.r.cwiseProduct(c.hprev);
  grad.W_z += d_az * c.input.transpose();
  grad.W_r += d_ar * c.input.transpose();
  grad.W_h += d_ah * c.input.transpose();
  grad.U_z += d_az * c.hprev.transpose();
  grad.U_r += d_ar * c.hprev.transpose();
  grad.U_h += d_ah * rh.transpose();
  grad.b_z += d_az.rowwise().sum();
  grad.b_r += d_ar.rowwise().sum();
  grad.b_h += d_ah.rowwise().sum();
  return p.W_z.transpose() * d_az + p.W_r.transpose() * d_ar + p.W_h.transpose() * d_ah;
}

}  // namespace

LossAndGradient loss_and_gradient(const SequenceClassifier& model,
                                  std::span<const SequenceItem> items) {
  if (items.empty()) throw DomainError("loss over an empty batch");
  const auto& layers = model.gru.layers();
  const int classes = model.head.classes();
  Batch batch = pack(items, model.gru.input_dim());
  const Eigen::Index T = batch.steps;
  const Eigen::Index B = batch.columns;

  std::vector<LayerCache> caches(layers.size());
  caches[0].input = std::move(batch.input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0) caches[l].input = caches[l - 1].output;
    forward_layer(layers[l], T, B, caches[l]);
  }

  // Last true state of every column, then per-item summed logits.
  const Matrix& top = caches.back().output;
  Matrix last(model.gru.hidden(), B);
  for (Eigen::Index j = 0; j < B; ++j) last.col(j) = top.col((batch.length[j] - 1) * B + j);
  const Matrix column_logits = (model.head.W * last).colwise() + model.head.b;
  Matrix item_logits = Matrix::Zero(classes, static_cast<Eigen::Index>(items.size()));
  for (Eigen::Index j = 0; j < B; ++j) item_logits.col(batch.item_of[j]) += column_logits.col(j);

  LossAndGradient out;
  out.grad = SequenceClassifier::zeros_like(model);
  const double inv_n = 1.0 / static_cast<double>(items.size());
  Matrix d_item(classes, static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto ce = cross_entropy(item_logits.col(static_cast<Eigen::Index>(i)), items[i].label);
    out.loss += ce.loss * inv_n;
    d_item.col(static_cast<Eigen::Index>(i)) = ce.grad * inv_n;
  }
  Matrix d_col(classes, B);
  for (Eigen::Index j = 0; j < B; ++j) d_col.col(j) = d_item.col(batch.item_of[j]);
  out.grad.head.W = d_col * last.transpose();
  out.grad.head.b = d_col.rowwise().sum();

  const Matrix d_last = model.head.W.transpose() * d_col;
  Matrix d_out = Matrix::Zero(model.gru.hidden(), T * B);
  for (Eigen::Index j = 0; j < B; ++j) d_out.col((batch.length[j] - 1) * B + j) = d_last.col(j);
  for (std::size_t l = layers.size(); l-- > 0;) {
    d_out = backward_layer(layers[l], caches[l], d_out, T, B, out.grad.gru.layers()[l]);
  }
  return out;
}

Vector item_logits(const SequenceClassifier& model, const SequenceItem& item) {
  if (item.streams.empty()) throw DomainError("sequence item without streams");
  Vector sum = Vector::Zero(model.head.classes());
  for (const auto& s : item.streams) sum += classify(model, s);
  return sum;
}

std::vector<double> predict_proba(const SequenceClassifier& model, const SequenceItem& item) {
  std::vector<Vector> logits;
  for (const auto& s : item.streams) logits.push_back(classify(model, s));
  return combine_streams(logits);
}

double loss(const SequenceClassifier& model, std::span<const SequenceItem> items) {
  if (items.empty()) throw DomainError("loss over an empty set");
  double total = 0;
  for (const auto& item : items) total += cross_entropy(item_logits(model, item), item.label).loss;
  return total / static_cast<double>(items.size());
}

double accuracy(const SequenceClassifier& model, std::span<const SequenceItem> items) {
  if (items.empty()) throw DomainError("accuracy over an empty set");
  int correct = 0;
  for (const auto& item : items) {
    const Vector l = item_logits(model, item);
    Eigen::Index arg = 0;
    l.maxCoeff(&arg);
    correct += arg == item.label;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

// ---------------------------------------------------------------------------

TrainResult train(SequenceClassifier model, std::span<const SequenceItem> train_items,
                  std::span<const SequenceItem> val_items, const TrainingConfig& cfg,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train_items.empty()) throw DomainError("training set is empty");
  if (cfg.batch_size < 1) throw DomainError("batch size must be at least 1");
  if (!(cfg.adam.lr >= 0)) throw DomainError("learning rate must be non-negative");
  for (const auto& item : train_items) {
    if (item.label < 0 || item.label >= model.head.classes()) {
      throw DomainError("training label outside [0, C)");
    }
  }
  Rng rng(cfg.seed);
  AdamState adam;
  std::vector<std::size_t> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.model = model;
  double best_acc = -1;
  double best_loss = 0;
  std::vector<SequenceItem> batch;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_items[order[k]]);
      auto lg = loss_and_gradient(model, batch);
      epoch_loss += lg.loss * static_cast<double>(end - start);
      const auto params = model.parameter_blocks();
      const auto grads = std::as_const(lg.grad).parameter_blocks();
      adam_step(params, grads, adam, cfg.adam);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / static_cast<double>(order.size());
    const bool has_val = !val_items.empty();
    if (has_val) {
      m.val_accuracy = accuracy(model, val_items);
      m.val_loss = loss(model, val_items);
    }
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
    const bool better = !has_val || m.val_accuracy > best_acc ||
                        (m.val_accuracy == best_acc && m.val_loss < best_loss);
    if (better) {
      best_acc = m.val_accuracy;
      best_loss = m.val_loss;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string serialize(const SequenceClassifier& model) {
  json doc;
  doc["format"] = "fillmass.gru_classifier";
  doc["version"] = 1;
  doc["input_dim"] = model.gru.input_dim();
  doc["hidden"] = model.gru.hidden();
  doc["layers"] = model.gru.num_layers();
  doc["classes"] = model.head.classes();
  json blocks = json::array();
  for (const auto& b : model.parameter_blocks()) blocks.push_back(std::vector<double>(b.begin(), b.end()));
  doc["parameters"] = blocks;
  return doc.dump();
}

SequenceClassifier deserialize_classifier(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "fillmass.gru_classifier") throw FormatError("not a GRU checkpoint");
    if (doc.at("version").get<int>() != 1) throw UnsupportedError("unknown checkpoint version");
    SequenceClassifier m;
    m.gru = GruStack::zeros(doc.at("input_dim").get<int>(), doc.at("hidden").get<int>(),
                            doc.at("layers").get<int>());
    m.head = ClassifierHead::zeros(m.gru.hidden(), doc.at("classes").get<int>());
    const auto& blocks = doc.at("parameters");
    auto views = m.parameter_blocks();
    if (blocks.size() != views.size()) throw FormatError("checkpoint block count mismatch");
    for (std::size_t b = 0; b < views.size(); ++b) {
      const auto values = blocks[b].get<std::vector<double>>();
      if (values.size() != views[b].size()) throw FormatError("checkpoint block size mismatch");
      std::copy(values.begin(), values.end(), views[b].begin());
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed GRU checkpoint: ") + e.what());
  }
}

}  // namespace fillmass::seqnet
