// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "fillmass/errors.hpp"
#include "fillmass/seqnet.hpp"

namespace fillmass::seqnet {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TEST(Gru, ZeroParametersStayAtZero) {
  const auto stack = GruStack::zeros(3, 4, 2);
  Rng rng(1);
  const Matrix h = gru_forward(stack, random_matrix(6, 3, rng));
  EXPECT_EQ(h.rows(), 6);
  EXPECT_EQ(h.cols(), 4);
  EXPECT_TRUE((h.array() == 0.0).all());
}

TEST(Gru, ZeroInputZeroBiasStaysAtZero) {
  Rng rng(2);
  auto stack = GruStack::random(3, 5, 2, rng);
  for (auto& l : stack.layers()) {
    l.b_z.setZero();
    l.b_r.setZero();
    l.b_h.setZero();
  }
  EXPECT_TRUE((gru_forward(stack, Matrix::Zero(4, 3)).array() == 0.0).all());
}

TEST(Gru, ScalarRecurrenceMatchesHandEvaluation) {
  auto p = GruLayerParams::zeros(1, 1);
  p.W_z(0, 0) = 0.5;
  p.U_z(0, 0) = -0.3;
  p.b_z(0) = 0.1;
  p.W_r(0, 0) = -0.7;
  p.U_r(0, 0) = 0.2;
  p.b_r(0) = 0.05;
  p.W_h(0, 0) = 1.1;
  p.U_h(0, 0) = 0.9;
  p.b_h(0) = -0.2;
  const GruStack stack({p});
  Matrix x(2, 1);
  x << 0.8, -1.5;

  double h = 0;
  std::vector<double> expect;
  for (int t = 0; t < 2; ++t) {
    const double z = sigmoid(0.5 * x(t, 0) - 0.3 * h + 0.1);
    const double r = sigmoid(-0.7 * x(t, 0) + 0.2 * h + 0.05);
    const double g = std::tanh(1.1 * x(t, 0) + 0.9 * (r * h) - 0.2);
    h = (1 - z) * h + z * g;
    expect.push_back(h);
  }
  const Matrix out = gru_forward(stack, x);
  EXPECT_NEAR(out(0, 0), expect[0], 1e-12);
  EXPECT_NEAR(out(1, 0), expect[1], 1e-12);
}

TEST(Gru, ShapeMismatchIsDomainError) {
  const auto stack = GruStack::zeros(3, 4, 1);
  EXPECT_THROW(gru_forward(stack, Matrix::Zero(2, 5)), DomainError);
  EXPECT_THROW(gru_forward(stack, Matrix::Zero(0, 3)), DomainError);
}

TEST(Gru, RandomInitIsBoundedByInverseSqrtHidden) {
  Rng rng(3);
  const auto stack = GruStack::random(7, 16, 2, rng);
  for (const auto& l : stack.layers()) {
    for (const Matrix* m : {&l.W_z, &l.W_r, &l.W_h, &l.U_z, &l.U_r, &l.U_h}) {
      EXPECT_LE(m->cwiseAbs().maxCoeff(), 0.25);
    }
  }
  EXPECT_EQ(stack.layers()[1].input_dim(), 16);
}

TEST(Classify, BiasPassesThroughZeroStack) {
  const auto stack = GruStack::zeros(2, 3, 1);
  auto head = ClassifierHead::zeros(3, 3);
  head.b << 1, 2, 3;
  const Vector logits = classify(stack, head, Matrix::Ones(4, 2), 4);
  EXPECT_EQ(logits, Vector((Vector(3) << 1, 2, 3).finished()));
  EXPECT_THROW(classify(stack, head, Matrix::Ones(4, 2), 0), DomainError);
  EXPECT_THROW(classify(stack, head, Matrix::Ones(4, 2), 5), DomainError);
}

TEST(Classify, PaddingDoesNotChangeLogits) {
  const auto model = SequenceClassifier::random(3, 6, 2, 4, 9);
  Rng rng(4);
  const Matrix seq = random_matrix(4, 3, rng);
  const Vector ref = classify(model.gru, model.head, seq, 4);
  for (int pad : {1, 5}) {
    Matrix padded(4 + pad, 3);
    padded.topRows(4) = seq;
    padded.bottomRows(pad) = random_matrix(pad, 3, rng) * 1e3;
    const Vector a = classify(model.gru, model.head, padded, 4);
    padded.bottomRows(pad).reverseInPlace();
    const Vector b = classify(model.gru, model.head, padded, 4);
    EXPECT_EQ(std::memcmp(a.data(), ref.data(), sizeof(double) * 4), 0);
    EXPECT_EQ(std::memcmp(b.data(), ref.data(), sizeof(double) * 4), 0);
  }
}

TEST(Softmax, CombineStreamsExamples) {
  const Vector zero = Vector::Zero(3);
  auto p = combine_streams(std::vector<Vector>{zero});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);

  Vector l(3);
  l << 0.3, -1.2, 2.0;
  p = combine_streams(std::vector<Vector>{l, l});
  const Vector s = softmax(2 * l);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], s[i], 1e-15);

  Vector a(3), b(3);
  a << 10, 0, 0;
  b << 0, 10, 0;
  p = combine_streams(std::vector<Vector>{a, b});
  // softmax(10, 10, 0) evaluated directly.
  const double denom = 2 * std::exp(10.0) + 1.0;
  EXPECT_NEAR(p[0], std::exp(10.0) / denom, 1e-12);
  EXPECT_NEAR(p[2], 1.0 / denom, 1e-12);
  EXPECT_NEAR(p[0], 0.5, 1e-4);
  EXPECT_NEAR(p[2], 0.0, 1e-4);
  EXPECT_THROW(combine_streams(std::vector<Vector>{}), DomainError);
}

TEST(Softmax, StableAndNormalizedForExtremeLogits) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    Vector l(5);
    for (int j = 0; j < 5; ++j) l[j] = rng.normal(0, 300);
    const Vector p = softmax(l);
    EXPECT_TRUE(p.allFinite());
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
  }
}

TEST(Softmax, CombineIsPermutationAndShiftInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vector> streams;
    for (int s = 0; s < 3; ++s) {
      Vector v(4);
      for (int j = 0; j < 4; ++j) v[j] = rng.normal(0, 2);
      streams.push_back(v);
    }
    const auto p = combine_streams(streams);
    std::vector<Vector> rev(streams.rbegin(), streams.rend());
    const auto q = combine_streams(rev);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(p[j], q[j], 1e-12);
    std::vector<Vector> shifted = streams;
    for (auto& v : shifted) v.array() += rng.normal(0, 50);
    const auto r = combine_streams(shifted);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(),
              std::max_element(r.begin(), r.end()) - r.begin());
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_NEAR(cross_entropy(Vector::Zero(4), 2).loss, std::log(4.0), 1e-15);
  Vector big = Vector::Zero(3);
  big[1] = 100;
  EXPECT_NEAR(cross_entropy(big, 1).loss, 0.0, 1e-12);
  const auto ce = cross_entropy(Vector::Zero(2), 0);
  EXPECT_NEAR(ce.grad[0], -0.5, 1e-15);
  EXPECT_NEAR(ce.grad[1], 0.5, 1e-15);
}

TEST(Adam, ZeroGradientLeavesEverythingUnchanged) {
  std::vector<double> p = {1.0, -2.0}, g = {0.0, 0.0};
  AdamState st;
  const std::vector<std::span<double>> ps = {p};
  const std::vector<std::span<const double>> gs = {g};
  adam_step(ps, gs, st, {});
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(st.m[0], (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(st.v[0], (std::vector<double>{0.0, 0.0}));
}

TEST(Adam, FirstStepMatchesBiasCorrectedFormula) {
  const AdamConfig cfg;
  for (double g0 : {3.0, -0.02, 1e-3}) {
    std::vector<double> p = {0.5}, g = {g0};
    AdamState st;
    adam_step(std::vector<std::span<double>>{p}, std::vector<std::span<const double>>{g}, st, cfg);
    const double m_hat = ((1 - cfg.beta1) * g0) / (1 - cfg.beta1);
    const double v_hat = ((1 - cfg.beta2) * g0 * g0) / (1 - cfg.beta2);
    const double expect = 0.5 - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    EXPECT_NEAR(p[0], expect, 1e-15);
    EXPECT_NEAR(p[0] - 0.5, -cfg.lr * (g0 > 0 ? 1 : -1), 1e-8);
  }
}

TEST(Adam, IdenticalGradientsGiveIdenticalUpdates) {
  std::vector<double> p = {0.1, 0.1}, g = {0.7, 0.7};
  AdamState st;
  for (int i = 0; i < 5; ++i) {
    adam_step(std::vector<std::span<double>>{p}, std::vector<std::span<const double>>{g}, st, {});
  }
  EXPECT_EQ(p[0], p[1]);
}

TEST(Adam, NonFiniteGradientIsTrainingErrorAndTouchesNothing) {
  std::vector<double> p = {1.0, 2.0}, q = {3.0}, g = {0.1, 0.2}, h = {std::nan("")};
  AdamState st;
  EXPECT_THROW(adam_step(std::vector<std::span<double>>{p, q},
                         std::vector<std::span<const double>>{g, h}, st, {}),
               TrainingError);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(st.step, 0);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

TEST(Backprop, MatchesCentralDifferences) {
  auto model = SequenceClassifier::random(3, 4, 2, 3, 21);
  Rng rng(22);
  std::vector<SequenceItem> items;
  for (int i = 0; i < 3; ++i) {
    SequenceItem it;
    it.streams.push_back(random_matrix(5 - i, 3, rng));
    if (i == 2) it.streams.push_back(random_matrix(2, 3, rng));
    it.label = i % 3;
    items.push_back(it);
  }
  const auto analytic = loss_and_gradient(model, items);
  EXPECT_NEAR(analytic.loss, loss(model, items), 1e-12);
  const auto grads = analytic.grad.parameter_blocks();
  auto params = model.parameter_blocks();
  double worst = 0;
  const double h = 1e-5;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double orig = params[b][i];
      params[b][i] = orig + h;
      const double up = loss(model, items);
      params[b][i] = orig - h;
      const double down = loss(model, items);
      params[b][i] = orig;
      worst = std::max(worst, relative_error(grads[b][i], (up - down) / (2 * h)));
    }
  }
  EXPECT_LE(worst, 1e-4);
}

std::vector<SequenceItem> constant_class_items(int n, int classes, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SequenceItem> out;
  for (int i = 0; i < n; ++i) {
    SequenceItem it;
    it.label = i % classes;
    const int T = 2 + static_cast<int>(rng.below(4));
    Matrix m = Matrix::Constant(T, dim, -0.5);
    m.col(it.label).setConstant(1.0);
    it.streams.push_back(m);
    out.push_back(it);
  }
  return out;
}

TEST(Train, TinyNetSeparatesConstantSequences) {
  const auto train_items = constant_class_items(60, 3, 4, 30);
  const auto val_items = constant_class_items(30, 3, 4, 31);
  TrainingConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 30;
  cfg.adam.lr = 0.02;
  cfg.seed = 7;
  const auto res = train(SequenceClassifier::random(4, 8, 1, 3, 5), train_items, val_items, cfg);
  EXPECT_EQ(res.history.size(), 30u);
  EXPECT_EQ(accuracy(res.model, val_items), 1.0);
  EXPECT_EQ(res.history[res.best_epoch - 1].val_accuracy, 1.0);
}

TEST(Train, ZeroLearningRateFreezesParameters) {
  const auto items = constant_class_items(10, 2, 3, 1);
  const auto init = SequenceClassifier::random(3, 4, 1, 2, 3);
  TrainingConfig cfg;
  cfg.max_epochs = 3;
  cfg.adam.lr = 0.0;
  const auto res = train(init, items, items, cfg);
  EXPECT_EQ(serialize(res.model), serialize(init));
}

TEST(Train, SameSeedSameTrajectory) {
  const auto items = constant_class_items(20, 2, 3, 2);
  TrainingConfig cfg;
  cfg.max_epochs = 4;
  cfg.batch_size = 6;
  cfg.seed = 11;
  const auto a = train(SequenceClassifier::random(3, 4, 2, 2, 3), items, items, cfg);
  const auto b = train(SequenceClassifier::random(3, 4, 2, 2, 3), items, items, cfg);
  EXPECT_EQ(serialize(a.model), serialize(b.model));
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    EXPECT_EQ(a.history[e].train_loss, b.history[e].train_loss);
  }
  EXPECT_THROW(train(SequenceClassifier::random(3, 4, 2, 2, 3), {}, items, cfg), DomainError);
}

TEST(Serialization, RoundTripsExactly) {
  const auto m = SequenceClassifier::random(5, 3, 2, 4, 8);
  const auto back = deserialize_classifier(serialize(m));
  EXPECT_EQ(serialize(back), serialize(m));
  EXPECT_EQ(back.parameter_count(), m.parameter_count());
  EXPECT_THROW(deserialize_classifier(R"({"format": "other"})"), FormatError);
}

}  // namespace
}  // namespace fillmass::seqnet
