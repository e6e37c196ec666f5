#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssagait/contrastive/optim.hpp"
#include "ssagait/contrastive/trainer.hpp"
#include "ssagait/dataset.hpp"
#include "ssagait/eval/metrics.hpp"
#include "ssagait/nn/encoder.hpp"

namespace ssagait::eval {

enum class Protocol { kLinear, kFinetune, kFinetuneShort, kSemi };

const char* protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);

/// Label fractions accepted without an explicit override.
inline const std::vector<double>& standard_fractions() {
  static const std::vector<double> f{0.05, 0.10, 0.20, 0.50, 1.0};
  return f;
}

struct ProtocolConfig {
  Protocol protocol = Protocol::kLinear;
  int epochs = 200;
  contrastive::StepSchedule lr{1e-3, {100}, 0.1};
  int batch_size = 32;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  double fraction = 1.0;  // labeled share of the training split (semi only)
  bool stratified = false;
  bool allow_any_fraction = false;
  F1Mode f1_mode = F1Mode::kWeighted;

  /// Schedules per protocol: linear 200 epochs lr 1e-3 x0.1@100; finetune
  /// 100 epochs lr 1e-4 x0.1@50; finetune-short 20 epochs lr 1e-3 x0.1@10;
  /// semi 20 epochs lr 1e-3 x0.1@10.
  static ProtocolConfig defaults(Protocol p);

  void validate() const;
  bool operator==(const ProtocolConfig&) const = default;
};

struct EvalResult {
  MetricsReport report;
  std::vector<int> predictions;
  std::vector<int> truth;
  std::vector<std::string> warnings;
};

/// Labels of a fully labeled dataset as class indices.
std::vector<int> class_labels(const GaitDataset& ds);

/// Softmax cross-entropy averaged over columns; `dlogits` receives its gradient.
template <typename Scalar>
Scalar softmax_cross_entropy(const Matrix<Scalar>& logits, const std::vector<int>& labels, Matrix<Scalar>* dlogits) {
  const Matrix<Scalar> logp = contrastive::log_softmax_cols(logits);
  const auto n = static_cast<Scalar>(logits.cols());
  Scalar loss = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) loss -= logp(labels[j], j);
  if (dlogits) {
    *dlogits = logp.array().exp().matrix();
    for (Eigen::Index j = 0; j < logits.cols(); ++j) (*dlogits)(labels[j], j) -= Scalar(1);
    *dlogits /= n;
  }
  return loss / n;
}

/// Fused features (fused_dim x N) in eval mode, encoded in chunks.
template <typename Scalar>
Matrix<Scalar> extract_features(nn::Cffn<Scalar>& enc, const GaitDataset& ds, int chunk = 64) {
  Matrix<Scalar> out(enc.config().fused_dim(), static_cast<Eigen::Index>(ds.size()));
  for (std::size_t start = 0; start < ds.size(); start += static_cast<std::size_t>(chunk)) {
    std::vector<const SkeletonSequence*> ptrs;
    for (std::size_t i = start; i < std::min(ds.size(), start + static_cast<std::size_t>(chunk)); ++i)
      ptrs.push_back(&ds.sequences[i]);
    const auto x = nn::pack_batch<Scalar>(ptrs);
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(ptrs.size())) =
        enc.encode(x, static_cast<int>(ptrs.size()), Mode::kEval, nullptr);
  }
  return out;
}

template <typename Scalar>
std::vector<int> argmax_cols(const Matrix<Scalar>& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index best;
    logits.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

namespace detail {

inline void check_labeled(const GaitDataset& ds, const char* what) {
  if (ds.empty()) throw std::invalid_argument(std::string(what) + " split is empty");
  if (!ds.fully_labeled()) throw std::invalid_argument(std::string(what) + " split has unlabeled samples");
}

/// Minibatches of one epoch: shuffled indices cut into batch_size pieces;
/// a trailing batch smaller than `min_batch` is dropped.
inline std::vector<std::vector<int>> epoch_batches(std::uint64_t seed, int epoch, int n, int batch_size,
                                                   int min_batch) {
  const auto order = contrastive::epoch_order(seed, epoch, n);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> b(order.begin() + start, order.begin() + std::min(n, start + batch_size));
    if (static_cast<int>(b.size()) >= min_batch || (out.empty() && !b.empty())) out.push_back(std::move(b));
  }
  return out;
}

template <typename Scalar>
EvalResult finish(const Matrix<Scalar>& logits, const GaitDataset& test, F1Mode mode) {
  EvalResult r;
  r.truth = class_labels(test);
  r.predictions = argmax_cols(logits);
  r.report = compute_metrics(ConfusionMatrix::from_predictions(r.truth, r.predictions), mode);
  return r;
}

}  // namespace detail

/// Linear classifier on frozen fused features. The encoder runs in eval
/// mode only, so neither its parameters nor its statistics change.
template <typename Scalar>
EvalResult linear_eval(nn::Cffn<Scalar>& enc, const GaitDataset& train, const GaitDataset& test,
                       const ProtocolConfig& cfg) {
  cfg.validate();
  detail::check_labeled(train, "training");
  detail::check_labeled(test, "test");
  const Matrix<Scalar> ftrain = extract_features(enc, train);
  const Matrix<Scalar> ftest = extract_features(enc, test);
  const auto ytrain = class_labels(train);

  RngStream init = RngStream(cfg.seed).split(7);
  nn::Linear<Scalar> head(static_cast<int>(ftrain.rows()), kNumEmotions, init);
  contrastive::Sgd<Scalar> sgd({&head.weight, &head.bias}, cfg.sgd_momentum, cfg.weight_decay);
  const int n = static_cast<int>(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& b : detail::epoch_batches(cfg.seed, epoch, n, cfg.batch_size, 1)) {
      Matrix<Scalar> x(ftrain.rows(), static_cast<Eigen::Index>(b.size()));
      std::vector<int> y;
      for (std::size_t i = 0; i < b.size(); ++i) {
        x.col(static_cast<Eigen::Index>(i)) = ftrain.col(b[i]);
        y.push_back(ytrain[b[i]]);
      }
      Matrix<Scalar> dlogits;
      softmax_cross_entropy(head.forward(x), y, &dlogits);
      sgd.zero_grad();
      head.backward(x, dlogits);
      sgd.step(cfg.lr.at(epoch));
    }
  }
  return detail::finish(head.forward(ftest), test, cfg.f1_mode);
}

/// Trains the encoder (batch statistics on) together with a linear head on
/// the fused feature, then reports test metrics in eval mode. `enc` is
/// updated in place.
template <typename Scalar>
EvalResult finetune_eval(nn::Cffn<Scalar>& enc, const GaitDataset& train, const GaitDataset& test,
                         const ProtocolConfig& cfg) {
  cfg.validate();
  detail::check_labeled(train, "training");
  detail::check_labeled(test, "test");
  const auto ytrain = class_labels(train);

  RngStream init = RngStream(cfg.seed).split(7);
  nn::Linear<Scalar> head(enc.config().fused_dim(), kNumEmotions, init);
  auto params = enc.parameters();
  params.push_back(&head.weight);
  params.push_back(&head.bias);
  contrastive::Sgd<Scalar> sgd(params, cfg.sgd_momentum, cfg.weight_decay);
  const int n = static_cast<int>(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& b : detail::epoch_batches(cfg.seed, epoch, n, cfg.batch_size, 2)) {
      if (b.size() < 2) continue;  // batch statistics need two samples
      std::vector<const SkeletonSequence*> ptrs;
      std::vector<int> y;
      for (int i : b) {
        ptrs.push_back(&train.sequences[static_cast<std::size_t>(i)]);
        y.push_back(ytrain[static_cast<std::size_t>(i)]);
      }
      const auto x = nn::pack_batch<Scalar>(ptrs);
      typename nn::Cffn<Scalar>::Tape tape;
      const Matrix<Scalar> fused = enc.encode(x, static_cast<int>(b.size()), Mode::kTrain, &tape);
      Matrix<Scalar> dlogits;
      softmax_cross_entropy(head.forward(fused), y, &dlogits);
      sgd.zero_grad();
      enc.encode_backward(tape, head.backward(fused, dlogits));
      sgd.step(cfg.lr.at(epoch));
    }
  }
  return detail::finish(head.forward(extract_features(enc, test)), test, cfg.f1_mode);
}

/// Finetuning on ceil(fraction * N) labeled training samples.
template <typename Scalar>
EvalResult semi_supervised_eval(nn::Cffn<Scalar>& enc, const GaitDataset& train, const GaitDataset& test,
                                const ProtocolConfig& cfg) {
  cfg.validate();
  const GaitDataset labeled = select_labeled_fraction(train, cfg.fraction, cfg.seed, cfg.stratified);
  std::set<int> present;
  for (const auto& s : labeled.sequences)
    if (s.label) present.insert(static_cast<int>(*s.label));
  std::vector<std::string> warnings;
  if (static_cast<int>(present.size()) < kNumEmotions)
    warnings.push_back("labeled subset of " + std::to_string(labeled.size()) + " samples covers only " +
                       std::to_string(present.size()) + " of " + std::to_string(kNumEmotions) + " classes");
  EvalResult r = finetune_eval(enc, labeled, test, cfg);
  r.warnings = std::move(warnings);
  return r;
}

/// Dispatches on cfg.protocol.
template <typename Scalar>
EvalResult run_protocol(nn::Cffn<Scalar>& enc, const GaitDataset& train, const GaitDataset& test,
                        const ProtocolConfig& cfg) {
  switch (cfg.protocol) {
    case Protocol::kLinear: return linear_eval(enc, train, test, cfg);
    case Protocol::kFinetune:
    case Protocol::kFinetuneShort: return finetune_eval(enc, train, test, cfg);
    case Protocol::kSemi: return semi_supervised_eval(enc, train, test, cfg);
  }
  throw std::invalid_argument("unknown protocol");
}

}  // namespace ssagait::eval
