#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ssagait/augment.hpp"
#include "ssagait/contrastive/config.hpp"
#include "ssagait/contrastive/losses.hpp"
#include "ssagait/contrastive/memory_bank.hpp"
#include "ssagait/contrastive/optim.hpp"
#include "ssagait/nn/encoder.hpp"

namespace ssagait::contrastive {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The three augmented views of one batch, packed in encoder layout.
template <typename Scalar>
struct Views {
  int batch = 0;
  Matrix<Scalar> s1;  // key view (general)
  Matrix<Scalar> s2;  // query view (general, independent draw)
  Matrix<Scalar> s3;  // strong view; empty when the strong branch is off
};

/// RNG of view `view` (0, 1, 2) of batch slot `slot` at global step `step`.
inline RngStream view_stream(std::uint64_t seed, int step, int slot, int view) {
  return RngStream(seed).split(2).split(static_cast<std::uint64_t>(step)).split(static_cast<std::uint64_t>(slot)).split(
      static_cast<std::uint64_t>(view));
}

/// Builds s1, s2 (and s3) for a batch. Each sample draws from its own
/// stream, so the result does not depend on `workers`.
template <typename Scalar>
Views<Scalar> make_views(const std::vector<const SkeletonSequence*>& batch, const JointTopology& topo,
                         const TrainConfig& cfg, int step) {
  const int n = static_cast<int>(batch.size());
  std::vector<SkeletonSequence> v1(n), v2(n), v3(cfg.strong_branch ? n : 0);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      v1[i] = apply_general(*batch[i], topo, cfg.general, view_stream(cfg.seed, step, i, 0));
      v2[i] = apply_general(*batch[i], topo, cfg.general, view_stream(cfg.seed, step, i, 1));
      if (cfg.strong_branch)
        v3[i] = apply_strong(*batch[i], topo, cfg.general, cfg.strong, view_stream(cfg.seed, step, i, 2));
    }
  };
  const int workers = std::max(1, std::min(cfg.workers, n));
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, n * w / workers, n * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }
  auto pack = [](const std::vector<SkeletonSequence>& seqs) {
    std::vector<const SkeletonSequence*> ptrs;
    for (const auto& s : seqs) ptrs.push_back(&s);
    return nn::pack_batch<Scalar>(ptrs);
  };
  Views<Scalar> out;
  out.batch = n;
  out.s1 = pack(v1);
  out.s2 = pack(v2);
  if (cfg.strong_branch) out.s3 = pack(v3);
  return out;
}

/// Query/key momentum encoders, memory bank and optimizer state.
template <typename Scalar>
class ContrastiveTrainer {
 public:
  /// Embeddings and losses of the most recent step.
  struct Trace {
    Matrix<Scalar> z1, z2, z3, z3_dropped, bank;
    Matrix<Scalar> keep;
  };

  ContrastiveTrainer(const TrainConfig& cfg, const JointTopology& topo)
      : cfg_((cfg.validate(), cfg)),
        topo_(topo),
        query_(cfg.encoder, topo, RngStream(cfg.seed).split(0)),
        key_(query_),
        bank_(cfg.encoder.projection_dim, cfg.bank_size) {
    query_params_ = query_.parameters();
    key_params_ = key_.parameters();
    sgd_ = Sgd<Scalar>(query_params_, cfg.sgd_momentum, cfg.weight_decay);
  }

  ContrastiveTrainer(const ContrastiveTrainer&) = delete;
  ContrastiveTrainer& operator=(const ContrastiveTrainer&) = delete;

  const TrainConfig& config() const { return cfg_; }
  nn::Cffn<Scalar>& query() { return query_; }
  nn::Cffn<Scalar>& key() { return key_; }
  MemoryBank<Scalar>& bank() { return bank_; }
  const MemoryBank<Scalar>& bank() const { return bank_; }
  int global_step() const { return step_; }
  const Trace& trace() const { return trace_; }

  /// Augments `batch` and runs one optimization step.
  StepReport step(const std::vector<const SkeletonSequence*>& batch, int epoch) {
    return step_views(make_views<Scalar>(batch, topo_, cfg_, step_), epoch);
  }

  /// One optimization step on prepared views.
  StepReport step_views(const Views<Scalar>& v, int epoch) {
    const int n = v.batch;
    const double lr = cfg_.lr_at(epoch);

    // Key branch: no gradient.
    trace_.z1 = key_.project(key_.encode(v.s1, n, Mode::kTrain, nullptr), nullptr);

    typename nn::Cffn<Scalar>::Tape tape2, tape3;
    typename nn::Projector<Scalar>::Tape ptape2, ptape3, ptape3d;
    const Matrix<Scalar> f2 = query_.encode(v.s2, n, Mode::kTrain, &tape2);
    trace_.z2 = query_.project(f2, &ptape2);

    Matrix<Scalar> f3;
    if (cfg_.strong_branch) {
      f3 = query_.encode(v.s3, n, Mode::kTrain, &tape3);
      auto drop = nn::simam_drop(f3, cfg_.drop_ratio, cfg_.encoder.simam_lambda);
      trace_.z3 = query_.project(f3, &ptape3);
      trace_.z3_dropped = query_.project(drop.dropped, &ptape3d);
      trace_.keep = std::move(drop.keep);
    }

    // The very first step contrasts against its own keys.
    trace_.bank = bank_.empty() ? trace_.z1 : bank_.ordered();

    StepReport r;
    r.epoch = epoch;
    r.step = step_;
    r.lr = lr;
    Matrix<Scalar> dz2;
    r.l_info = static_cast<double>(infonce_loss(trace_.z2, trace_.z1, trace_.bank, cfg_.tau, &dz2));
    DivergenceGrads<Scalar> dd;
    if (cfg_.strong_branch) {
      const auto ld = ddm_loss(trace_.z1, trace_.z2, trace_.z3, trace_.z3_dropped, trace_.bank, cfg_.tau, &dd);
      r.l_d1 = static_cast<double>(ld.l_d1);
      r.l_d2 = static_cast<double>(ld.l_d2);
      r.l_d = static_cast<double>(ld.l_d);
    }
    r.total = cfg_.alpha * r.l_info + cfg_.beta * r.l_d;
    if (!std::isfinite(r.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at step " << step_ << " (epoch " << epoch << "): L_Info=" << r.l_info
          << " L_d1=" << r.l_d1 << " L_d2=" << r.l_d2;
      throw TrainingError(msg.str());
    }

    sgd_.zero_grad();
    const auto alpha = static_cast<Scalar>(cfg_.alpha);
    const auto beta = static_cast<Scalar>(cfg_.beta);
    query_.encode_backward(tape2, query_.project_backward(ptape2, alpha * dz2));
    if (cfg_.strong_branch) {
      Matrix<Scalar> df3 = query_.project_backward(ptape3, beta * dd.d_strong);
      df3 += query_.project_backward(ptape3d, beta * dd.d_dropped).cwiseProduct(trace_.keep);
      query_.encode_backward(tape3, df3);
    }
    sgd_.step(lr);
    momentum_update(key_params_, query_params_, cfg_.key_momentum);
    bank_.enqueue(trace_.z1);
    r.bank_size = bank_.size();
    ++step_;
    return r;
  }

 private:
  TrainConfig cfg_;
  JointTopology topo_;
  nn::Cffn<Scalar> query_;
  nn::Cffn<Scalar> key_;
  MemoryBank<Scalar> bank_;
  std::vector<nn::Parameter<Scalar>*> query_params_, key_params_;
  Sgd<Scalar> sgd_;
  int step_ = 0;
  Trace trace_;
};

/// Order of samples in epoch `epoch` (Fisher-Yates on a per-epoch stream).
inline std::vector<int> epoch_order(std::uint64_t seed, int epoch, int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RngStream rng = RngStream(seed).split(1).split(static_cast<std::uint64_t>(epoch));
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return order;
}

/// Full pretraining loop over `train`. Batches follow epoch_order; a trailing
/// batch with fewer than two samples is skipped (batch statistics need two).
template <typename Scalar>
std::unique_ptr<ContrastiveTrainer<Scalar>> pretrain_run(const std::vector<const SkeletonSequence*>& train,
                                                         const JointTopology& topo, const TrainConfig& cfg,
                                                         const std::function<void(const StepReport&)>& on_step = {}) {
  if (train.size() < 2) throw std::invalid_argument("pretraining needs at least two training sequences");
  auto trainer = std::make_unique<ContrastiveTrainer<Scalar>>(cfg, topo);
  const int n = static_cast<int>(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(cfg.seed, epoch, n);
    for (int start = 0; start + 1 < n; start += cfg.batch_size) {
      std::vector<const SkeletonSequence*> batch;
      for (int i = start; i < std::min(n, start + cfg.batch_size); ++i) batch.push_back(train[order[i]]);
      const StepReport r = trainer->step(batch, epoch);
      if (on_step) on_step(r);
    }
  }
  return trainer;
}

}  // namespace ssagait::contrastive
