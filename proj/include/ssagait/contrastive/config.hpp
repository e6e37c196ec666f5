#pragma once

#include <cstdint>
#include <stdexcept>

#include "ssagait/augment.hpp"
#include "ssagait/contrastive/optim.hpp"
#include "ssagait/nn/config.hpp"

namespace ssagait::contrastive {

struct TrainConfig {
  double tau = 0.07;
  double key_momentum = 0.999;
  double alpha = 1.0;  // InfoNCE weight
  double beta = 1.0;   // divergence weight
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 500;
  StepSchedule lr{1e-3, {400}, 0.1};
  int batch_size = 32;
  std::uint64_t seed = 1;
  double drop_ratio = 0.25;
  int bank_size = 2560;
  /// false trains the baseline: general augmentation and InfoNCE only.
  bool strong_branch = true;
  int workers = 1;
  GeneralAugmentSpec general;
  StrongAugmentSpec strong;
  nn::EncoderConfig encoder;

  double lr_at(int epoch) const { return lr.at(epoch); }

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(key_momentum >= 0.0 && key_momentum < 1.0)) throw std::invalid_argument("key momentum must lie in [0,1)");
    if (!(alpha >= 0.0 && beta >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
    if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) throw std::invalid_argument("sgd momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be nonnegative");
    if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
    if (!(lr.base > 0.0) || !(lr.gamma > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
    if (!(drop_ratio >= 0.0 && drop_ratio < 1.0)) throw std::invalid_argument("drop ratio must lie in [0,1)");
    if (bank_size < 1) throw std::invalid_argument("memory bank size must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be positive");
    general.validate();
    strong.validate();
    encoder.validate();
  }

  bool operator==(const TrainConfig&) const = default;
};

/// Per-step training record.
struct StepReport {
  int epoch = 0;
  int step = 0;  // global step index
  double l_info = 0;
  double l_d1 = 0;
  double l_d2 = 0;
  double l_d = 0;
  double total = 0;
  int bank_size = 0;
  double lr = 0;

  bool operator==(const StepReport&) const = default;
};

}  // namespace ssagait::contrastive
