#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ssagait/nn/layers.hpp"

namespace ssagait::contrastive {

/// Step-decay learning-rate schedule: base * gamma^(number of milestones <= epoch).
struct StepSchedule {
  double base = 1e-3;
  std::vector<int> milestones{400};
  double gamma = 0.1;

  double at(int epoch) const {
    double lr = base;
    for (int m : milestones)
      if (epoch >= m) lr *= gamma;
    return lr;
  }
  bool operator==(const StepSchedule&) const = default;
};

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient:
///   d = g + wd * w;  v = mu * v + d  (v = d on the first step);  w -= lr * v.
template <typename Scalar>
class Sgd {
 public:
  Sgd() = default;
  Sgd(std::vector<nn::Parameter<Scalar>*> params, double momentum, double weight_decay)
      : params_(std::move(params)), momentum_(momentum), weight_decay_(weight_decay), velocity_(params_.size()) {}

  void step(double lr) {
    const auto mu = static_cast<Scalar>(momentum_);
    const auto wd = static_cast<Scalar>(weight_decay_);
    const auto rate = static_cast<Scalar>(lr);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      Matrix<Scalar> d = p.grad;
      if (wd != Scalar(0)) d += wd * p.value;
      auto& v = velocity_[i];
      if (v.size() == 0 || mu == Scalar(0)) {
        v = std::move(d);
      } else {
        v = mu * v + d;
      }
      p.value -= rate * v;
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  const std::vector<Matrix<Scalar>>& velocity() const { return velocity_; }

 private:
  std::vector<nn::Parameter<Scalar>*> params_;
  double momentum_ = 0.9;
  double weight_decay_ = 1e-4;
  std::vector<Matrix<Scalar>> velocity_;
};

/// key <- m * key + (1 - m) * query, tensor by tensor.
template <typename Scalar>
void momentum_update(const std::vector<nn::Parameter<Scalar>*>& key, const std::vector<nn::Parameter<Scalar>*>& query,
                     double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("momentum must lie in [0, 1]");
  if (key.size() != query.size()) throw ShapeError("momentum_update: parameter lists differ");
  const auto mk = static_cast<Scalar>(m);
  const auto mq = static_cast<Scalar>(1.0 - m);
  for (std::size_t i = 0; i < key.size(); ++i) {
    auto& k = key[i]->value;
    const auto& q = query[i]->value;
    if (k.rows() != q.rows() || k.cols() != q.cols()) throw ShapeError("momentum_update: tensor shapes differ");
    k = mk * k + mq * q;
  }
}

}  // namespace ssagait::contrastive
