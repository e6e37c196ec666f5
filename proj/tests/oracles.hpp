#pragma once

// Reference computations shared by the unit tests and the acceptance suite.
// Everything here is written independently of the library's fast paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ssagait/contrastive/losses.hpp"
#include "ssagait/nn/encoder.hpp"
#include "ssagait/rng.hpp"
#include "ssagait/skeleton.hpp"

namespace ssagait::oracle {

struct GradCheck {
  double max_rel = 0.0;  // worst per-tensor relative error over kink-free probes
  std::string worst;     // tensor holding it
  int tensors = 0;
  int tensors_checked = 0;  // tensors with at least one kink-free probe
  int probes = 0;           // kink-free entries compared
  int kinked = 0;           // entries discarded because a ReLU changed state within the step
};

/// Relative error between two gradient vectors, ||a - b|| / max(||a||, ||b||).
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-12) {
  const double scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

/// On/off state of every rectifier in a taped forward pass.
inline std::vector<bool> relu_pattern(const nn::Cffn<double>::Tape& tape, const nn::Projector<double>::Tape& ptape) {
  std::vector<bool> bits;
  const auto add = [&](const Matrix<double>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) bits.push_back(m.data()[i] > 0.0);
  };
  for (const auto& u : tape.graph.units) {
    add(u.act);
    add(u.out);
  }
  for (const auto& b : tape.image.blocks) add(b.hidden);
  add(ptape.hidden);
  return bits;
}

/// Central-difference check of the encoder parameters for
/// L = sum(w .* project(encode(x))). For each tensor, up to `per_tensor`
/// random entries are probed. A probe is discarded when any rectifier
/// switches state between the two evaluation points, since the loss is not
/// differentiable along that segment; at most `attempts_per_tensor` probes
/// are drawn per tensor.
inline GradCheck encoder_gradcheck(nn::Cffn<double>& enc, const Matrix<double>& x, int batch, Mode mode,
                                   double step, int per_tensor, RngStream rng, int attempts_per_tensor = 12) {
  Matrix<double> w(enc.config().projection_dim, batch);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);

  const auto evaluate = [&](std::vector<bool>* pattern) {
    nn::Cffn<double>::Tape tape;
    nn::Projector<double>::Tape ptape;
    const Matrix<double> z = enc.project(enc.encode(x, batch, mode, &tape), &ptape);
    if (pattern) *pattern = relu_pattern(tape, ptape);
    return z.cwiseProduct(w).sum();
  };

  enc.zero_grad();
  {
    nn::Cffn<double>::Tape tape;
    nn::Projector<double>::Tape ptape;
    const Matrix<double> fused = enc.encode(x, batch, mode, &tape);
    enc.project(fused, &ptape);
    enc.encode_backward(tape, enc.project_backward(ptape, w));
  }

  GradCheck out;
  std::vector<bool> up_bits, down_bits;
  enc.visit_params([&](const std::string& name, nn::Parameter<double>& p) {
    const Eigen::Index n = p.value.size();
    std::vector<double> analytic, numeric;
    for (int attempt = 0; attempt < attempts_per_tensor && static_cast<int>(analytic.size()) < per_tensor; ++attempt) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      double& v = p.value.data()[i];
      const double orig = v;
      v = orig + step;
      const double up = evaluate(&up_bits);
      v = orig - step;
      const double down = evaluate(&down_bits);
      v = orig;
      if (up_bits != down_bits) {
        ++out.kinked;
        continue;
      }
      numeric.push_back((up - down) / (2 * step));
      analytic.push_back(p.grad.data()[i]);
    }
    ++out.tensors;
    if (analytic.empty()) return;
    ++out.tensors_checked;
    out.probes += static_cast<int>(analytic.size());
    const double rel = relative_error(Eigen::Map<Eigen::VectorXd>(analytic.data(), analytic.size()),
                                      Eigen::Map<Eigen::VectorXd>(numeric.data(), numeric.size()), 1e-6);
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = name;
    }
  });
  return out;
}

/// Small sequences of smooth random motion.
inline std::vector<SkeletonSequence> smooth_sequences(int n, int frames, RngStream rng) {
  std::vector<SkeletonSequence> out;
  for (int s = 0; s < n; ++s) {
    SkeletonSequence seq(frames, kCanonicalJoints);
    for (Eigen::Index c = 0; c < seq.data.cols(); ++c) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-0.5, 0.5), f = rng.uniform(0.02, 0.2);
      const double ph = rng.uniform(0, 6.283);
      for (int t = 0; t < frames; ++t)
        seq.data(t, c) = static_cast<float>(a + b * std::sin(f * t + ph) + 0.05 * rng.uniform(-1, 1));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

/// log(1 + 2 exp(-1/tau)): InfoNCE of a query equal to its positive with
/// two orthogonal negatives.
inline double infonce_two_orthogonal(double tau) { return std::log1p(2.0 * std::exp(-1.0 / tau)); }

/// Softmax over [q.k, q.m_1, ...] / tau written with scalar loops.
inline std::vector<double> reference_distribution(const Eigen::VectorXd& q, const Eigen::VectorXd& k,
                                                  const Eigen::MatrixXd& bank, double tau) {
  std::vector<double> s;
  auto dot = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double acc = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) acc += a(i) * b(i);
    return acc;
  };
  s.push_back(dot(q, k) / tau);
  for (Eigen::Index j = 0; j < bank.cols(); ++j) s.push_back(dot(q, bank.col(j)) / tau);
  double z = 0;
  for (double v : s) z += std::exp(v);
  for (double& v : s) v = std::exp(v) / z;
  return s;
}

struct ReferenceDivergence {
  double l_d1 = 0, l_d2 = 0, l_d = 0, target_entropy = 0;
};

/// Batch-mean cross-entropies as an explicit double sum over every outcome.
inline ReferenceDivergence reference_ddm(const Eigen::MatrixXd& z1, const Eigen::MatrixXd& z2,
                                         const Eigen::MatrixXd& z3, const Eigen::MatrixXd& z3d,
                                         const Eigen::MatrixXd& bank, double tau) {
  ReferenceDivergence out;
  const auto b = static_cast<double>(z1.cols());
  for (Eigen::Index n = 0; n < z1.cols(); ++n) {
    const auto t = reference_distribution(z2.col(n), z1.col(n), bank, tau);
    const auto p3 = reference_distribution(z3.col(n), z1.col(n), bank, tau);
    const auto p3d = reference_distribution(z3d.col(n), z1.col(n), bank, tau);
    for (std::size_t i = 0; i < t.size(); ++i) {
      out.l_d1 -= t[i] * std::log(p3[i]) / b;
      out.l_d2 -= t[i] * std::log(p3d[i]) / b;
      out.target_entropy -= t[i] * std::log(t[i]) / b;
    }
  }
  out.l_d = 0.5 * (out.l_d1 + out.l_d2);
  return out;
}

/// Random unit columns.
inline Eigen::MatrixXd unit_columns(int dim, int count, RngStream& rng) {
  Eigen::MatrixXd m(dim, count);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  m.colwise().normalize();
  return m;
}

/// Total objective alpha * L_Info(z2; z1) + beta * L_d with the trainer's
/// gradient wiring: the target p(.|z2) and z1 are constants.
struct Objective {
  double total = 0;
  Eigen::MatrixXd dz2, dz3, dz3d;
};

inline Objective objective(const Eigen::MatrixXd& z1, const Eigen::MatrixXd& z2, const Eigen::MatrixXd& z3,
                           const Eigen::MatrixXd& z3d, const Eigen::MatrixXd& bank, double tau, double alpha,
                           double beta) {
  Objective o;
  Eigen::MatrixXd dinfo;
  const double info = contrastive::infonce_loss<double>(z2, z1, bank, tau, &dinfo);
  contrastive::DivergenceGrads<double> g;
  const auto d = contrastive::ddm_loss<double>(z1, z2, z3, z3d, bank, tau, &g);
  o.total = alpha * info + beta * d.l_d;
  o.dz2 = alpha * dinfo;
  o.dz3 = beta * g.d_strong;
  o.dz3d = beta * g.d_dropped;
  return o;
}

/// Central-difference gradient of f over every entry of x.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f, Eigen::MatrixXd x,
                                        double step) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + step;
    const double up = f(x);
    x.data()[i] = orig - step;
    const double down = f(x);
    x.data()[i] = orig;
    g.data()[i] = (up - down) / (2 * step);
  }
  return g;
}

inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return relative_error(Eigen::VectorXd(a.reshaped()), Eigen::VectorXd(b.reshaped()));
}

}  // namespace ssagait::oracle
