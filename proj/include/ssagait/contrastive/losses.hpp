#pragma once

#include <cmath>
#include <stdexcept>

#include "ssagait/core.hpp"

namespace ssagait::contrastive {

// Embeddings are columns: a batch of B unit vectors in R^P is a P x B
// matrix; the memory bank is P x M.

/// Logits [q.k, q.m_1, ..., q.m_M] / tau, one column per sample ((M+1) x B).
template <typename Scalar>
Matrix<Scalar> contrast_logits(const Matrix<Scalar>& query, const Matrix<Scalar>& positive,
                               const Matrix<Scalar>& bank, double tau) {
  if (bank.cols() == 0) throw std::invalid_argument("memory bank is empty");
  if (query.rows() != positive.rows() || query.cols() != positive.cols() || query.rows() != bank.rows())
    throw ShapeError("contrast_logits: embedding shapes disagree");
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  const auto inv_tau = static_cast<Scalar>(1.0 / tau);
  Matrix<Scalar> logits(bank.cols() + 1, query.cols());
  logits.row(0) = query.cwiseProduct(positive).colwise().sum() * inv_tau;
  logits.bottomRows(bank.cols()).noalias() = inv_tau * (bank.transpose() * query);
  return logits;
}

/// Column-wise log-softmax with max subtraction.
template <typename Scalar>
Matrix<Scalar> log_softmax_cols(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out = logits.rowwise() - logits.colwise().maxCoeff();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> lse = out.array().exp().colwise().sum().log();
  out.rowwise() -= lse;
  return out;
}

/// [p(positive|query), p(m_1|query), ..., p(m_M|query)] per column.
template <typename Scalar>
Matrix<Scalar> conditional_distribution(const Matrix<Scalar>& query, const Matrix<Scalar>& positive,
                                        const Matrix<Scalar>& bank, double tau) {
  return log_softmax_cols(contrast_logits(query, positive, bank, tau)).array().exp().matrix();
}

/// Mean over the batch of -log p(positive | query). If `dquery` is given it
/// receives dL/dquery; the positive (key) receives no gradient.
template <typename Scalar>
Scalar infonce_loss(const Matrix<Scalar>& query, const Matrix<Scalar>& positive, const Matrix<Scalar>& bank,
                    double tau, Matrix<Scalar>* dquery = nullptr) {
  const Matrix<Scalar> logp = log_softmax_cols(contrast_logits(query, positive, bank, tau));
  const auto batch = static_cast<Scalar>(query.cols());
  const Scalar loss = -logp.row(0).sum() / batch;
  if (dquery) {
    Matrix<Scalar> dlogits = logp.array().exp().matrix();
    dlogits.row(0).array() -= Scalar(1);
    dlogits /= batch * static_cast<Scalar>(tau);
    *dquery = positive * dlogits.row(0).asDiagonal();
    dquery->noalias() += bank * dlogits.bottomRows(bank.cols());
  }
  return loss;
}

/// Mean over the batch of the cross-entropy -sum_i target_i log p_i(student),
/// where p(student) is the conditional distribution of `student` against
/// (`positive`, bank). The target is a constant.
template <typename Scalar>
Scalar distribution_cross_entropy(const Matrix<Scalar>& target, const Matrix<Scalar>& student,
                                  const Matrix<Scalar>& positive, const Matrix<Scalar>& bank, double tau,
                                  Matrix<Scalar>* dstudent = nullptr) {
  const Matrix<Scalar> logp = log_softmax_cols(contrast_logits(student, positive, bank, tau));
  if (target.rows() != logp.rows() || target.cols() != logp.cols())
    throw ShapeError("distribution_cross_entropy: target shape");
  const auto batch = static_cast<Scalar>(student.cols());
  const Scalar loss = -target.cwiseProduct(logp).sum() / batch;
  if (dstudent) {
    // d/dlogits of -sum t log softmax = softmax * sum(t) - t.
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mass = target.colwise().sum();
    Matrix<Scalar> dlogits = logp.array().exp().matrix() * mass.asDiagonal() - target;
    dlogits /= batch * static_cast<Scalar>(tau);
    *dstudent = positive * dlogits.row(0).asDiagonal();
    dstudent->noalias() += bank * dlogits.bottomRows(bank.cols());
  }
  return loss;
}

template <typename Scalar>
struct DivergenceLoss {
  Scalar l_d1 = 0;
  Scalar l_d2 = 0;
  Scalar l_d = 0;
};

template <typename Scalar>
struct DivergenceGrads {
  Matrix<Scalar> d_strong;   // dL_d / dz3
  Matrix<Scalar> d_dropped;  // dL_d / dz3'
};

/// L_d1 = CE(p(.|z3) under target p(.|z2)), L_d2 likewise for z3'; L_d is their mean.
/// Both distributions contrast against the key z1 and the bank; targets are detached.
template <typename Scalar>
DivergenceLoss<Scalar> ddm_loss(const Matrix<Scalar>& z1, const Matrix<Scalar>& z2, const Matrix<Scalar>& z3,
                                const Matrix<Scalar>& z3_dropped, const Matrix<Scalar>& bank, double tau,
                                DivergenceGrads<Scalar>* grads = nullptr) {
  const Matrix<Scalar> target = conditional_distribution(z2, z1, bank, tau);
  DivergenceLoss<Scalar> out;
  out.l_d1 = distribution_cross_entropy(target, z3, z1, bank, tau, grads ? &grads->d_strong : nullptr);
  out.l_d2 = distribution_cross_entropy(target, z3_dropped, z1, bank, tau, grads ? &grads->d_dropped : nullptr);
  out.l_d = (out.l_d1 + out.l_d2) / Scalar(2);
  if (grads) {
    grads->d_strong /= Scalar(2);
    grads->d_dropped /= Scalar(2);
  }
  return out;
}

/// Mean Shannon entropy of the columns of a distribution matrix.
template <typename Scalar>
Scalar mean_entropy(const Matrix<Scalar>& p) {
  Scalar h = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar v = p.data()[i];
    if (v > Scalar(0)) h -= v * std::log(v);
  }
  return h / static_cast<Scalar>(p.cols());
}

}  // namespace ssagait::contrastive
