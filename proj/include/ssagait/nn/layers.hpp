#pragma once

#include <cmath>
#include <string>

#include "ssagait/core.hpp"
#include "ssagait/rng.hpp"

namespace ssagait::nn {

/// A learnable tensor and its accumulated gradient (same shape).
template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix<Scalar>::Zero(rows, cols);
    grad = Matrix<Scalar>::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

/// Sum over columns, accumulated column by column (contiguous in column-major storage).
template <typename Derived>
Vector<typename Derived::Scalar> row_sums(const Eigen::MatrixBase<Derived>& x) {
  Vector<typename Derived::Scalar> acc = Vector<typename Derived::Scalar>::Zero(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) acc += x.col(j);
  return acc;
}

/// Row-wise sum of a .* b.
template <typename DA, typename DB>
Vector<typename DA::Scalar> row_dots(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Vector<typename DA::Scalar> acc = Vector<typename DA::Scalar>::Zero(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a.col(j).cwiseProduct(b.col(j));
  return acc;
}

template <typename Scalar>
void uniform_fill(Matrix<Scalar>& m, double bound, RngStream& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
}

/// y = W x + b, columns are samples.
template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;  // out x in
  Parameter<Scalar> bias;    // out x 1

  Linear() = default;
  Linear(int in, int out, RngStream& rng) {
    weight.resize(out, in);
    bias.resize(out, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    uniform_fill(weight.value, bound, rng);
    uniform_fill(bias.value, bound, rng);
  }

  int in_features() const { return static_cast<int>(weight.value.cols()); }
  int out_features() const { return static_cast<int>(weight.value.rows()); }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) const {
    Matrix<Scalar> y(weight.value.rows(), x.cols());
    y.noalias() = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
  }

  /// Accumulates parameter gradients; returns dL/dx.
  Matrix<Scalar> backward(const Matrix<Scalar>& x, const Matrix<Scalar>& dy) {
    weight.grad.noalias() += dy * x.transpose();
    bias.grad.col(0) += row_sums(dy);
    Matrix<Scalar> dx(x.rows(), x.cols());
    dx.noalias() = weight.value.transpose() * dy;
    return dx;
  }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }
};


/// Batch normalization over rows (channels); statistics are taken over columns.
template <typename Scalar>
struct BatchNorm {
  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  Matrix<Scalar> running_mean;
  Matrix<Scalar> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  struct Tape {
    Matrix<Scalar> xhat;
    Vector<Scalar> inv_std;
    Mode mode = Mode::kTrain;
  };

  BatchNorm() = default;
  explicit BatchNorm(int channels) {
    gamma.resize(channels, 1);
    gamma.value.setOnes();
    beta.resize(channels, 1);
    running_mean = Matrix<Scalar>::Zero(channels, 1);
    running_var = Matrix<Scalar>::Ones(channels, 1);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode, Tape* tape) {
    const auto m = static_cast<Scalar>(x.cols());
    Vector<Scalar> mean, inv_std;
    Matrix<Scalar> xhat;
    if (mode == Mode::kTrain) {
      mean = row_sums(x) / m;
      xhat = x.colwise() - mean;
      const Vector<Scalar> var = row_dots(xhat, xhat) / m;
      inv_std = (var.array() + static_cast<Scalar>(eps)).rsqrt();
      const auto mom = static_cast<Scalar>(momentum);
      running_mean = (Scalar(1) - mom) * running_mean + mom * mean;
      const Scalar unbias = x.cols() > 1 ? m / (m - Scalar(1)) : Scalar(1);
      running_var = (Scalar(1) - mom) * running_var + mom * unbias * var;
    } else {
      mean = running_mean.col(0);
      inv_std = (running_var.col(0).array() + static_cast<Scalar>(eps)).rsqrt();
      xhat = x.colwise() - mean;
    }
    xhat = inv_std.asDiagonal() * xhat;
    Matrix<Scalar> y = gamma.value.col(0).asDiagonal() * xhat;
    y.colwise() += beta.value.col(0);
    if (tape) {
      tape->xhat = std::move(xhat);
      tape->inv_std = std::move(inv_std);
      tape->mode = mode;
    }
    return y;
  }

  Matrix<Scalar> backward(const Tape& tape, const Matrix<Scalar>& dy) {
    const Vector<Scalar> sum_dy = row_sums(dy);
    const Vector<Scalar> sum_dy_xhat = row_dots(dy, tape.xhat);
    gamma.grad.col(0) += sum_dy_xhat;
    beta.grad.col(0) += sum_dy;
    Matrix<Scalar> dxhat = gamma.value.col(0).asDiagonal() * dy;
    if (tape.mode == Mode::kEval) return tape.inv_std.asDiagonal() * dxhat;
    const auto m = static_cast<Scalar>(dy.cols());
    const Vector<Scalar> sum_d = gamma.value.col(0).cwiseProduct(sum_dy);
    const Vector<Scalar> sum_dx = gamma.value.col(0).cwiseProduct(sum_dy_xhat);
    dxhat *= m;
    dxhat.colwise() -= sum_d;
    dxhat -= sum_dx.asDiagonal() * tape.xhat;
    return (tape.inv_std / m).asDiagonal() * dxhat;
  }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    f(prefix + "weight", gamma);
    f(prefix + "bias", beta);
  }
  template <typename F>
  void visit_buffers(const std::string& prefix, F&& f) {
    f(prefix + "running_mean", running_mean);
    f(prefix + "running_var", running_var);
  }
};

/// Layer normalization over rows for each column independently.
template <typename Scalar>
struct LayerNorm {
  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  double eps = 1e-5;

  struct Tape {
    Matrix<Scalar> xhat;
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(int channels) {
    gamma.resize(channels, 1);
    gamma.value.setOnes();
    beta.resize(channels, 1);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Tape* tape) const {
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = x.colwise().mean();
    Matrix<Scalar> xhat = x.rowwise() - mean;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> inv_std =
        (xhat.array().square().colwise().mean() + static_cast<Scalar>(eps)).rsqrt();
    xhat = xhat * inv_std.asDiagonal();
    Matrix<Scalar> y = gamma.value.col(0).asDiagonal() * xhat;
    y.colwise() += beta.value.col(0);
    if (tape) {
      tape->xhat = std::move(xhat);
      tape->inv_std = inv_std;
    }
    return y;
  }

  Matrix<Scalar> backward(const Tape& tape, const Matrix<Scalar>& dy) {
    gamma.grad.col(0) += row_dots(dy, tape.xhat);
    beta.grad.col(0) += row_sums(dy);
    Matrix<Scalar> dxhat = gamma.value.col(0).asDiagonal() * dy;
    const auto d = static_cast<Scalar>(dy.rows());
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum_d = dxhat.colwise().sum();
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum_dx = dxhat.cwiseProduct(tape.xhat).colwise().sum();
    dxhat *= d;
    dxhat.rowwise() -= sum_d;
    dxhat -= tape.xhat * sum_dx.asDiagonal();
    return dxhat * (tape.inv_std / d).asDiagonal();
  }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    f(prefix + "weight", gamma);
    f(prefix + "bias", beta);
  }
};

template <typename Scalar>
Matrix<Scalar> relu(const Matrix<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}

/// Gradient of relu given its output.
template <typename Scalar>
Matrix<Scalar> relu_backward(const Matrix<Scalar>& out, const Matrix<Scalar>& dy) {
  return (out.array() > Scalar(0)).select(dy, Scalar(0));
}

}  // namespace ssagait::nn
