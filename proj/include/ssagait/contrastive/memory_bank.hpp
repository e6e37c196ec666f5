#pragma once

#include <cmath>
#include <stdexcept>

#include "ssagait/core.hpp"

namespace ssagait::contrastive {

/// Fixed-capacity FIFO queue of key embeddings (columns). Once full, each
/// enqueued column overwrites the oldest one.
template <typename Scalar>
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(int dim, int capacity) : storage_(dim, capacity) {
    if (dim < 1 || capacity < 1) throw std::invalid_argument("memory bank needs positive dimension and capacity");
  }

  int dim() const { return static_cast<int>(storage_.rows()); }
  int capacity() const { return static_cast<int>(storage_.cols()); }
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool full() const { return size_ == capacity(); }
  /// Slot written by the next enqueued column.
  int cursor() const { return cursor_; }

  /// Appends the columns of `keys` in order. Norms must be 1 within `norm_tol`.
  void enqueue(const Matrix<Scalar>& keys, double norm_tol = 1e-4) {
    if (keys.rows() != storage_.rows()) throw ShapeError("memory bank: key dimension mismatch");
    for (Eigen::Index j = 0; j < keys.cols(); ++j) {
      const double n = static_cast<double>(keys.col(j).norm());
      if (!(std::abs(n - 1.0) <= norm_tol)) throw std::invalid_argument("memory bank: keys must be unit-norm");
    }
    // Only the newest `capacity` columns can survive.
    const Eigen::Index skip = std::max<Eigen::Index>(0, keys.cols() - capacity());
    for (Eigen::Index j = skip; j < keys.cols(); ++j) {
      storage_.col(cursor_) = keys.col(j);
      cursor_ = (cursor_ + 1) % capacity();
    }
    size_ = static_cast<int>(std::min<Eigen::Index>(capacity(), size_ + keys.cols()));
  }

  /// Stored keys, oldest first (dim x size).
  Matrix<Scalar> ordered() const {
    Matrix<Scalar> out(storage_.rows(), size_);
    const int start = full() ? cursor_ : 0;
    for (int i = 0; i < size_; ++i) out.col(i) = storage_.col((start + i) % capacity());
    return out;
  }

  void clear() {
    size_ = 0;
    cursor_ = 0;
  }

 private:
  Matrix<Scalar> storage_;
  int size_ = 0;
  int cursor_ = 0;
};

}  // namespace ssagait::contrastive
