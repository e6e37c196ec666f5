#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssagait/core.hpp"
#include "ssagait/nn/encoder.hpp"

namespace ssagait {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A named 2-D float tensor, column-major as in Eigen.
struct NamedTensor {
  std::string name;
  Matrix<float> value;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  nlohmann::json config;  // encoder configuration plus free-form metadata
  std::vector<NamedTensor> tensors;
};

/// Writes `dir/manifest.json` and `dir/tensors.f32` (little-endian float32,
/// tensors back to back in manifest order).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Parameters (then normalization buffers) of an encoder as named tensors.
template <typename Scalar>
std::vector<NamedTensor> export_tensors(nn::Cffn<Scalar>& enc) {
  std::vector<NamedTensor> out;
  enc.visit_params([&](const std::string& name, nn::Parameter<Scalar>& p) {
    out.push_back({name, p.value.template cast<float>()});
  });
  enc.visit_buffers([&](const std::string& name, Matrix<Scalar>& b) { out.push_back({name, b.template cast<float>()}); });
  return out;
}

/// Loads every parameter and buffer by name; shapes must agree and no name may be missing.
template <typename Scalar>
void import_tensors(nn::Cffn<Scalar>& enc, const std::vector<NamedTensor>& tensors) {
  std::size_t used = 0;
  auto find = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) -> const Matrix<float>& {
    for (const auto& t : tensors)
      if (t.name == name) {
        if (t.value.rows() != rows || t.value.cols() != cols)
          throw CheckpointError("checkpoint tensor '" + name + "' has the wrong shape");
        ++used;
        return t.value;
      }
    throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  };
  enc.visit_params([&](const std::string& name, nn::Parameter<Scalar>& p) {
    p.value = find(name, p.value.rows(), p.value.cols()).template cast<Scalar>();
  });
  enc.visit_buffers([&](const std::string& name, Matrix<Scalar>& b) {
    b = find(name, b.rows(), b.cols()).template cast<Scalar>();
  });
  if (used != tensors.size()) throw CheckpointError("checkpoint holds tensors the encoder does not have");
}

}  // namespace ssagait
