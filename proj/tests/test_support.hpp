#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <unistd.h>

#include "ssagait/nn/config.hpp"
#include "ssagait/rng.hpp"
#include "ssagait/skeleton.hpp"

namespace ssagait::test {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ssagait_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Sequence with coordinates ~ U[-1, 1].
template <typename Scalar = float>
BasicSkeletonSequence<Scalar> random_sequence(RngStream rng, int frames = kCanonicalFrames,
                                              int joints = kCanonicalJoints) {
  BasicSkeletonSequence<Scalar> s(frames, joints);
  for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data.data()[i] = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
  return s;
}

/// A small encoder.
inline nn::EncoderConfig tiny_encoder() {
  nn::EncoderConfig cfg;
  cfg.graph.channels = {4, 8};
  cfg.graph.temporal_strides = {2, 2};
  cfg.graph.temporal_kernel = 3;
  cfg.image.embed_dim = 8;
  cfg.image.filter_hidden = 8;
  cfg.image.blocks = 1;
  cfg.projector_hidden = 16;
  cfg.projection_dim = 16;
  return cfg;
}

}  // namespace ssagait::test
