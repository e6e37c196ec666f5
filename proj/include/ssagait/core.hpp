#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ssagait {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMajorMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Normalization layers use batch statistics in kTrain and running
// statistics in kEval.
enum class Mode { kTrain, kEval };

inline constexpr int kNumEmotions = 4;

enum class Emotion : std::uint8_t { kAngry = 0, kNeutral = 1, kHappy = 2, kSad = 3 };

inline const char* emotion_name(Emotion e) {
  switch (e) {
    case Emotion::kAngry: return "angry";
    case Emotion::kNeutral: return "neutral";
    case Emotion::kHappy: return "happy";
    case Emotion::kSad: return "sad";
  }
  return "unknown";
}

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace ssagait
