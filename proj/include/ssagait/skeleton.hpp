#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssagait/core.hpp"

namespace ssagait {

inline constexpr int kCanonicalFrames = 120;
inline constexpr int kCanonicalJoints = 16;
inline constexpr int kCoords = 3;

enum class BodyPart { kTorso = 0, kLeftArm, kRightArm, kLeftLeg, kRightLeg };
inline constexpr int kNumBodyParts = 5;

/// Joint layout shared by every sequence of a dataset.
struct JointTopology {
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
  std::array<std::vector<int>, kNumBodyParts> parts;
  std::vector<int> upper_jitter_set;
  std::vector<int> mirror;  // mirror[j] is the left/right counterpart of j (self for torso)
  int center = 0;           // joint used as the center of gravity for graph partitioning

  int num_joints() const { return static_cast<int>(joint_names.size()); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  friend bool operator==(const JointTopology&, const JointTopology&) = default;
};

/// root, spine, neck, head, L/R shoulder, elbow, hand, L/R hip, knee, foot.
const JointTopology& canonical_topology();

const char* body_part_name(BodyPart p);

/// One gait sample. `data` is T x (J*C), row t holding frame t with joint j
/// at columns [C*j, C*j + C). In memory this is the row-major T x J x C
/// tensor, which is also the encoder input layout.
template <typename Scalar>
struct BasicSkeletonSequence {
  RowMajorMatrix<Scalar> data;
  int joints = kCanonicalJoints;
  std::optional<Emotion> label;

  BasicSkeletonSequence() = default;
  BasicSkeletonSequence(int frames, int num_joints)
      : data(RowMajorMatrix<Scalar>::Zero(frames, num_joints * kCoords)), joints(num_joints) {}

  int frames() const { return static_cast<int>(data.rows()); }

  /// Coordinates of joint j at frame t as a 1x3 row.
  auto joint(int t, int j) { return data.row(t).template segment<kCoords>(kCoords * j); }
  auto joint(int t, int j) const { return data.row(t).template segment<kCoords>(kCoords * j); }

  /// (T*J) x 3 row-major view, one coordinate row per (frame, joint).
  auto coordinate_rows() {
    return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, kCoords, Eigen::RowMajor>>(
        data.data(), data.rows() * joints, kCoords);
  }
  auto coordinate_rows() const {
    return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, kCoords, Eigen::RowMajor>>(
        data.data(), data.rows() * joints, kCoords);
  }

  bool all_finite() const { return data.allFinite(); }

  template <typename Other>
  BasicSkeletonSequence<Other> cast() const {
    BasicSkeletonSequence<Other> out;
    out.data = data.template cast<Other>();
    out.joints = joints;
    out.label = label;
    return out;
  }

  friend bool operator==(const BasicSkeletonSequence& a, const BasicSkeletonSequence& b) {
    return a.joints == b.joints && a.label == b.label && a.data.rows() == b.data.rows() &&
           a.data.cols() == b.data.cols() && a.data == b.data;
  }
};

using SkeletonSequence = BasicSkeletonSequence<float>;

enum class SplitTag : std::uint8_t { kUnassigned = 0, kTrain, kTest };

struct GaitDataset {
  std::vector<SkeletonSequence> sequences;
  JointTopology topology = canonical_topology();
  std::vector<SplitTag> split_tags;  // empty or one per sequence

  std::size_t size() const { return sequences.size(); }
  bool empty() const { return sequences.empty(); }
  bool fully_labeled() const;

  /// Checks shared shape, finiteness and label range.
  void validate() const;

  friend bool operator==(const GaitDataset& a, const GaitDataset& b) {
    return a.topology == b.topology && a.sequences == b.sequences;
  }
};

}  // namespace ssagait
