#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ssagait/rng.hpp"
#include "ssagait/skeleton.hpp"

namespace ssagait {

/// General (pattern-preserving) augmentations. Defaults enable the
/// shear + crop composition; every transform can be switched individually.
struct GeneralAugmentSpec {
  bool shear = true;
  bool spatial_flip = false;
  bool rotate = false;
  bool crop = true;
  bool temporal_flip = false;

  double shear_range = 1.0;            // factors ~ U[-range, range]
  double flip_prob = 0.5;
  double rotate_main_deg = 30.0;       // principal axis ~ U[0, main]
  double rotate_other_deg = 10.0;      // remaining axes ~ U[0, other]
  double crop_gamma = 2.0;             // pads T / gamma frames
  double temporal_flip_prob = 0.5;

  void validate() const {
    if (!(crop_gamma >= 1.0)) throw std::invalid_argument("crop gamma must be >= 1");
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0) || !(temporal_flip_prob >= 0.0 && temporal_flip_prob <= 1.0))
      throw std::invalid_argument("flip probabilities must lie in [0,1]");
    if (!(rotate_main_deg >= 0.0 && rotate_other_deg >= 0.0 && shear_range >= 0.0))
      throw std::invalid_argument("augmentation ranges must be nonnegative");
  }

  static GeneralAugmentSpec none() {
    GeneralAugmentSpec s;
    s.shear = s.crop = false;
    return s;
  }

  bool operator==(const GeneralAugmentSpec&) const = default;
};

/// Selective strong augmentations applied on top of the general pipeline.
struct StrongAugmentSpec {
  bool jitter = true;
  bool spatiotemporal_mask = true;
  double jitter_range = 1.0;         // jitter matrix entries ~ U[-range, range]
  int max_mask_parts = 2;            // part count ~ U{1, ..., max}
  double temporal_mask_ratio = 0.25;

  void validate() const {
    if (!(temporal_mask_ratio > 0.0 && temporal_mask_ratio < 1.0))
      throw std::invalid_argument("temporal mask ratio must lie in (0,1)");
    if (max_mask_parts < 1 || max_mask_parts > 2) throw std::invalid_argument("mask parts count must be 1 or 2");
    if (!(jitter_range >= 0.0)) throw std::invalid_argument("jitter range must be nonnegative");
  }

  bool operator==(const StrongAugmentSpec&) const = default;
};

enum class Axis { kX = 0, kY = 1, kZ = 2 };

/// Explicit rotation draw: angles (radians) about X, Y and Z.
struct RotationDraw {
  Axis principal = Axis::kZ;
  std::array<double, 3> angles{0.0, 0.0, 0.0};
};

namespace augment_detail {

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> axis_rotation(Axis axis, double angle) {
  const Eigen::Vector3d unit = axis == Axis::kX ? Eigen::Vector3d::UnitX()
                               : axis == Axis::kY ? Eigen::Vector3d::UnitY()
                                                  : Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(angle, unit).toRotationMatrix().cast<Scalar>();
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> right_multiply(BasicSkeletonSequence<Scalar> seq,
                                             const Eigen::Matrix<Scalar, 3, 3>& m) {
  auto rows = seq.coordinate_rows();
  rows = (rows * m).eval();
  return seq;
}

}  // namespace augment_detail

// ---------------------------------------------------------------------------
// Spatial transforms

/// The shear matrix with unit diagonal; factors are (r12, r13, r21, r23, r31, r32).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> shear_matrix(const std::array<double, 6>& f) {
  Eigen::Matrix<Scalar, 3, 3> s;
  s << Scalar(1), Scalar(f[0]), Scalar(f[1]),
       Scalar(f[2]), Scalar(1), Scalar(f[3]),
       Scalar(f[4]), Scalar(f[5]), Scalar(1);
  return s;
}

/// Every coordinate row x becomes x * S.
template <typename Scalar>
BasicSkeletonSequence<Scalar> shear(const BasicSkeletonSequence<Scalar>& seq, const std::array<double, 6>& factors) {
  return augment_detail::right_multiply(seq, shear_matrix<Scalar>(factors));
}

inline std::array<double, 6> draw_shear_factors(RngStream& rng, double range = 1.0) {
  std::array<double, 6> f{};
  for (double& x : f) x = rng.uniform(-range, range);
  return f;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> random_shear(const BasicSkeletonSequence<Scalar>& seq, RngStream& rng,
                                           double range = 1.0) {
  return shear(seq, draw_shear_factors(rng, range));
}

/// Swaps each joint's trajectory with its mirror counterpart.
template <typename Scalar>
BasicSkeletonSequence<Scalar> mirror_joints(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo) {
  BasicSkeletonSequence<Scalar> out = seq;
  for (int j = 0; j < seq.joints; ++j) {
    const int m = topo.mirror.at(j);
    if (m == j) continue;
    out.data.middleCols(kCoords * j, kCoords) = seq.data.middleCols(kCoords * m, kCoords);
  }
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> spatial_flip(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                           RngStream& rng, double prob = 0.5) {
  return rng.bernoulli(prob) ? mirror_joints(seq, topo) : seq;
}

/// R = Rz * Ry * Rx for column vectors (X applied first); rows transform as x * R^T.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_matrix(const RotationDraw& d) {
  using augment_detail::axis_rotation;
  return axis_rotation<Scalar>(Axis::kZ, d.angles[2]) * axis_rotation<Scalar>(Axis::kY, d.angles[1]) *
         axis_rotation<Scalar>(Axis::kX, d.angles[0]);
}

inline RotationDraw draw_rotation(RngStream& rng, double main_deg = 30.0, double other_deg = 10.0) {
  RotationDraw d;
  d.principal = static_cast<Axis>(rng.below(3));
  const double deg = std::numbers::pi / 180.0;
  for (int a = 0; a < 3; ++a) {
    const double limit = a == static_cast<int>(d.principal) ? main_deg : other_deg;
    d.angles[a] = rng.uniform(0.0, limit) * deg;
  }
  return d;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> rotate(const BasicSkeletonSequence<Scalar>& seq, const RotationDraw& d) {
  return augment_detail::right_multiply(seq, Eigen::Matrix<Scalar, 3, 3>(rotation_matrix<Scalar>(d).transpose()));
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> rotate(const BasicSkeletonSequence<Scalar>& seq, RngStream& rng,
                                     double main_deg = 30.0, double other_deg = 10.0) {
  return rotate(seq, draw_rotation(rng, main_deg, other_deg));
}

// ---------------------------------------------------------------------------
// Temporal transforms

/// Head/tail padding used by crop: T / gamma frames split evenly, extra frame at the tail.
inline std::pair<int, int> crop_padding(int frames, double gamma) {
  const int pad = static_cast<int>(std::floor(frames / gamma));
  return {pad / 2, pad - pad / 2};
}

/// Edge-replication padded copy of the sequence.
template <typename Scalar>
RowMajorMatrix<Scalar> pad_edges(const BasicSkeletonSequence<Scalar>& seq, int head, int tail) {
  const int t = seq.frames();
  RowMajorMatrix<Scalar> padded(t + head + tail, seq.data.cols());
  padded.topRows(head) = seq.data.row(0).replicate(head, 1);
  padded.middleRows(head, t) = seq.data;
  padded.bottomRows(tail) = seq.data.row(t - 1).replicate(tail, 1);
  return padded;
}

/// Crop with an explicit window start in padded coordinates.
template <typename Scalar>
BasicSkeletonSequence<Scalar> crop_at(const BasicSkeletonSequence<Scalar>& seq, double gamma, int offset) {
  if (!(gamma >= 1.0)) throw std::invalid_argument("crop gamma must be >= 1");
  const auto [head, tail] = crop_padding(seq.frames(), gamma);
  if (offset < 0 || offset > head + tail) throw std::out_of_range("crop offset outside padded sequence");
  const auto padded = pad_edges(seq, head, tail);
  BasicSkeletonSequence<Scalar> out = seq;
  out.data = padded.middleRows(offset, seq.frames());
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> crop(const BasicSkeletonSequence<Scalar>& seq, double gamma, RngStream& rng) {
  const auto [head, tail] = crop_padding(seq.frames(), gamma);
  return crop_at(seq, gamma, static_cast<int>(rng.below(static_cast<std::uint64_t>(head + tail + 1))));
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> reverse_frames(const BasicSkeletonSequence<Scalar>& seq) {
  BasicSkeletonSequence<Scalar> out = seq;
  out.data = seq.data.colwise().reverse();
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> temporal_flip(const BasicSkeletonSequence<Scalar>& seq, RngStream& rng,
                                            double prob = 0.5) {
  return rng.bernoulli(prob) ? reverse_frames(seq) : seq;
}

// ---------------------------------------------------------------------------
// Selective strong augmentations

inline Eigen::Matrix3d draw_jitter_matrix(RngStream& rng, double range = 1.0) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = rng.uniform(-range, range);
  return m;
}

/// Right-multiplies the coordinate rows of the jitter-set joints by `m`;
/// every other joint is copied unchanged.
template <typename Scalar>
BasicSkeletonSequence<Scalar> jitter_joints(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                            const Eigen::Matrix3d& m) {
  BasicSkeletonSequence<Scalar> out = seq;
  const Eigen::Matrix<Scalar, 3, 3> ms = m.cast<Scalar>();
  for (int j : topo.upper_jitter_set) {
    auto cols = out.data.middleCols(kCoords * j, kCoords);
    cols = (seq.data.middleCols(kCoords * j, kCoords) * ms).eval();
  }
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> upper_body_jitter(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                                RngStream& rng, double range = 1.0) {
  return jitter_joints(seq, topo, draw_jitter_matrix(rng, range));
}

/// 1 to max_parts distinct body parts (count uniform, then parts uniform).
inline std::vector<BodyPart> draw_mask_parts(RngStream& rng, int max_parts = 2) {
  const int count = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_parts)));
  std::array<int, kNumBodyParts> ids{0, 1, 2, 3, 4};
  std::vector<BodyPart> out;
  for (int k = 0; k < count; ++k) {
    const auto pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(kNumBodyParts - k)));
    std::swap(ids[k], ids[pick]);
    out.push_back(static_cast<BodyPart>(ids[k]));
  }
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> mask_parts(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                         const std::vector<BodyPart>& parts) {
  BasicSkeletonSequence<Scalar> out = seq;
  for (BodyPart p : parts)
    for (int j : topo.parts[static_cast<int>(p)]) out.data.middleCols(kCoords * j, kCoords).setZero();
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> spatial_mask(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                           RngStream& rng, int max_parts = 2) {
  return mask_parts(seq, topo, draw_mask_parts(rng, max_parts));
}

inline int temporal_mask_count(int frames, double ratio) {
  return static_cast<int>(std::floor(ratio * frames));
}

/// floor(ratio * frames) distinct frame indices, uniformly without replacement, sorted.
inline std::vector<int> draw_mask_frames(int frames, double ratio, RngStream& rng) {
  const int count = temporal_mask_count(frames, ratio);
  std::vector<int> idx(frames);
  for (int i = 0; i < frames; ++i) idx[i] = i;
  for (int k = 0; k < count; ++k) {
    const int pick = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(frames - k)));
    std::swap(idx[k], idx[pick]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> mask_frames(const BasicSkeletonSequence<Scalar>& seq, const std::vector<int>& frames) {
  BasicSkeletonSequence<Scalar> out = seq;
  for (int t : frames) out.data.row(t).setZero();
  return out;
}

template <typename Scalar>
BasicSkeletonSequence<Scalar> temporal_mask(const BasicSkeletonSequence<Scalar>& seq, double ratio, RngStream& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("temporal mask ratio must lie in (0,1)");
  return mask_frames(seq, draw_mask_frames(seq.frames(), ratio, rng));
}

/// Spatial mask drawn from rng.split(0), then temporal mask from rng.split(1).
template <typename Scalar>
BasicSkeletonSequence<Scalar> random_spatiotemporal_mask(const BasicSkeletonSequence<Scalar>& seq,
                                                         const JointTopology& topo, const StrongAugmentSpec& spec,
                                                         const RngStream& rng) {
  RngStream spatial_rng = rng.split(0);
  RngStream temporal_rng = rng.split(1);
  return temporal_mask(spatial_mask(seq, topo, spatial_rng, spec.max_mask_parts), spec.temporal_mask_ratio,
                       temporal_rng);
}

// ---------------------------------------------------------------------------
// Pipelines

/// Enabled general transforms in fixed order: shear, spatial flip, rotate,
/// crop, temporal flip. Transform k draws from rng.split(k).
template <typename Scalar>
BasicSkeletonSequence<Scalar> apply_general(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                            const GeneralAugmentSpec& spec, const RngStream& rng) {
  BasicSkeletonSequence<Scalar> out = seq;
  if (spec.shear) {
    auto r = rng.split(0);
    out = random_shear(out, r, spec.shear_range);
  }
  if (spec.spatial_flip) {
    auto r = rng.split(1);
    out = spatial_flip(out, topo, r, spec.flip_prob);
  }
  if (spec.rotate) {
    auto r = rng.split(2);
    out = rotate(out, r, spec.rotate_main_deg, spec.rotate_other_deg);
  }
  if (spec.crop) {
    auto r = rng.split(3);
    out = crop(out, spec.crop_gamma, r);
  }
  if (spec.temporal_flip) {
    auto r = rng.split(4);
    out = temporal_flip(out, r, spec.temporal_flip_prob);
  }
  return out;
}

/// General pipeline (rng.split(0)), then upper-body jitter (rng.split(1)),
/// then random spatiotemporal mask (rng.split(2)).
template <typename Scalar>
BasicSkeletonSequence<Scalar> apply_strong(const BasicSkeletonSequence<Scalar>& seq, const JointTopology& topo,
                                           const GeneralAugmentSpec& general, const StrongAugmentSpec& strong,
                                           const RngStream& rng) {
  auto out = apply_general(seq, topo, general, rng.split(0));
  if (strong.jitter) {
    auto r = rng.split(1);
    out = upper_body_jitter(out, topo, r, strong.jitter_range);
  }
  if (strong.spatiotemporal_mask) out = random_spatiotemporal_mask(out, topo, strong, rng.split(2));
  return out;
}

}  // namespace ssagait
