#include <cmath>
#include <numbers>

#include "ssagait/dataset.hpp"

namespace ssagait {
namespace {

using Vec3 = Eigen::Vector3d;

struct GaitParams {
  double speed, arm_swing, head_pitch, step_frequency, torso_lean, bounce;
  double scale, phase, heading, x0, z0;
};

double draw(RngStream& rng, const KinematicRange& r) { return rng.uniform(r.lo, r.hi); }

// Unit limb direction for a segment swung forward by `angle` from hanging
// straight down, in the sagittal (y, z) plane.
Vec3 limb_dir(double angle) { return {0.0, -std::cos(angle), std::sin(angle)}; }

/// Joint positions of one frame in a body frame walking along +z, y up, x to the left.
void pose_at(const GaitParams& p, double time, Eigen::Ref<Eigen::Matrix<double, kCanonicalJoints, 3, Eigen::RowMajor>> out) {
  const double s = p.scale;
  const double omega = 2.0 * std::numbers::pi * p.step_frequency;
  const double phase = omega * time + p.phase;

  const double leg = 0.9 * s;
  const double stride = p.speed / p.step_frequency;
  const double hip_amp = std::atan(stride / (4.0 * leg));

  Vec3 root(0.02 * s * std::sin(phase), 0.95 * s + p.bounce * std::cos(2.0 * phase), p.speed * time);
  const Vec3 up(0.0, std::cos(p.torso_lean), std::sin(p.torso_lean));
  const Vec3 spine = root + 0.25 * s * up;
  const Vec3 neck = root + 0.55 * s * up;
  const double head_angle = p.torso_lean + p.head_pitch;
  const Vec3 head = neck + 0.2 * s * Vec3(0.0, std::cos(head_angle), std::sin(head_angle));

  out.row(0) = root;
  out.row(1) = spine;
  out.row(2) = neck;
  out.row(3) = head;

  for (int side = 0; side < 2; ++side) {
    const double lateral = side == 0 ? 1.0 : -1.0;
    const double leg_phase = phase + (side == 0 ? 0.0 : std::numbers::pi);

    // Arms swing against the ipsilateral leg.
    const double arm_angle = -p.arm_swing * std::sin(leg_phase);
    const double elbow_bend = 0.15 + 0.6 * p.arm_swing * (0.5 + 0.5 * std::sin(-leg_phase));
    const Vec3 shoulder = neck + Vec3(lateral * 0.18 * s, -0.03 * s, 0.0);
    const Vec3 elbow = shoulder + 0.30 * s * limb_dir(arm_angle);
    const Vec3 hand = elbow + 0.27 * s * limb_dir(arm_angle + elbow_bend);

    const double hip_angle = hip_amp * std::sin(leg_phase);
    const double knee_flex = (0.15 + 1.2 * hip_amp) * std::max(0.0, std::sin(leg_phase + std::numbers::pi / 2.0));
    const Vec3 hip = root + Vec3(lateral * 0.1 * s, 0.0, 0.0);
    const Vec3 knee = hip + 0.45 * s * limb_dir(hip_angle);
    const Vec3 foot = knee + 0.45 * s * limb_dir(hip_angle - knee_flex);

    const int arm0 = side == 0 ? 4 : 7;
    const int leg0 = side == 0 ? 10 : 13;
    out.row(arm0) = shoulder;
    out.row(arm0 + 1) = elbow;
    out.row(arm0 + 2) = hand;
    out.row(leg0) = hip;
    out.row(leg0 + 1) = knee;
    out.row(leg0 + 2) = foot;
  }
}

void check_range(const KinematicRange& r, const char* what) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw std::invalid_argument(std::string("degenerate kinematic range: ") + what);
}

}  // namespace

std::array<ClassKinematics, kNumEmotions> SynthConfig::default_kinematics() {
  std::array<ClassKinematics, kNumEmotions> k{};
  // angry: fast, long strides, wide arm swing, head level
  k[0] = {{1.45, 1.85}, {0.55, 0.85}, {-0.10, 0.10}, {1.00, 1.20}, {0.05, 0.15}, {0.020, 0.040}};
  // neutral
  k[1] = {{1.05, 1.35}, {0.30, 0.50}, {0.00, 0.15}, {0.85, 1.00}, {0.00, 0.08}, {0.015, 0.030}};
  // happy: brisk and bouncy, head up
  k[2] = {{1.25, 1.60}, {0.40, 0.65}, {-0.20, 0.00}, {0.95, 1.15}, {-0.05, 0.05}, {0.035, 0.060}};
  // sad: slow, small swing, head down, slumped
  k[3] = {{0.60, 0.95}, {0.10, 0.30}, {0.30, 0.55}, {0.70, 0.85}, {0.10, 0.25}, {0.005, 0.015}};
  return k;
}

void SynthConfig::validate() const {
  if (n_samples <= 0) throw std::invalid_argument("SynthConfig: n_samples must be positive");
  if (frames < 2) throw std::invalid_argument("SynthConfig: frames must be >= 2");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("SynthConfig: frame_rate must be positive");
  double sum = 0.0;
  for (double r : class_ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("SynthConfig: class ratios must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("SynthConfig: class ratios must sum to 1");
  for (const auto& k : kinematics) {
    check_range(k.speed, "speed");
    check_range(k.arm_swing, "arm_swing");
    check_range(k.head_pitch, "head_pitch");
    check_range(k.step_frequency, "step_frequency");
    check_range(k.torso_lean, "torso_lean");
    check_range(k.bounce, "bounce");
    if (!(k.step_frequency.lo > 0.0)) throw std::invalid_argument("SynthConfig: step frequency must be positive");
  }
}

GaitDataset generate_synthetic(const SynthConfig& cfg, const JointTopology& topo) {
  cfg.validate();
  topo.validate();
  if (topo.num_joints() != kCanonicalJoints)
    throw std::invalid_argument("generate_synthetic: canonical 16-joint topology required");

  const RngStream root_rng(cfg.seed);
  const auto counts = apportion(cfg.n_samples, {cfg.class_ratios.begin(), cfg.class_ratios.end()});
  std::vector<int> labels;
  for (int c = 0; c < kNumEmotions; ++c) labels.insert(labels.end(), counts[c], c);
  RngStream shuffle = root_rng.split(0xfeedULL);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[shuffle.below(i)]);

  GaitDataset ds;
  ds.topology = topo;
  ds.sequences.reserve(labels.size());
  Eigen::Matrix<double, kCanonicalJoints, 3, Eigen::RowMajor> pose;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    RngStream rng = root_rng.split(i);
    const auto& k = cfg.kinematics[labels[i]];
    GaitParams p{};
    p.speed = draw(rng, k.speed);
    p.arm_swing = draw(rng, k.arm_swing);
    p.head_pitch = draw(rng, k.head_pitch);
    p.step_frequency = draw(rng, k.step_frequency);
    p.torso_lean = draw(rng, k.torso_lean);
    p.bounce = draw(rng, k.bounce);
    p.scale = rng.uniform(0.9, 1.1);
    p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.heading = rng.uniform(-cfg.heading_jitter, cfg.heading_jitter);
    p.x0 = rng.uniform(-0.5, 0.5);
    p.z0 = rng.uniform(-0.5, 0.5);

    const Eigen::Matrix3d yaw = Eigen::AngleAxisd(p.heading, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::RowVector3d offset(p.x0, 0.0, p.z0);

    SkeletonSequence seq(cfg.frames, kCanonicalJoints);
    seq.label = static_cast<Emotion>(labels[i]);
    for (int t = 0; t < cfg.frames; ++t) {
      pose_at(p, t / cfg.frame_rate, pose);
      for (int j = 0; j < kCanonicalJoints; ++j) {
        Eigen::RowVector3d x = pose.row(j) * yaw.transpose() + offset;
        for (int c = 0; c < 3; ++c) x(c) += cfg.sensor_noise * rng.normal();
        seq.joint(t, j) = x.cast<float>();
      }
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace ssagait
