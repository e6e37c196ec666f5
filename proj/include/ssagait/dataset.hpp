#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <utility>

#include "ssagait/rng.hpp"
#include "ssagait/skeleton.hpp"

namespace ssagait {

enum class DatasetErrc {
  kMissingFile,
  kShapeMismatch,
  kNonFinite,
  kUnknownSchema,
  kBadLabel,
  kIo,
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(DatasetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  DatasetErrc code() const { return code_; }

 private:
  DatasetErrc code_;
};

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::uint8_t kUnlabeled = 255;

/// Reads `meta.json`, `data.f32` and the optional `labels.u8`.
GaitDataset load_dataset(const std::filesystem::path& dir);

/// Writes the dataset directory. Output bytes depend only on the dataset.
void save_dataset(const GaitDataset& ds, const std::filesystem::path& dir);

/// Subset with the given indices, in order. Split tags are carried along.
GaitDataset subset(const GaitDataset& ds, const std::vector<std::size_t>& indices);

/// Seeded permutation split; |train| = round(ratio * N), kept within [1, N-1].
std::pair<GaitDataset, GaitDataset> split_dataset(const GaitDataset& ds, double ratio,
                                                  std::uint64_t seed);

/// ceil(fraction * N) samples drawn uniformly without replacement. With
/// `stratified`, the same total is apportioned over classes by largest
/// remainder and drawn within each class.
GaitDataset select_labeled_fraction(const GaitDataset& ds, double fraction, std::uint64_t seed,
                                    bool stratified = false);

/// Linear interpolation onto target_frames uniformly spaced samples.
SkeletonSequence resample_temporal(const SkeletonSequence& seq, int target_frames);

/// Largest-remainder apportionment of `total` over `weights` (weights need not be normalized).
std::vector<int> apportion(int total, const std::vector<double>& weights);

/// Class ratios of the E-Gait dataset (angry, neutral, happy, sad), renormalized to sum to one.
std::array<double, kNumEmotions> egait_class_ratios();

struct KinematicRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Walking-style kinematics of one emotion class. Each sample draws every
/// quantity uniformly from its range.
struct ClassKinematics {
  KinematicRange speed;            // m/s along the walking direction
  KinematicRange arm_swing;        // shoulder swing amplitude, rad
  KinematicRange head_pitch;       // forward head pitch, rad (positive = down)
  KinematicRange step_frequency;   // gait cycles per second
  KinematicRange torso_lean;       // forward trunk lean, rad
  KinematicRange bounce;           // vertical root oscillation, m
};

struct SynthConfig {
  int n_samples = 400;
  std::array<double, kNumEmotions> class_ratios = egait_class_ratios();
  std::uint64_t seed = 0;
  int frames = kCanonicalFrames;
  double frame_rate = 30.0;
  double sensor_noise = 0.01;       // per-coordinate Gaussian noise, m
  double heading_jitter = 0.35;     // uniform walking-direction yaw in [-h, h], rad
  std::array<ClassKinematics, kNumEmotions> kinematics = default_kinematics();

  static std::array<ClassKinematics, kNumEmotions> default_kinematics();

  void validate() const;
};

/// Sinusoidal walking gaits for the four emotion classes.
GaitDataset generate_synthetic(const SynthConfig& cfg,
                               const JointTopology& topo = canonical_topology());

}  // namespace ssagait
