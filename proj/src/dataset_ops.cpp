#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssagait/dataset.hpp"

namespace ssagait {
namespace {

std::vector<std::size_t> permutation(std::size_t n, RngStream rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

std::vector<int> apportion(int total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total < 0 || weights.empty() || !(sum > 0.0))
    throw std::invalid_argument("apportion: need a positive weight sum");
  std::vector<int> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * weights[i] / sum;
    counts[i] = static_cast<int>(std::floor(quota));
    assigned += counts[i];
    remainders.emplace_back(quota - counts[i], i);
  }
  // Largest remainder first; ties go to the lower index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) ++counts[remainders[k].second];
  return counts;
}

std::array<double, kNumEmotions> egait_class_ratios() {
  std::array<double, kNumEmotions> r{0.5503, 0.2345, 0.1461, 0.0690};
  const double sum = r[0] + r[1] + r[2] + r[3];
  for (double& x : r) x /= sum;
  return r;
}

GaitDataset subset(const GaitDataset& ds, const std::vector<std::size_t>& indices) {
  GaitDataset out;
  out.topology = ds.topology;
  out.sequences.reserve(indices.size());
  for (std::size_t i : indices) {
    out.sequences.push_back(ds.sequences.at(i));
    if (!ds.split_tags.empty()) out.split_tags.push_back(ds.split_tags.at(i));
  }
  return out;
}

std::pair<GaitDataset, GaitDataset> split_dataset(const GaitDataset& ds, double ratio, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 2) throw std::invalid_argument("split_dataset: need at least 2 samples");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split_dataset: ratio must be in (0,1)");
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  const auto idx = permutation(n, RngStream(seed));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  auto a = subset(ds, train);
  auto b = subset(ds, test);
  a.split_tags.assign(a.size(), SplitTag::kTrain);
  b.split_tags.assign(b.size(), SplitTag::kTest);
  return {std::move(a), std::move(b)};
}

GaitDataset select_labeled_fraction(const GaitDataset& ds, double fraction, std::uint64_t seed,
                                    bool stratified) {
  if (ds.empty()) throw std::invalid_argument("select_labeled_fraction: empty dataset");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("select_labeled_fraction: fraction must be in (0,1]");
  if (!ds.fully_labeled()) throw std::invalid_argument("select_labeled_fraction: dataset has unlabeled samples");

  const std::size_t n = ds.size();
  const auto k = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  RngStream rng(seed);

  if (!stratified) {
    auto idx = permutation(n, rng);
    idx.resize(k);
    return subset(ds, idx);
  }

  std::array<std::vector<std::size_t>, kNumEmotions> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<int>(*ds.sequences[i].label)].push_back(i);
  std::vector<double> weights;
  for (const auto& c : by_class) weights.push_back(static_cast<double>(c.size()));
  const auto counts = apportion(static_cast<int>(k), weights);
  std::vector<std::size_t> chosen;
  for (int c = 0; c < kNumEmotions; ++c) {
    const auto perm = permutation(by_class[c].size(), rng.split(static_cast<std::uint64_t>(c)));
    for (int m = 0; m < counts[c]; ++m) chosen.push_back(by_class[c][perm[m]]);
  }
  // Interleave classes in a seeded order rather than class-major.
  const auto order = permutation(chosen.size(), rng.split(kNumEmotions));
  std::vector<std::size_t> shuffled;
  for (std::size_t o : order) shuffled.push_back(chosen[o]);
  return subset(ds, shuffled);
}

SkeletonSequence resample_temporal(const SkeletonSequence& seq, int target_frames) {
  if (target_frames < 2) throw std::invalid_argument("resample_temporal: target_T must be >= 2");
  const int t_in = seq.frames();
  if (t_in < 2) throw std::invalid_argument("resample_temporal: input needs >= 2 frames");
  if (t_in == target_frames) return seq;

  SkeletonSequence out(target_frames, seq.joints);
  out.label = seq.label;
  const double scale = static_cast<double>(t_in - 1) / static_cast<double>(target_frames - 1);
  for (int t = 0; t < target_frames; ++t) {
    if (t == target_frames - 1) {
      out.data.row(t) = seq.data.row(t_in - 1);
      continue;
    }
    const double pos = t * scale;
    const int lo = std::min(static_cast<int>(std::floor(pos)), t_in - 2);
    const double w = pos - lo;
    out.data.row(t) = ((1.0 - w) * seq.data.row(lo).cast<double>() + w * seq.data.row(lo + 1).cast<double>())
                          .cast<float>();
  }
  return out;
}

}  // namespace ssagait
