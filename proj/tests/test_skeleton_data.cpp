#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "ssagait/dataset.hpp"
#include "test_support.hpp"

using namespace ssagait;
using ssagait::test::TempDir;

namespace {

GaitDataset small_dataset(int n, std::uint64_t seed = 3) {
  SynthConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

// Independent largest-remainder rounding: floor everything, then hand out
// the leftover units by descending remainder (ties to the lower index).
std::vector<int> reference_apportion(int total, std::vector<double> w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<int> out(w.size());
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = total * w[i] / sum;
    out[i] = static_cast<int>(std::floor(exact));
    assigned += out[i];
    rem.push_back({-(exact - out[i]), static_cast<int>(i)});
  }
  std::sort(rem.begin(), rem.end());
  for (int k = 0; k < total - assigned; ++k) ++out[rem[k].second];
  return out;
}

}  // namespace

TEST_CASE("canonical topology satisfies its invariants") {
  const auto& topo = canonical_topology();
  CHECK(topo.num_joints() == 16);
  CHECK(topo.edges.size() == 15);
  CHECK_NOTHROW(topo.validate());

  std::vector<int> seen;
  for (const auto& part : topo.parts) seen.insert(seen.end(), part.begin(), part.end());
  std::sort(seen.begin(), seen.end());
  std::vector<int> all(16);
  std::iota(all.begin(), all.end(), 0);
  CHECK(seen == all);

  std::set<int> arms(topo.parts[1].begin(), topo.parts[1].end());
  arms.insert(topo.parts[2].begin(), topo.parts[2].end());
  CHECK(topo.upper_jitter_set.size() == 6);
  for (int j : topo.upper_jitter_set) CHECK(arms.count(j) == 1);

  // Every joint is reachable from the root through the edge list.
  std::set<int> reached{0};
  for (int pass = 0; pass < 16; ++pass)
    for (auto [a, b] : topo.edges)
      if (reached.count(a) || reached.count(b)) reached.insert({a, b});
  CHECK(reached.size() == 16);
}

TEST_CASE("topology validation rejects broken layouts") {
  auto topo = canonical_topology();
  SUBCASE("cycle instead of tree") {
    topo.edges.back() = {3, 4};
    topo.edges.push_back({14, 15});
    topo.edges.erase(topo.edges.begin());
    CHECK_THROWS_AS(topo.validate(), std::invalid_argument);
  }
  SUBCASE("overlapping parts") {
    topo.parts[0].push_back(4);
    CHECK_THROWS_AS(topo.validate(), std::invalid_argument);
  }
  SUBCASE("jitter joint outside the arms") {
    topo.upper_jitter_set.back() = 12;
    CHECK_THROWS_AS(topo.validate(), std::invalid_argument);
  }
  SUBCASE("mirror is not an involution") {
    topo.mirror[4] = 8;
    CHECK_THROWS_AS(topo.validate(), std::invalid_argument);
  }
}

TEST_CASE("synthetic labels follow largest-remainder apportionment of the E-Gait ratios") {
  const auto ds = small_dataset(400, 11);
  std::vector<int> counts(kNumEmotions, 0);
  for (const auto& s : ds.sequences) ++counts[static_cast<int>(*s.label)];
  CHECK(counts == std::vector<int>{220, 94, 58, 28});
  CHECK(counts == reference_apportion(400, {55.03, 23.45, 14.61, 6.90}));
}

TEST_CASE("apportion matches the reference rounding and conserves the total") {
  RngStream rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int total = static_cast<int>(rng.below(1000));
    std::vector<double> w(1 + rng.below(6));
    for (double& x : w) x = rng.uniform(0.0, 1.0) + 1e-3;
    const auto got = apportion(total, w);
    CHECK(std::accumulate(got.begin(), got.end(), 0) == total);
    CHECK(got == reference_apportion(total, w));
  }
}

TEST_CASE("synthetic generator is deterministic and canonical") {
  const auto a = small_dataset(24, 9);
  const auto b = small_dataset(24, 9);
  const auto c = small_dataset(24, 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const auto& s : a.sequences) {
    CHECK(s.frames() == 120);
    CHECK(s.joints == 16);
    CHECK(s.data.cols() == 48);
    CHECK(s.all_finite());
  }
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("mean root speed is ordered sad < neutral < happy < angry") {
  const auto ds = small_dataset(200, 21);
  std::map<int, std::pair<double, int>> acc;
  for (const auto& s : ds.sequences) {
    double path = 0;
    for (int t = 1; t < s.frames(); ++t) path += (s.joint(t, 0) - s.joint(t - 1, 0)).template cast<double>().norm();
    auto& [sum, n] = acc[static_cast<int>(*s.label)];
    sum += path / (s.frames() - 1);
    ++n;
  }
  auto mean = [&](Emotion e) { return acc[static_cast<int>(e)].first / acc[static_cast<int>(e)].second; };
  CHECK(mean(Emotion::kSad) < mean(Emotion::kNeutral));
  CHECK(mean(Emotion::kNeutral) < mean(Emotion::kHappy));
  CHECK(mean(Emotion::kHappy) < mean(Emotion::kAngry));
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  cfg.kinematics[0].speed = {2.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.class_ratios = {0.5, 0.5, 0.5, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.n_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("dataset files round-trip bit-exactly") {
  TempDir dir("roundtrip");
  auto ds = small_dataset(12);
  ds.sequences[3].label.reset();
  save_dataset(ds, dir.path());
  const auto back = load_dataset(dir.path());
  CHECK(back == ds);
  CHECK_FALSE(back.sequences[3].label.has_value());

  // Re-saving produces byte-identical files.
  TempDir again("roundtrip2");
  save_dataset(back, again.path());
  for (const char* f : {"meta.json", "data.f32", "labels.u8"})
    CHECK(ssagait::test::slurp(dir / f) == ssagait::test::slurp(again / f));

  // Payload is little-endian float32, row-major N x T x J x C.
  const auto bytes = ssagait::test::slurp(dir / "data.f32");
  CHECK(bytes.size() == 12u * 120 * 16 * 3 * 4);
  const std::size_t k = ((5 * 120 + 7) * 16 + 9) * 3 + 2;
  std::uint32_t w = 0;
  for (int b = 3; b >= 0; --b) w = (w << 8) | static_cast<unsigned char>(bytes[4 * k + b]);
  CHECK(std::bit_cast<float>(w) == ds.sequences[5].joint(7, 9)(2));
}

TEST_CASE("dataset without labels file loads as unlabeled") {
  TempDir dir("nolabels");
  auto ds = small_dataset(4);
  for (auto& s : ds.sequences) s.label.reset();
  save_dataset(ds, dir.path());
  CHECK_FALSE(std::filesystem::exists(dir / "labels.u8"));
  const auto back = load_dataset(dir.path());
  CHECK(back.size() == 4);
  for (const auto& s : back.sequences) CHECK_FALSE(s.label.has_value());
}

TEST_CASE("empty dataset is a valid container") {
  TempDir dir("empty");
  GaitDataset ds;
  save_dataset(ds, dir.path());
  CHECK(load_dataset(dir.path()).empty());
}

TEST_CASE("load errors are reported distinctly") {
  auto expect = [](const std::filesystem::path& p, DatasetErrc code) {
    try {
      load_dataset(p);
      FAIL("expected a dataset error");
    } catch (const DatasetError& e) {
      CHECK(e.code() == code);
    }
  };
  TempDir dir("errors");
  const auto ds = small_dataset(4);

  SUBCASE("missing files") { expect(dir / "absent", DatasetErrc::kMissingFile); }
  SUBCASE("metadata count disagrees with the payload") {
    save_dataset(ds, dir.path());
    auto bytes = ssagait::test::slurp(dir / "data.f32");
    bytes.resize(bytes.size() * 3 / 4);
    std::ofstream(dir / "data.f32", std::ios::binary | std::ios::trunc) << bytes;
    expect(dir.path(), DatasetErrc::kShapeMismatch);
  }
  SUBCASE("non-finite values") {
    auto bad = ds;
    bad.sequences[1].data(4, 4) = std::numeric_limits<float>::quiet_NaN();
    save_dataset(ds, dir.path());
    std::string bytes = ssagait::test::slurp(dir / "data.f32");
    const std::uint32_t nan = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    for (int b = 0; b < 4; ++b) bytes[4 * 100 + b] = static_cast<char>((nan >> (8 * b)) & 0xff);
    std::ofstream(dir / "data.f32", std::ios::binary | std::ios::trunc) << bytes;
    expect(dir.path(), DatasetErrc::kNonFinite);
  }
  SUBCASE("unknown schema version") {
    save_dataset(ds, dir.path());
    auto meta = ssagait::test::slurp(dir / "meta.json");
    meta.replace(meta.find("\"schema_version\": 1"), 19, "\"schema_version\": 7");
    std::ofstream(dir / "meta.json", std::ios::trunc) << meta;
    expect(dir.path(), DatasetErrc::kUnknownSchema);
  }
  SUBCASE("label out of range") {
    save_dataset(ds, dir.path());
    std::ofstream(dir / "labels.u8", std::ios::binary | std::ios::trunc) << std::string("\x00\x01\x09\x02", 4);
    expect(dir.path(), DatasetErrc::kBadLabel);
  }
}

TEST_CASE("split_dataset is a seeded 4:1 partition") {
  GaitDataset ds = small_dataset(100);
  // Tag each sample by a unique coordinate to recover identity after splitting.
  for (std::size_t i = 0; i < ds.size(); ++i) ds.sequences[i].data(0, 0) = static_cast<float>(i);
  auto [train, test] = split_dataset(ds, 0.8, 42);
  CHECK(train.size() == 80);
  CHECK(test.size() == 20);
  std::set<int> ids;
  for (const auto* part : {&train, &test})
    for (const auto& s : part->sequences) ids.insert(static_cast<int>(s.data(0, 0)));
  CHECK(ids.size() == 100);

  auto [train2, test2] = split_dataset(ds, 0.8, 42);
  CHECK(train2 == train);
  CHECK(test2 == test);

  const auto five = subset(ds, {0, 1, 2, 3, 4});
  auto [a, b] = split_dataset(five, 0.8, 1);
  CHECK(a.size() == 4);
  CHECK(b.size() == 1);
  std::set<int> small_ids;
  for (const auto* part : {&a, &b})
    for (const auto& s : part->sequences) small_ids.insert(static_cast<int>(s.data(0, 0)));
  CHECK(small_ids == std::set<int>{0, 1, 2, 3, 4});

  CHECK_THROWS(split_dataset(subset(ds, {0}), 0.8, 1));
}

TEST_CASE("select_labeled_fraction draws ceil(fraction * N) samples") {
  const auto ds400 = small_dataset(400);
  CHECK(select_labeled_fraction(ds400, 0.05, 1).size() == 20);
  CHECK(select_labeled_fraction(ds400, 1.0, 1).size() == 400);
  const auto ds403 = small_dataset(403);
  CHECK(select_labeled_fraction(ds403, 0.05, 1).size() == 21);
  CHECK(select_labeled_fraction(ds400, 0.1, 8) == select_labeled_fraction(ds400, 0.1, 8));

  const auto strat = select_labeled_fraction(ds400, 0.1, 3, true);
  std::vector<int> counts(kNumEmotions, 0);
  for (const auto& s : strat.sequences) ++counts[static_cast<int>(*s.label)];
  CHECK(counts == apportion(40, {220, 94, 58, 28}));
  CHECK_THROWS(select_labeled_fraction(GaitDataset{}, 0.5, 1));
}

TEST_CASE("resample_temporal interpolates linearly") {
  SkeletonSequence ramp(3, kCanonicalJoints);
  for (int t = 0; t < 3; ++t) ramp.joint(t, 0)(0) = static_cast<float>(t);
  const auto up = resample_temporal(ramp, 5);
  REQUIRE(up.frames() == 5);
  const float expected[] = {0.0f, 0.5f, 1.0f, 1.5f, 2.0f};
  for (int t = 0; t < 5; ++t) CHECK(up.joint(t, 0)(0) == doctest::Approx(expected[t]).epsilon(1e-12));

  const auto seq = ssagait::test::random_sequence(RngStream(4));
  CHECK(resample_temporal(seq, 120) == seq);

  SkeletonSequence constant(50, kCanonicalJoints);
  constant.data.setConstant(0.25f);
  CHECK((resample_temporal(constant, 77).data.array() == 0.25f).all());

  // Bounds of a linear signal survive resampling; endpoints are exact.
  const auto down = resample_temporal(seq, 37);
  CHECK(down.data.row(0) == seq.data.row(0));
  CHECK(down.data.row(36) == seq.data.row(119));
  for (Eigen::Index c = 0; c < seq.data.cols(); ++c) {
    CHECK(down.data.col(c).maxCoeff() <= seq.data.col(c).maxCoeff() + 1e-9);
    CHECK(down.data.col(c).minCoeff() >= seq.data.col(c).minCoeff() - 1e-9);
  }
  CHECK_THROWS(resample_temporal(seq, 1));
}
