#include "ssagait/skeleton.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ssagait {
namespace {

JointTopology make_canonical() {
  JointTopology topo;
  topo.joint_names = {"root",      "spine",     "neck",      "head",     "l_shoulder", "l_elbow",
                      "l_hand",    "r_shoulder", "r_elbow",  "r_hand",   "l_hip",      "l_knee",
                      "l_foot",    "r_hip",     "r_knee",    "r_foot"};
  topo.edges = {{0, 1},  {1, 2},   {2, 3},   {2, 4},   {4, 5},   {5, 6},   {2, 7},  {7, 8},
                {8, 9},  {0, 10},  {10, 11}, {11, 12}, {0, 13},  {13, 14}, {14, 15}};
  topo.parts = {std::vector<int>{0, 1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {10, 11, 12}, {13, 14, 15}};
  topo.upper_jitter_set = {4, 5, 6, 7, 8, 9};
  topo.mirror = {0, 1, 2, 3, 7, 8, 9, 4, 5, 6, 13, 14, 15, 10, 11, 12};
  topo.center = 1;
  return topo;
}

}  // namespace

const JointTopology& canonical_topology() {
  static const JointTopology topo = make_canonical();
  return topo;
}

const char* body_part_name(BodyPart p) {
  switch (p) {
    case BodyPart::kTorso: return "torso";
    case BodyPart::kLeftArm: return "left_arm";
    case BodyPart::kRightArm: return "right_arm";
    case BodyPart::kLeftLeg: return "left_leg";
    case BodyPart::kRightLeg: return "right_leg";
  }
  return "unknown";
}

void JointTopology::validate() const {
  const int n = num_joints();
  if (n != kCanonicalJoints) throw std::invalid_argument("topology must have 16 joints");
  if (static_cast<int>(edges.size()) != n - 1)
    throw std::invalid_argument("topology edges must form a tree (J-1 edges)");

  // Union-find over the edges: a tree on n nodes with n-1 edges has no cycle.
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("edge index out of range");
    const int ra = find(a), rb = find(b);
    if (ra == rb) throw std::invalid_argument("topology edges contain a cycle");
    root[ra] = rb;
  }

  std::vector<int> owner(n, -1);
  for (int p = 0; p < kNumBodyParts; ++p) {
    for (int j : parts[p]) {
      if (j < 0 || j >= n) throw std::invalid_argument("part joint out of range");
      if (owner[j] != -1) throw std::invalid_argument("body parts overlap");
      owner[j] = p;
    }
  }
  if (std::count(owner.begin(), owner.end(), -1) != 0)
    throw std::invalid_argument("body parts do not cover all joints");

  if (upper_jitter_set.size() != 6) throw std::invalid_argument("jitter set must hold 6 joints");
  for (int j : upper_jitter_set) {
    if (j < 0 || j >= n) throw std::invalid_argument("jitter joint out of range");
    const int p = owner[j];
    if (p != static_cast<int>(BodyPart::kLeftArm) && p != static_cast<int>(BodyPart::kRightArm))
      throw std::invalid_argument("jitter set must lie within the arms");
  }

  if (static_cast<int>(mirror.size()) != n) throw std::invalid_argument("mirror table size");
  for (int j = 0; j < n; ++j) {
    if (mirror[j] < 0 || mirror[j] >= n || mirror[mirror[j]] != j)
      throw std::invalid_argument("mirror table must be an involution");
  }
  for (int j : parts[static_cast<int>(BodyPart::kTorso)]) {
    if (mirror[j] != j) throw std::invalid_argument("torso joints must be self-paired");
  }
  if (center < 0 || center >= n) throw std::invalid_argument("center joint out of range");
}

bool GaitDataset::fully_labeled() const {
  return std::all_of(sequences.begin(), sequences.end(),
                     [](const SkeletonSequence& s) { return s.label.has_value(); });
}

void GaitDataset::validate() const {
  if (sequences.empty()) return;
  const auto rows = sequences.front().data.rows();
  const auto cols = sequences.front().data.cols();
  if (cols != static_cast<Eigen::Index>(topology.num_joints()) * kCoords)
    throw ShapeError("sequence width does not match topology");
  for (const auto& s : sequences) {
    if (s.data.rows() != rows || s.data.cols() != cols) throw ShapeError("inconsistent sequence shapes");
    if (!s.all_finite()) throw std::domain_error("non-finite coordinate");
    if (s.label && static_cast<int>(*s.label) >= kNumEmotions)
      throw std::out_of_range("label out of range");
  }
  if (!split_tags.empty() && split_tags.size() != sequences.size())
    throw ShapeError("split tag count differs from sequence count");
}

}  // namespace ssagait
