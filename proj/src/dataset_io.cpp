#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssagait/dataset.hpp"

namespace ssagait {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 floats required");

void write_f32_le(std::ostream& os, const float* values, std::size_t count) {
  std::vector<char> bytes(count * 4);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

float read_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError(DatasetErrc::kMissingFile, "missing file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DatasetError(DatasetErrc::kIo, "cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DatasetError(DatasetErrc::kIo, "short write to " + path.string());
}

}  // namespace

void save_dataset(const GaitDataset& ds, const fs::path& dir) {
  ds.validate();
  const int t = ds.empty() ? kCanonicalFrames : ds.sequences.front().frames();
  const int j = ds.topology.num_joints();

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw DatasetError(DatasetErrc::kIo, "cannot create directory " + dir.string());

  json meta;
  meta["schema_version"] = kDatasetSchemaVersion;
  meta["n"] = ds.size();
  meta["t"] = t;
  meta["j"] = j;
  meta["c"] = kCoords;
  meta["joint_names"] = ds.topology.joint_names;
  json labels = json::array();
  for (int e = 0; e < kNumEmotions; ++e) labels.push_back(emotion_name(static_cast<Emotion>(e)));
  meta["label_names"] = labels;
  meta["endianness"] = "little";
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::ostringstream data;
  for (const auto& s : ds.sequences) write_f32_le(data, s.data.data(), static_cast<std::size_t>(s.data.size()));
  write_file(dir / "data.f32", data.str());

  const bool any_label = std::any_of(ds.sequences.begin(), ds.sequences.end(),
                                     [](const SkeletonSequence& s) { return s.label.has_value(); });
  if (any_label) {
    std::string bytes;
    for (const auto& s : ds.sequences)
      bytes.push_back(static_cast<char>(s.label ? static_cast<std::uint8_t>(*s.label) : kUnlabeled));
    write_file(dir / "labels.u8", bytes);
  } else {
    fs::remove(dir / "labels.u8", ec);
  }
}

GaitDataset load_dataset(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_file(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw DatasetError(DatasetErrc::kUnknownSchema, std::string("malformed meta.json: ") + e.what());
  }

  std::size_t n = 0;
  int t = 0, j = 0, c = 0;
  std::vector<std::string> names;
  try {
    if (!meta.contains("schema_version") || meta.at("schema_version").get<int>() != kDatasetSchemaVersion)
      throw DatasetError(DatasetErrc::kUnknownSchema, "unsupported schema_version");
    if (meta.value("endianness", std::string{}) != "little")
      throw DatasetError(DatasetErrc::kUnknownSchema, "unsupported endianness tag");
    n = meta.at("n").get<std::size_t>();
    t = meta.at("t").get<int>();
    j = meta.at("j").get<int>();
    c = meta.at("c").get<int>();
    names = meta.at("joint_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DatasetError(DatasetErrc::kUnknownSchema, std::string("bad meta.json field: ") + e.what());
  }

  GaitDataset ds;
  if (c != kCoords || j != ds.topology.num_joints() || t < 1 ||
      names != ds.topology.joint_names)
    throw DatasetError(DatasetErrc::kShapeMismatch, "meta.json layout does not match the canonical skeleton");

  const std::string payload = read_file(dir / "data.f32");
  const std::size_t per_sample = static_cast<std::size_t>(t) * j * c;
  if (payload.size() != n * per_sample * 4)
    throw DatasetError(DatasetErrc::kShapeMismatch,
                       "data.f32 holds " + std::to_string(payload.size()) + " bytes, meta.json implies " +
                           std::to_string(n * per_sample * 4));

  std::string label_bytes;
  const bool has_labels = fs::exists(dir / "labels.u8");
  if (has_labels) {
    label_bytes = read_file(dir / "labels.u8");
    if (label_bytes.size() != n)
      throw DatasetError(DatasetErrc::kShapeMismatch, "labels.u8 length differs from n");
  }

  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  ds.sequences.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SkeletonSequence s(t, j);
    float* dst = s.data.data();
    for (std::size_t k = 0; k < per_sample; ++k) {
      dst[k] = read_f32_le(bytes + 4 * (i * per_sample + k));
      if (!std::isfinite(dst[k]))
        throw DatasetError(DatasetErrc::kNonFinite, "non-finite value in sample " + std::to_string(i));
    }
    if (has_labels) {
      const auto v = static_cast<std::uint8_t>(label_bytes[i]);
      if (v != kUnlabeled) {
        if (v >= kNumEmotions)
          throw DatasetError(DatasetErrc::kBadLabel, "label out of range in sample " + std::to_string(i));
        s.label = static_cast<Emotion>(v);
      }
    }
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

}  // namespace ssagait
