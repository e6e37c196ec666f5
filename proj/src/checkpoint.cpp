#include "ssagait/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

namespace ssagait {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CheckpointError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "ssagait-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["dtype"] = "f32";
  manifest["endianness"] = "little";
  manifest["config"] = ckpt.config;
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream data(dir / "tensors.f32", std::ios::binary | std::ios::trunc);
  if (!data) throw CheckpointError("cannot write " + (dir / "tensors.f32").string());
  std::set<std::string> names;
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (!names.insert(t.name).second) throw CheckpointError("duplicate tensor name '" + t.name + "'");
    manifest["tensors"].push_back(
        {{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", offset}});
    std::vector<std::uint32_t> words(static_cast<std::size_t>(t.value.size()));
    for (std::size_t i = 0; i < words.size(); ++i) words[i] = to_little(std::bit_cast<std::uint32_t>(t.value.data()[i]));
    data.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    offset += words.size() * 4;
  }
  data.close();
  if (!data) throw CheckpointError("failed writing " + (dir / "tensors.f32").string());

  std::ofstream meta(dir / "manifest.json", std::ios::trunc);
  meta << manifest.dump(2) << "\n";
  meta.close();
  if (!meta) throw CheckpointError("failed writing " + (dir / "manifest.json").string());
}

Checkpoint load_checkpoint(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const fs::path data_path = dir / "tensors.f32";
  if (!fs::exists(manifest_path)) throw CheckpointError("missing " + manifest_path.string());
  if (!fs::exists(data_path)) throw CheckpointError("missing " + data_path.string());

  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format") != "ssagait-checkpoint" || manifest.at("version") != kCheckpointVersion ||
        manifest.at("dtype") != "f32" || manifest.at("endianness") != "little")
      throw CheckpointError("unsupported checkpoint format in " + manifest_path.string());

    std::ifstream data(data_path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(data)), std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    ckpt.config = manifest.value("config", nlohmann::json::object());
    std::uint64_t expected = 0;
    for (const auto& entry : manifest.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
      const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      if (rows < 0 || cols < 0 || offset != expected) throw CheckpointError("inconsistent tensor layout for " + t.name);
      const auto count = static_cast<std::uint64_t>(rows * cols);
      if (offset + count * 4 > bytes.size()) throw CheckpointError("tensor data truncated at " + t.name);
      t.value.resize(rows, cols);
      for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t w;
        std::memcpy(&w, bytes.data() + offset + i * 4, 4);
        t.value.data()[i] = std::bit_cast<float>(to_little(w));
      }
      expected = offset + count * 4;
      ckpt.tensors.push_back(std::move(t));
    }
    if (expected != bytes.size()) throw CheckpointError("tensor file size disagrees with the manifest");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace ssagait
