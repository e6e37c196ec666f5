#pragma once

#include <exception>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ssagait/augment.hpp"
#include "ssagait/contrastive/config.hpp"
#include "ssagait/dataset.hpp"
#include "ssagait/eval/protocols.hpp"
#include "ssagait/nn/config.hpp"

// JSON forms of the configuration structs. Readers start from the struct's
// defaults, overwrite only the keys present, and reject unknown keys.

namespace ssagait {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void to_json(nlohmann::json& j, const GeneralAugmentSpec& s);
void from_json(const nlohmann::json& j, GeneralAugmentSpec& s);
void to_json(nlohmann::json& j, const StrongAugmentSpec& s);
void from_json(const nlohmann::json& j, StrongAugmentSpec& s);
void to_json(nlohmann::json& j, const SynthConfig& s);
void from_json(const nlohmann::json& j, SynthConfig& s);

namespace config_detail {

// Reads optional fields from a JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

/// Reads a JSON document from disk; failures raise ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace ssagait

namespace ssagait::nn {
void to_json(nlohmann::json& j, const GraphBranchConfig& c);
void from_json(const nlohmann::json& j, GraphBranchConfig& c);
void to_json(nlohmann::json& j, const ImageBranchConfig& c);
void from_json(const nlohmann::json& j, ImageBranchConfig& c);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
}  // namespace ssagait::nn

namespace ssagait::contrastive {
void to_json(nlohmann::json& j, const StepSchedule& s);
void from_json(const nlohmann::json& j, StepSchedule& s);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const StepReport& r);
}  // namespace ssagait::contrastive

namespace ssagait::eval {
void to_json(nlohmann::json& j, const ProtocolConfig& c);
void from_json(const nlohmann::json& j, ProtocolConfig& c);
}  // namespace ssagait::eval
