#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssagait/contrastive/config.hpp"
#include "ssagait/dataset.hpp"
#include "ssagait/eval/protocols.hpp"

namespace ssagait::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,    // unknown flag or subcommand, malformed flag value
  kExitConfig = 3,   // invalid configuration values or config file
  kExitIo = 4,       // missing or unreadable dataset/checkpoint, unwritable output
  kExitRuntime = 5,  // failure while training or evaluating
};

/// Everything a run depends on. Serialized verbatim as `config.resolved`.
struct RunConfig {
  std::string command;  // e.g. "pretrain", "eval finetune"
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path out;
  std::uint64_t seed = 1;        // copied into every sub-config seed
  std::uint64_t split_seed = 0;  // train/test partition of the dataset
  double train_ratio = 0.8;
  int preview_index = 0;
  std::string preview_pipeline = "strong";  // "general" or "strong"
  SynthConfig synth;
  contrastive::TrainConfig train;
  eval::ProtocolConfig eval;

  /// Propagates the global seed, then checks every field and referenced path.
  void finalize();
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Runs one command line (args exclude the program name). Diagnostics go to
/// `err` as a single line; progress and summaries go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssagait::cli
