#include "ssagait/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ssagait/augment.hpp"
#include "ssagait/checkpoint.hpp"
#include "ssagait/config_io.hpp"
#include "ssagait/contrastive/trainer.hpp"
#include "ssagait/eval/lda.hpp"
#include "ssagait/runtime.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ssagait::cli {

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values given on the command line; unset ones leave the config untouched.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> checkpoint;
  std::optional<int> n;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<int> bank_size;
  std::optional<double> lr;
  std::optional<int> workers;
  std::optional<int> index;
  std::optional<std::string> pipeline;
  std::optional<double> fraction;
  bool baseline = false;
  bool short_schedule = false;
  bool any_fraction = false;
  bool stratified = false;
};

template <typename T>
void override_with(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  o << text;
  if (!o) throw IoError("cannot write " + path.string());
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_resolved(const RunConfig& cfg) {
  json j = cfg;
  write_text(cfg.out / "config.resolved", j.dump(2) + "\n");
}

// Sequences resampled to the encoder's frame count when the dataset differs.
GaitDataset conform(GaitDataset ds, int frames) {
  for (auto& s : ds.sequences)
    if (s.frames() != frames) s = resample_temporal(s, frames);
  return ds;
}

std::pair<GaitDataset, GaitDataset> load_split(const RunConfig& cfg) {
  GaitDataset ds = conform(load_dataset(cfg.data), cfg.train.encoder.frames);
  return split_dataset(ds, cfg.train_ratio, cfg.split_seed);
}

// Encoder from the checkpoint when one is given, freshly initialized otherwise.
nn::Cffn<float> make_encoder(RunConfig& cfg, const JointTopology& topo) {
  if (cfg.checkpoint.empty()) return nn::Cffn<float>(cfg.train.encoder, topo, RngStream(cfg.seed).split(0));
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  nn::EncoderConfig enc_cfg;
  try {
    enc_cfg = ckpt.config.at("encoder").get<nn::EncoderConfig>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest lacks an encoder config: ") + e.what());
  }
  cfg.train.encoder = enc_cfg;
  nn::Cffn<float> enc(enc_cfg, topo, RngStream(cfg.seed).split(0));
  import_tensors(enc, ckpt.tensors);
  return enc;
}

void save_encoder(nn::Cffn<float>& enc, const RunConfig& cfg, const fs::path& dir) {
  Checkpoint ckpt;
  ckpt.config = json{{"encoder", enc.config()}, {"command", cfg.command}, {"seed", cfg.seed}};
  ckpt.tensors = export_tensors(enc);
  save_checkpoint(ckpt, dir);
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const GaitDataset ds = generate_synthetic(cfg.synth);
  prepare_out_dir(cfg.out);
  save_dataset(ds, cfg.out);
  write_resolved(cfg);
  out << "wrote " << ds.size() << " sequences to " << cfg.out.string() << "\n";
  return kExitOk;
}

int cmd_preview(const RunConfig& cfg, std::ostream& out) {
  const GaitDataset ds = load_dataset(cfg.data);
  if (cfg.preview_index < 0 || static_cast<std::size_t>(cfg.preview_index) >= ds.size())
    throw ConfigError("--index " + std::to_string(cfg.preview_index) + " is outside the dataset of " +
                      std::to_string(ds.size()) + " sequences");
  const auto& src = ds.sequences[static_cast<std::size_t>(cfg.preview_index)];
  const RngStream rng = RngStream(cfg.seed).split(3);
  GaitDataset view;
  view.topology = ds.topology;
  view.sequences.push_back(cfg.preview_pipeline == "general"
                               ? apply_general(src, ds.topology, cfg.train.general, rng)
                               : apply_strong(src, ds.topology, cfg.train.general, cfg.train.strong, rng));
  view.sequences[0].label = src.label;
  prepare_out_dir(cfg.out);
  save_dataset(view, cfg.out);
  write_resolved(cfg);
  out << "wrote " << cfg.preview_pipeline << " view of sequence " << cfg.preview_index << " to "
      << cfg.out.string() << "\n";
  return kExitOk;
}

int cmd_pretrain(const RunConfig& cfg, std::ostream& out) {
  const auto [train, test] = load_split(cfg);
  prepare_out_dir(cfg.out);
  write_resolved(cfg);
  std::ofstream log(cfg.out / "train.log");
  if (!log) throw IoError("cannot write " + (cfg.out / "train.log").string());

  std::vector<const SkeletonSequence*> ptrs;
  for (const auto& s : train.sequences) ptrs.push_back(&s);
  int last_epoch = -1;
  auto trainer = contrastive::pretrain_run<float>(ptrs, train.topology, cfg.train, [&](const contrastive::StepReport& r) {
    log << json(r).dump() << "\n";
    if (r.epoch != last_epoch) {
      last_epoch = r.epoch;
      log.flush();
    }
  });
  if (!log.flush()) throw IoError("cannot write " + (cfg.out / "train.log").string());
  save_encoder(trainer->query(), cfg, cfg.out / "checkpoint");
  out << "pretrained " << cfg.train.epochs << " epochs on " << train.size() << " sequences; checkpoint in "
      << (cfg.out / "checkpoint").string() << "\n";
  return kExitOk;
}

int cmd_eval(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  nn::Cffn<float> enc = make_encoder(cfg, canonical_topology());
  const auto [train, test] = load_split(cfg);
  prepare_out_dir(cfg.out);
  write_resolved(cfg);
  const eval::EvalResult r = eval::run_protocol(enc, train, test, cfg.eval);
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";

  std::string text = std::string("protocol ") + eval::protocol_name(cfg.eval.protocol) + "\n";
  if (cfg.eval.protocol == eval::Protocol::kSemi) text += "fraction " + json(cfg.eval.fraction).dump() + "\n";
  text += "train " + std::to_string(train.size()) + "\ntest " + std::to_string(test.size()) + "\n";
  text += eval::to_text(r.report);
  write_text(cfg.out / "metrics.txt", text);
  if (cfg.eval.protocol != eval::Protocol::kLinear) save_encoder(enc, cfg, cfg.out / "checkpoint");
  out << text;
  return kExitOk;
}

int cmd_project(RunConfig& cfg, std::ostream& out) {
  nn::Cffn<float> enc = make_encoder(cfg, canonical_topology());
  const auto [train, test] = load_split(cfg);
  const Eigen::MatrixXd features = eval::extract_features(enc, test).cast<double>();
  const auto lda = eval::lda_projection(features, eval::class_labels(test), 2);
  prepare_out_dir(cfg.out);
  write_resolved(cfg);
  eval::write_points_tsv(lda, cfg.out / "embedding_points.tsv");
  out << "projected " << test.size() << " test sequences to " << (cfg.out / "embedding_points.tsv").string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON run configuration (e.g. a previous config.resolved)");
  app->add_option("--seed", f.seed, "Global seed for every random stream");
  app->add_option("--out", f.out, "Output directory");
}

void add_data(CLI::App* app, Flags& f) {
  app->add_option("--data", f.data, "Dataset directory");
  app->add_option("--split-seed", f.split_seed, "Seed of the train/test partition");
}

}  // namespace

void RunConfig::finalize() {
  synth.seed = seed;
  train.seed = seed;
  eval.seed = seed;
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must lie in (0,1)");
  if (preview_pipeline != "general" && preview_pipeline != "strong")
    throw ConfigError("preview pipeline must be 'general' or 'strong'");
  synth.validate();
  train.validate();
  eval.validate();
  if (command != "synth") {
    if (data.empty()) throw ConfigError("no dataset given (--data)");
    if (!fs::is_directory(data))
      throw DatasetError(DatasetErrc::kMissingFile, "dataset directory " + data.string() + " does not exist");
  }
  if (!checkpoint.empty() && !fs::is_directory(checkpoint))
    throw CheckpointError("checkpoint directory " + checkpoint.string() + " does not exist");
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"command", c.command},
           {"data", c.data.string()},
           {"checkpoint", c.checkpoint.string()},
           {"out", c.out.string()},
           {"seed", c.seed},
           {"split_seed", c.split_seed},
           {"train_ratio", c.train_ratio},
           {"preview_index", c.preview_index},
           {"preview_pipeline", c.preview_pipeline},
           {"synth", c.synth},
           {"train", c.train},
           {"eval", c.eval}};
}

void from_json(const json& j, RunConfig& c) {
  config_detail::Fields f(j, "run");
  std::string data = c.data.string(), checkpoint = c.checkpoint.string(), out = c.out.string();
  f.get("command", c.command);
  f.get("data", data);
  f.get("checkpoint", checkpoint);
  f.get("out", out);
  f.get("seed", c.seed);
  f.get("split_seed", c.split_seed);
  f.get("train_ratio", c.train_ratio);
  f.get("preview_index", c.preview_index);
  f.get("preview_pipeline", c.preview_pipeline);
  f.get("synth", c.synth);
  f.get("train", c.train);
  f.get("eval", c.eval);
  c.data = data;
  c.checkpoint = checkpoint;
  c.out = out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised gait emotion representation learning", "ssagait"};
  app.require_subcommand(1, 1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled gait dataset");
  add_common(synth, f);
  synth->add_option("--n", f.n, "Number of sequences");

  auto* preview = app.add_subcommand("augment-preview", "Write one augmented sequence as a dataset");
  add_common(preview, f);
  preview->add_option("--data", f.data, "Dataset directory");
  preview->add_option("--index", f.index, "Sequence index");
  preview->add_option("--pipeline", f.pipeline, "general or strong");

  auto* pretrain = app.add_subcommand("pretrain", "Contrastive pretraining on the training split");
  add_common(pretrain, f);
  add_data(pretrain, f);
  pretrain->add_option("--epochs", f.epochs, "Pretraining epochs");
  pretrain->add_option("--batch-size", f.batch_size, "Minibatch size");
  pretrain->add_option("--bank-size", f.bank_size, "Memory bank capacity");
  pretrain->add_option("--lr", f.lr, "Base learning rate");
  pretrain->add_option("--workers", f.workers, "Augmentation worker threads");
  pretrain->add_flag("--baseline", f.baseline, "General augmentation and InfoNCE only");

  auto* ev = app.add_subcommand("eval", "Evaluate an encoder");
  ev->require_subcommand(1, 1);
  std::vector<CLI::App*> eval_cmds;
  for (const char* name : {"linear", "finetune", "semi"}) {
    auto* sub = ev->add_subcommand(name, std::string(name) + " evaluation protocol");
    add_common(sub, f);
    add_data(sub, f);
    sub->add_option("--checkpoint", f.checkpoint, "Checkpoint directory (random init when omitted)");
    sub->add_option("--epochs", f.epochs, "Training epochs");
    sub->add_option("--batch-size", f.batch_size, "Minibatch size");
    sub->add_option("--lr", f.lr, "Base learning rate");
    sub->add_flag("--short", f.short_schedule, "20-epoch schedule (lr 1e-3, x0.1 at epoch 10)");
    eval_cmds.push_back(sub);
  }
  eval_cmds[2]->add_option("--fraction", f.fraction, "Labeled share: 0.05, 0.1, 0.2 or 0.5");
  eval_cmds[2]->add_flag("--any-fraction", f.any_fraction, "Accept any fraction in (0,1]");
  eval_cmds[2]->add_flag("--stratified", f.stratified, "Draw the labeled subset per class");

  auto* project = app.add_subcommand("project", "2-D discriminant projection of test-split embeddings");
  add_common(project, f);
  add_data(project, f);
  project->add_option("--checkpoint", f.checkpoint, "Checkpoint directory");

  std::vector<std::string> argv_store{"ssagait"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ssagait: usage error: " << e.what() << " (see --help)\n";
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    std::string command;
    std::optional<eval::Protocol> protocol;
    if (synth->parsed()) command = "synth";
    if (preview->parsed()) command = "augment-preview";
    if (pretrain->parsed()) command = "pretrain";
    if (project->parsed()) command = "project";
    for (std::size_t k = 0; k < eval_cmds.size(); ++k)
      if (eval_cmds[k]->parsed()) {
        command = "eval " + eval_cmds[k]->get_name();
        protocol = k == 0 ? eval::Protocol::kLinear : k == 1 ? eval::Protocol::kFinetune : eval::Protocol::kSemi;
        if (k == 1 && f.short_schedule) protocol = eval::Protocol::kFinetuneShort;
      }
    if (protocol) cfg.eval = eval::ProtocolConfig::defaults(*protocol);

    if (f.config) {
      from_json(read_json_file(*f.config), cfg);
      if (protocol && cfg.eval.protocol != *protocol) {
        out << "note: config file describes protocol " << eval::protocol_name(cfg.eval.protocol)
            << "; using " << eval::protocol_name(*protocol) << " defaults\n";
        cfg.eval = eval::ProtocolConfig::defaults(*protocol);
      }
    }
    cfg.command = command;

    if (auto w = env("SSAGAIT_WORKERS")) {
      try {
        cfg.train.workers = std::stoi(*w);
      } catch (const std::exception&) {
        throw ConfigError("SSAGAIT_WORKERS must be an integer");
      }
    }
    if (cfg.out.empty() || f.out) {
      std::string name = command;
      std::replace(name.begin(), name.end(), ' ', '-');
      cfg.out = f.out ? fs::path(*f.out) : fs::path(env("SSAGAIT_OUT_ROOT").value_or("runs")) / name;
    }
    override_with(f.seed, cfg.seed);
    override_with(f.split_seed, cfg.split_seed);
    if (f.data) cfg.data = *f.data;
    if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
    override_with(f.n, cfg.synth.n_samples);
    override_with(f.index, cfg.preview_index);
    override_with(f.pipeline, cfg.preview_pipeline);
    override_with(f.workers, cfg.train.workers);
    if (command == "pretrain") {
      if (f.epochs) {
        cfg.train.epochs = *f.epochs;
        cfg.train.lr.milestones = {*f.epochs * 4 / 5};
      }
      override_with(f.batch_size, cfg.train.batch_size);
      override_with(f.bank_size, cfg.train.bank_size);
      if (f.lr) cfg.train.lr.base = *f.lr;
      if (f.baseline) cfg.train.strong_branch = false;
    }
    if (protocol) {
      if (f.short_schedule && *protocol != eval::Protocol::kFinetuneShort) {
        cfg.eval.epochs = 20;
        cfg.eval.lr = {1e-3, {10}, 0.1};
      }
      if (f.epochs) {
        cfg.eval.epochs = *f.epochs;
        cfg.eval.lr.milestones = {*f.epochs / 2};
      }
      override_with(f.batch_size, cfg.eval.batch_size);
      if (f.lr) cfg.eval.lr.base = *f.lr;
      override_with(f.fraction, cfg.eval.fraction);
      if (f.any_fraction) cfg.eval.allow_any_fraction = true;
      if (f.stratified) cfg.eval.stratified = true;
    }
    cfg.finalize();
    configure_runtime();

    if (command == "synth") return cmd_synth(cfg, out);
    if (command == "augment-preview") return cmd_preview(cfg, out);
    if (command == "pretrain") return cmd_pretrain(cfg, out);
    if (command == "project") return cmd_project(cfg, out);
    return cmd_eval(cfg, out, err);
  } catch (const DatasetError& e) {
    err << "ssagait: data error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CheckpointError& e) {
    err << "ssagait: checkpoint error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "ssagait: io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "ssagait: io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "ssagait: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "ssagait: runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace ssagait::cli
