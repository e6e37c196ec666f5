#include "ssagait/config_io.hpp"

#include <fstream>
#include <string>

using nlohmann::json;

namespace ssagait {

using config_detail::Fields;

void to_json(json& j, const GeneralAugmentSpec& s) {
  j = json{{"shear", s.shear},
           {"spatial_flip", s.spatial_flip},
           {"rotate", s.rotate},
           {"crop", s.crop},
           {"temporal_flip", s.temporal_flip},
           {"shear_range", s.shear_range},
           {"flip_prob", s.flip_prob},
           {"rotate_main_deg", s.rotate_main_deg},
           {"rotate_other_deg", s.rotate_other_deg},
           {"crop_gamma", s.crop_gamma},
           {"temporal_flip_prob", s.temporal_flip_prob}};
}

void from_json(const json& j, GeneralAugmentSpec& s) {
  Fields f(j, "general_augment");
  f.get("shear", s.shear);
  f.get("spatial_flip", s.spatial_flip);
  f.get("rotate", s.rotate);
  f.get("crop", s.crop);
  f.get("temporal_flip", s.temporal_flip);
  f.get("shear_range", s.shear_range);
  f.get("flip_prob", s.flip_prob);
  f.get("rotate_main_deg", s.rotate_main_deg);
  f.get("rotate_other_deg", s.rotate_other_deg);
  f.get("crop_gamma", s.crop_gamma);
  f.get("temporal_flip_prob", s.temporal_flip_prob);
}

void to_json(json& j, const StrongAugmentSpec& s) {
  j = json{{"jitter", s.jitter},
           {"spatiotemporal_mask", s.spatiotemporal_mask},
           {"jitter_range", s.jitter_range},
           {"max_mask_parts", s.max_mask_parts},
           {"temporal_mask_ratio", s.temporal_mask_ratio}};
}

void from_json(const json& j, StrongAugmentSpec& s) {
  Fields f(j, "strong_augment");
  f.get("jitter", s.jitter);
  f.get("spatiotemporal_mask", s.spatiotemporal_mask);
  f.get("jitter_range", s.jitter_range);
  f.get("max_mask_parts", s.max_mask_parts);
  f.get("temporal_mask_ratio", s.temporal_mask_ratio);
}

void to_json(json& j, const SynthConfig& s) {
  j = json{{"n_samples", s.n_samples},       {"class_ratios", s.class_ratios},
           {"seed", s.seed},                 {"frames", s.frames},
           {"frame_rate", s.frame_rate},     {"sensor_noise", s.sensor_noise},
           {"heading_jitter", s.heading_jitter}};
}

void from_json(const json& j, SynthConfig& s) {
  Fields f(j, "synth");
  f.get("n_samples", s.n_samples);
  f.get("class_ratios", s.class_ratios);
  f.get("seed", s.seed);
  f.get("frames", s.frames);
  f.get("frame_rate", s.frame_rate);
  f.get("sensor_noise", s.sensor_noise);
  f.get("heading_jitter", s.heading_jitter);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file " + path.string() + ": " + e.what());
  }
}

}  // namespace ssagait

namespace ssagait::nn {

void to_json(json& j, const GraphBranchConfig& c) {
  j = json{{"channels", c.channels},
           {"temporal_strides", c.temporal_strides},
           {"temporal_kernel", c.temporal_kernel},
           {"spatial_kernel", c.spatial_kernel},
           {"input_norm", c.input_norm}};
}

void from_json(const json& j, GraphBranchConfig& c) {
  Fields f(j, "encoder.graph");
  f.get("channels", c.channels);
  f.get("temporal_strides", c.temporal_strides);
  f.get("temporal_kernel", c.temporal_kernel);
  f.get("spatial_kernel", c.spatial_kernel);
  f.get("input_norm", c.input_norm);
}

void to_json(json& j, const ImageBranchConfig& c) {
  j = json{{"embed_dim", c.embed_dim},
           {"patch_frames", c.patch_frames},
           {"patch_joints", c.patch_joints},
           {"blocks", c.blocks},
           {"filter_hidden", c.filter_hidden}};
}

void from_json(const json& j, ImageBranchConfig& c) {
  Fields f(j, "encoder.image");
  f.get("embed_dim", c.embed_dim);
  f.get("patch_frames", c.patch_frames);
  f.get("patch_joints", c.patch_joints);
  f.get("blocks", c.blocks);
  f.get("filter_hidden", c.filter_hidden);
}

void to_json(json& j, const EncoderConfig& c) {
  j = json{{"graph", c.graph},
           {"image", c.image},
           {"frames", c.frames},
           {"joints", c.joints},
           {"coords", c.coords},
           {"projector_hidden", c.projector_hidden},
           {"projection_dim", c.projection_dim},
           {"simam_lambda", c.simam_lambda}};
}

void from_json(const json& j, EncoderConfig& c) {
  Fields f(j, "encoder");
  f.get("graph", c.graph);
  f.get("image", c.image);
  f.get("frames", c.frames);
  f.get("joints", c.joints);
  f.get("coords", c.coords);
  f.get("projector_hidden", c.projector_hidden);
  f.get("projection_dim", c.projection_dim);
  f.get("simam_lambda", c.simam_lambda);
}

}  // namespace ssagait::nn

namespace ssagait::contrastive {

void to_json(json& j, const StepSchedule& s) {
  j = json{{"base", s.base}, {"milestones", s.milestones}, {"gamma", s.gamma}};
}

void from_json(const json& j, StepSchedule& s) {
  Fields f(j, "lr");
  f.get("base", s.base);
  f.get("milestones", s.milestones);
  f.get("gamma", s.gamma);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"tau", c.tau},
           {"key_momentum", c.key_momentum},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"sgd_momentum", c.sgd_momentum},
           {"weight_decay", c.weight_decay},
           {"epochs", c.epochs},
           {"lr", c.lr},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"drop_ratio", c.drop_ratio},
           {"bank_size", c.bank_size},
           {"strong_branch", c.strong_branch},
           {"workers", c.workers},
           {"general", c.general},
           {"strong", c.strong},
           {"encoder", c.encoder}};
}

void from_json(const json& j, TrainConfig& c) {
  Fields f(j, "train");
  f.get("tau", c.tau);
  f.get("key_momentum", c.key_momentum);
  f.get("alpha", c.alpha);
  f.get("beta", c.beta);
  f.get("sgd_momentum", c.sgd_momentum);
  f.get("weight_decay", c.weight_decay);
  f.get("epochs", c.epochs);
  f.get("lr", c.lr);
  f.get("batch_size", c.batch_size);
  f.get("seed", c.seed);
  f.get("drop_ratio", c.drop_ratio);
  f.get("bank_size", c.bank_size);
  f.get("strong_branch", c.strong_branch);
  f.get("workers", c.workers);
  f.get("general", c.general);
  f.get("strong", c.strong);
  f.get("encoder", c.encoder);
}

void to_json(json& j, const StepReport& r) {
  j = json{{"epoch", r.epoch}, {"step", r.step},   {"L_Info", r.l_info},       {"L_d1", r.l_d1},
           {"L_d2", r.l_d2},   {"L_d", r.l_d},     {"total", r.total},         {"bank_size", r.bank_size},
           {"lr", r.lr}};
}

}  // namespace ssagait::contrastive

namespace ssagait::eval {

void to_json(json& j, const ProtocolConfig& c) {
  j = json{{"protocol", protocol_name(c.protocol)},
           {"epochs", c.epochs},
           {"lr", c.lr},
           {"batch_size", c.batch_size},
           {"sgd_momentum", c.sgd_momentum},
           {"weight_decay", c.weight_decay},
           {"seed", c.seed},
           {"fraction", c.fraction},
           {"stratified", c.stratified},
           {"allow_any_fraction", c.allow_any_fraction},
           {"f1", c.f1_mode == F1Mode::kWeighted ? "weighted" : "unweighted-sum"}};
}

void from_json(const json& j, ProtocolConfig& c) {
  std::string name = protocol_name(c.protocol);
  {
    Fields probe(j, "protocol");
    probe.get("protocol", name);
    try {
      c = ProtocolConfig::defaults(parse_protocol(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("protocol: ") + e.what());
    }
    std::string f1 = "weighted";
    probe.get("epochs", c.epochs);
    probe.get("lr", c.lr);
    probe.get("batch_size", c.batch_size);
    probe.get("sgd_momentum", c.sgd_momentum);
    probe.get("weight_decay", c.weight_decay);
    probe.get("seed", c.seed);
    probe.get("fraction", c.fraction);
    probe.get("stratified", c.stratified);
    probe.get("allow_any_fraction", c.allow_any_fraction);
    probe.get("f1", f1);
    if (f1 == "weighted")
      c.f1_mode = F1Mode::kWeighted;
    else if (f1 == "unweighted-sum")
      c.f1_mode = F1Mode::kUnweightedSum;
    else
      throw ConfigError("protocol.f1: expected 'weighted' or 'unweighted-sum'");
  }
}

}  // namespace ssagait::eval
