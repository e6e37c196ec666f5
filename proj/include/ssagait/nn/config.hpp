#pragma once

#include <stdexcept>
#include <vector>

namespace ssagait::nn {

/// Spatial-temporal graph convolution stack.
struct GraphBranchConfig {
  std::vector<int> channels{16, 16, 16, 32, 32, 32, 64, 64, 64};
  std::vector<int> temporal_strides{1, 1, 1, 2, 1, 1, 2, 1, 1};
  int temporal_kernel = 9;
  int spatial_kernel = 3;  // root / centripetal / centrifugal partitions
  bool input_norm = true;

  int out_dim() const { return channels.empty() ? 0 : channels.back(); }

  void validate() const {
    if (channels.empty() || channels.size() != temporal_strides.size())
      throw std::invalid_argument("graph branch: channel and stride plans must match");
    if (temporal_kernel < 1 || temporal_kernel % 2 == 0)
      throw std::invalid_argument("graph branch: temporal kernel must be odd");
    if (spatial_kernel != 3) throw std::invalid_argument("graph branch: spatial kernel is fixed at 3 partitions");
    for (int c : channels)
      if (c < 1) throw std::invalid_argument("graph branch: channels must be positive");
    for (int s : temporal_strides)
      if (s < 1) throw std::invalid_argument("graph branch: strides must be positive");
  }

  friend bool operator==(const GraphBranchConfig&, const GraphBranchConfig&) = default;
};

/// Convolution-stem tokenizer followed by adaptive frequency filter blocks.
struct ImageBranchConfig {
  int embed_dim = 64;
  int patch_frames = 4;
  int patch_joints = 2;
  int blocks = 2;
  int filter_hidden = 64;

  void validate() const {
    if (embed_dim < 1 || patch_frames < 1 || patch_joints < 1 || blocks < 1 || filter_hidden < 1)
      throw std::invalid_argument("image branch: sizes must be positive");
  }

  friend bool operator==(const ImageBranchConfig&, const ImageBranchConfig&) = default;
};

struct EncoderConfig {
  GraphBranchConfig graph;
  ImageBranchConfig image;
  int frames = 120;
  int joints = 16;
  int coords = 3;
  int projector_hidden = 128;
  int projection_dim = 128;
  double simam_lambda = 1e-4;

  int fused_dim() const { return graph.out_dim() + image.embed_dim; }

  void validate() const {
    graph.validate();
    image.validate();
    if (frames % image.patch_frames != 0 || joints % image.patch_joints != 0)
      throw std::invalid_argument("image branch: patch size must divide the T x J grid");
    if (projector_hidden < 1 || projection_dim < 1) throw std::invalid_argument("projector sizes must be positive");
    if (!(simam_lambda > 0.0)) throw std::invalid_argument("simam lambda must be positive");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

}  // namespace ssagait::nn
