#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "ssagait/nn/config.hpp"
#include "ssagait/nn/graph_branch.hpp"
#include "ssagait/nn/image_branch.hpp"

namespace ssagait::nn {

/// Packs sequences into the encoder layout coords x (N*T*V).
template <typename Scalar, typename SeqPtrRange>
Matrix<Scalar> pack_batch(const SeqPtrRange& seqs) {
  const auto n = static_cast<Eigen::Index>(std::size(seqs));
  if (n == 0) throw ShapeError("pack_batch: empty batch");
  const auto& first = **std::begin(seqs);
  const Eigen::Index per = first.data.size() / kCoords;
  Matrix<Scalar> x(kCoords, per * n);
  Eigen::Index i = 0;
  for (const auto* s : seqs) {
    if (s->data.size() != first.data.size()) throw ShapeError("pack_batch: mixed sequence shapes");
    x.middleCols(i * per, per) =
        Eigen::Map<const Matrix<float>>(s->data.data(), kCoords, per).template cast<Scalar>();
    ++i;
  }
  return x;
}

/// Two-layer projector: linear -> ReLU -> linear -> L2 normalization.
template <typename Scalar>
class Projector {
 public:
  struct Tape {
    Matrix<Scalar> input;
    Matrix<Scalar> hidden;  // post-ReLU
    Matrix<Scalar> output;  // normalized
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> norms;
  };

  Projector() = default;
  Projector(int in, int hidden, int out, RngStream& rng) : fc1_(in, hidden, rng), fc2_(hidden, out, rng) {}

  /// Without `bypass_relu`, the hidden layer is rectified.
  Matrix<Scalar> forward(const Matrix<Scalar>& fused, Tape* tape, bool bypass_relu = false) const {
    Matrix<Scalar> hidden = fc1_.forward(fused);
    if (!bypass_relu) hidden = relu(hidden);
    Matrix<Scalar> y = fc2_.forward(hidden);
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> norms = y.colwise().norm().cwiseMax(Scalar(1e-12));
    Matrix<Scalar> z = y * norms.cwiseInverse().asDiagonal();
    if (tape) {
      tape->input = fused;
      tape->hidden = std::move(hidden);
      tape->output = z;
      tape->norms = norms;
    }
    return z;
  }

  /// Output before normalization (for probing homogeneity).
  Matrix<Scalar> unnormalized(const Matrix<Scalar>& fused, bool bypass_relu = false) const {
    Matrix<Scalar> hidden = fc1_.forward(fused);
    if (!bypass_relu) hidden = relu(hidden);
    return fc2_.forward(hidden);
  }

  Matrix<Scalar> backward(const Tape& tape, const Matrix<Scalar>& dz) {
    // d(y/|y|) = (dz - z (z . dz)) / |y|
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dots = tape.output.cwiseProduct(dz).colwise().sum();
    Matrix<Scalar> dy = dz - tape.output * dots.asDiagonal();
    dy = dy * tape.norms.cwiseInverse().asDiagonal();
    const Matrix<Scalar> dhidden = relu_backward(tape.hidden, fc2_.backward(tape.hidden, dy));
    return fc1_.backward(tape.input, dhidden);
  }

  Linear<Scalar>& first() { return fc1_; }
  Linear<Scalar>& second() { return fc2_; }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    fc1_.visit_params(prefix + "0.", f);
    fc2_.visit_params(prefix + "2.", f);
  }

 private:
  Linear<Scalar> fc1_, fc2_;
};

/// Parameter-free energy salience. For each row (channel) of `fmap`:
///   d = (x - mean)^2, v = sum(d) / max(n - 1, 1),
///   salience = sigmoid(d / (4 (v + lambda)) + 0.5).
template <typename Scalar>
Matrix<Scalar> simam_energy(const Matrix<Scalar>& fmap, double lambda = 1e-4) {
  const Eigen::Index n = fmap.cols();
  const Vector<Scalar> mean = fmap.rowwise().mean();
  const Matrix<Scalar> d = (fmap.colwise() - mean).array().square().matrix();
  const Vector<Scalar> v = d.rowwise().sum() / static_cast<Scalar>(std::max<Eigen::Index>(n - 1, 1));
  const Vector<Scalar> denom = Scalar(4) * (v.array() + static_cast<Scalar>(lambda));
  Matrix<Scalar> e = denom.cwiseInverse().asDiagonal() * d;
  e.array() += Scalar(0.5);
  return (Scalar(1) / (Scalar(1) + (-e.array()).exp())).matrix();
}

template <typename Scalar>
struct SimamDrop {
  Matrix<Scalar> dropped;
  Matrix<Scalar> keep;  // 1 where kept, 0 where zeroed
};

/// Zeroes the floor(ratio * D) most salient activations of each column,
/// salience taken over the column's D entries as one channel. Ties break
/// toward the lower index.
template <typename Scalar>
SimamDrop<Scalar> simam_drop(const Matrix<Scalar>& fused, double ratio, double lambda = 1e-4) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("simam drop ratio must lie in [0,1)");
  const Eigen::Index d = fused.rows();
  const auto k = static_cast<Eigen::Index>(std::floor(ratio * static_cast<double>(d)));
  SimamDrop<Scalar> out{fused, Matrix<Scalar>::Ones(fused.rows(), fused.cols())};
  if (k == 0) return out;
  std::vector<Eigen::Index> order(d);
  for (Eigen::Index n = 0; n < fused.cols(); ++n) {
    const Matrix<Scalar> sal = simam_energy<Scalar>(fused.col(n).transpose(), lambda);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return sal(0, a) > sal(0, b) || (sal(0, a) == sal(0, b) && a < b);
    });
    for (Eigen::Index i = 0; i < k; ++i) {
      out.dropped(order[i], n) = Scalar(0);
      out.keep(order[i], n) = Scalar(0);
    }
  }
  return out;
}

/// Complementary feature fusion network: graph-domain and frequency-domain
/// branches over the same input, concatenated into one fused feature, plus
/// the projector head.
template <typename Scalar>
class Cffn {
 public:
  struct Tape {
    int batch = 0;
    typename GraphBranch<Scalar>::Tape graph;
    typename ImageBranch<Scalar>::Tape image;
  };

  Cffn() = default;
  Cffn(const EncoderConfig& cfg, const JointTopology& topo, RngStream rng) : cfg_(cfg) {
    cfg.validate();
    if (topo.num_joints() != cfg.joints) throw std::invalid_argument("encoder: topology joint count mismatch");
    RngStream g = rng.split(0), i = rng.split(1), p = rng.split(2);
    graph_ = GraphBranch<Scalar>(cfg.graph, topo, cfg.coords, g);
    image_ = ImageBranch<Scalar>(cfg.image, cfg.frames, cfg.joints, cfg.coords, i);
    projector_ = Projector<Scalar>(cfg.fused_dim(), cfg.projector_hidden, cfg.projection_dim, p);
  }

  const EncoderConfig& config() const { return cfg_; }
  GraphBranch<Scalar>& graph() { return graph_; }
  ImageBranch<Scalar>& image() { return image_; }
  Projector<Scalar>& projector() { return projector_; }
  const Projector<Scalar>& projector() const { return projector_; }

  /// x: coords x (N*T*V). Returns the fused (graph ++ image) features, one column per sample.
  Matrix<Scalar> encode(const Matrix<Scalar>& x, int batch, Mode mode, Tape* tape) {
    if (tape) tape->batch = batch;
    const Matrix<Scalar> g = graph_.forward(x, batch, mode, tape ? &tape->graph : nullptr);
    const Matrix<Scalar> im = image_.forward(x, batch, mode, tape ? &tape->image : nullptr);
    Matrix<Scalar> fused(g.rows() + im.rows(), batch);
    fused << g, im;
    return fused;
  }

  void encode_backward(const Tape& tape, const Matrix<Scalar>& dfused) {
    const Eigen::Index g = graph_.out_dim();
    graph_.backward(tape.graph, dfused.topRows(g));
    image_.backward(tape.image, dfused.bottomRows(dfused.rows() - g));
  }

  Matrix<Scalar> project(const Matrix<Scalar>& fused, typename Projector<Scalar>::Tape* tape) const {
    return projector_.forward(fused, tape);
  }

  Matrix<Scalar> project_backward(const typename Projector<Scalar>::Tape& tape, const Matrix<Scalar>& dz) {
    return projector_.backward(tape, dz);
  }

  /// f(name, Parameter&) over every learnable tensor, in a stable order.
  template <typename F>
  void visit_params(F&& f) {
    graph_.visit_params("graph.", f);
    image_.visit_params("image.", f);
    projector_.visit_params("projector.", f);
  }

  /// f(name, Matrix&) over normalization running statistics.
  template <typename F>
  void visit_buffers(F&& f) {
    graph_.visit_buffers("graph.", f);
    image_.visit_buffers("image.", f);
  }

  void zero_grad() {
    visit_params([](const std::string&, Parameter<Scalar>& p) { p.zero_grad(); });
  }

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    visit_params([&](const std::string&, Parameter<Scalar>& p) { out.push_back(&p); });
    return out;
  }

  std::vector<Matrix<Scalar>*> buffers() {
    std::vector<Matrix<Scalar>*> out;
    visit_buffers([&](const std::string&, Matrix<Scalar>& b) { out.push_back(&b); });
    return out;
  }

 private:
  EncoderConfig cfg_;
  GraphBranch<Scalar> graph_;
  ImageBranch<Scalar> image_;
  Projector<Scalar> projector_;
};

}  // namespace ssagait::nn
