#pragma once

#include <array>
#include <queue>
#include <vector>

#include "ssagait/nn/config.hpp"
#include "ssagait/nn/layers.hpp"
#include "ssagait/skeleton.hpp"

namespace ssagait::nn {

/// D^{-1/2} (A + I) D^{-1/2} over the skeleton tree.
inline Eigen::MatrixXd normalized_adjacency(const JointTopology& topo) {
  const int v = topo.num_joints();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(v, v);
  for (auto [p, c] : topo.edges) a(p, c) = a(c, p) = 1.0;
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().array().rsqrt();
  return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

inline std::vector<int> hop_distance(const JointTopology& topo, int from) {
  const int v = topo.num_joints();
  std::vector<std::vector<int>> nbr(v);
  for (auto [p, c] : topo.edges) {
    nbr[p].push_back(c);
    nbr[c].push_back(p);
  }
  std::vector<int> dist(v, -1);
  std::queue<int> q;
  dist[from] = 0;
  q.push(from);
  while (!q.empty()) {
    const int x = q.front();
    q.pop();
    for (int y : nbr[x])
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        q.push(y);
      }
  }
  return dist;
}

/// Spatial-configuration partitions of the normalized adjacency. Entry
/// (v, w) of partition k weights input joint v for output joint w:
/// k = 0 root (same hop distance to the center as w), k = 1 centripetal
/// (v closer to the center), k = 2 centrifugal (v farther). The three
/// partitions sum to normalized_adjacency(topo).
inline std::array<Eigen::MatrixXd, 3> spatial_partitions(const JointTopology& topo) {
  const Eigen::MatrixXd a = normalized_adjacency(topo);
  const auto hop = hop_distance(topo, topo.center);
  const int v = topo.num_joints();
  std::array<Eigen::MatrixXd, 3> parts;
  for (auto& p : parts) p = Eigen::MatrixXd::Zero(v, v);
  for (int i = 0; i < v; ++i)
    for (int w = 0; w < v; ++w) {
      if (a(i, w) == 0.0) continue;
      const int k = hop[i] == hop[w] ? 0 : hop[i] < hop[w] ? 1 : 2;
      parts[k](i, w) = a(i, w);
    }
  return parts;
}

/// Nine-unit ST-GCN style stack: input batch norm, per unit spatial graph
/// convolution -> BN -> ReLU -> temporal convolution -> BN, residual add,
/// ReLU; global mean pooling over time and joints.
///
/// Activations are (channels x N*T*V) with joint fastest, then frame, then sample.
template <typename Scalar>
class GraphBranch {
 public:
  enum class Residual { kNone, kIdentity, kProjection };

  struct Unit {
    int in = 0, out = 0, stride = 1;
    Linear<Scalar> gcn;    // out x 3*in over the stacked partition aggregates
    BatchNorm<Scalar> bn1;
    Linear<Scalar> tcn;    // out x K*out over im2col rows (tap-major)
    BatchNorm<Scalar> bn2;
    Residual residual = Residual::kNone;
    Linear<Scalar> res_conv;
    BatchNorm<Scalar> res_bn;
  };

  struct UnitTape {
    int frames_in = 0, frames_out = 0;
    Matrix<Scalar> agg;
    typename BatchNorm<Scalar>::Tape bn1;
    Matrix<Scalar> act;  // ReLU(BN(gcn)), input of the temporal convolution
    typename BatchNorm<Scalar>::Tape bn2;
    Matrix<Scalar> res_in;
    typename BatchNorm<Scalar>::Tape res_bn;
    Matrix<Scalar> out;
  };

  struct Tape {
    int batch = 0;
    typename BatchNorm<Scalar>::Tape input_bn;
    std::vector<UnitTape> units;
  };

  GraphBranch() = default;
  GraphBranch(const GraphBranchConfig& cfg, const JointTopology& topo, int coords, RngStream& rng)
      : cfg_(cfg), joints_(topo.num_joints()), coords_(coords) {
    cfg.validate();
    const auto parts = spatial_partitions(topo);
    for (int k = 0; k < 3; ++k)
      for (int v = 0; v < joints_; ++v)
        for (int w = 0; w < joints_; ++w)
          if (parts[k](v, w) != 0.0) edges_.push_back({k, v, w, static_cast<Scalar>(parts[k](v, w))});

    if (cfg.input_norm) input_bn_ = BatchNorm<Scalar>(coords * joints_);
    int in = coords;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
      Unit u;
      u.in = in;
      u.out = cfg.channels[i];
      u.stride = cfg.temporal_strides[i];
      u.gcn = Linear<Scalar>(3 * u.in, u.out, rng);
      u.bn1 = BatchNorm<Scalar>(u.out);
      u.tcn = Linear<Scalar>(cfg.temporal_kernel * u.out, u.out, rng);
      u.bn2 = BatchNorm<Scalar>(u.out);
      if (i == 0) {
        u.residual = Residual::kNone;
      } else if (u.in == u.out && u.stride == 1) {
        u.residual = Residual::kIdentity;
      } else {
        u.residual = Residual::kProjection;
        u.res_conv = Linear<Scalar>(u.in, u.out, rng);
        u.res_bn = BatchNorm<Scalar>(u.out);
      }
      units_.push_back(std::move(u));
      in = cfg.channels[i];
    }
  }

  const GraphBranchConfig& config() const { return cfg_; }
  int out_dim() const { return cfg_.out_dim(); }

  /// x: coords x (N*T*V). Returns out_dim x N pooled features.
  Matrix<Scalar> forward(const Matrix<Scalar>& x, int batch, Mode mode, Tape* tape) {
    check_input(x, batch);
    const int frames = static_cast<int>(x.cols() / (static_cast<Eigen::Index>(batch) * joints_));
    if (tape) {
      tape->batch = batch;
      tape->units.assign(units_.size(), UnitTape{});
    }

    Matrix<Scalar> h;
    if (cfg_.input_norm) {
      // Per (joint, coordinate) channel: view the activation as (C*V) x (N*T).
      Matrix<Scalar> view = Eigen::Map<const Matrix<Scalar>>(x.data(), coords_ * joints_, x.cols() / joints_);
      Matrix<Scalar> y = input_bn_.forward(view, mode, tape ? &tape->input_bn : nullptr);
      h = Eigen::Map<const Matrix<Scalar>>(y.data(), coords_, x.cols());
    } else {
      h = x;
    }

    int t = frames;
    for (std::size_t i = 0; i < units_.size(); ++i) {
      UnitTape local;
      UnitTape& ut = tape ? tape->units[i] : local;
      h = unit_forward(units_[i], h, batch, t, mode, ut);
      t = ut.frames_out;
    }

    const Eigen::Index per = static_cast<Eigen::Index>(t) * joints_;
    Matrix<Scalar> pooled(h.rows(), batch);
    for (int n = 0; n < batch; ++n) pooled.col(n) = row_sums(h.middleCols(n * per, per)) / static_cast<Scalar>(per);
    return pooled;
  }

  /// Accumulates parameter gradients; returns dL/dx for the raw input.
  Matrix<Scalar> backward(const Tape& tape, const Matrix<Scalar>& dfeat) {
    const int batch = tape.batch;
    const UnitTape& last = tape.units.back();
    const Eigen::Index per = static_cast<Eigen::Index>(last.frames_out) * joints_;
    Matrix<Scalar> d(dfeat.rows(), per * batch);
    for (int n = 0; n < batch; ++n)
      d.middleCols(n * per, per) = (dfeat.col(n) / static_cast<Scalar>(per)).replicate(1, per);

    for (std::size_t i = units_.size(); i-- > 0;) d = unit_backward(units_[i], tape.units[i], d, batch);

    if (!cfg_.input_norm) return d;
    Matrix<Scalar> view = Eigen::Map<const Matrix<Scalar>>(d.data(), coords_ * joints_, d.cols() / joints_);
    Matrix<Scalar> dx = input_bn_.backward(tape.input_bn, view);
    return Eigen::Map<const Matrix<Scalar>>(dx.data(), coords_, d.cols());
  }

  /// Temporal length after each unit for an input of `frames` frames.
  std::vector<int> temporal_lengths(int frames) const {
    std::vector<int> out;
    for (const auto& u : units_) {
      frames = (frames - 1) / u.stride + 1;
      out.push_back(frames);
    }
    return out;
  }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    if (cfg_.input_norm) input_bn_.visit_params(prefix + "data_bn.", f);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      auto& u = units_[i];
      const std::string p = prefix + "units." + std::to_string(i) + ".";
      u.gcn.visit_params(p + "gcn.", f);
      u.bn1.visit_params(p + "gcn_bn.", f);
      u.tcn.visit_params(p + "tcn.", f);
      u.bn2.visit_params(p + "tcn_bn.", f);
      if (u.residual == Residual::kProjection) {
        u.res_conv.visit_params(p + "residual.", f);
        u.res_bn.visit_params(p + "residual_bn.", f);
      }
    }
  }

  template <typename F>
  void visit_buffers(const std::string& prefix, F&& f) {
    if (cfg_.input_norm) input_bn_.visit_buffers(prefix + "data_bn.", f);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      auto& u = units_[i];
      const std::string p = prefix + "units." + std::to_string(i) + ".";
      u.bn1.visit_buffers(p + "gcn_bn.", f);
      u.bn2.visit_buffers(p + "tcn_bn.", f);
      if (u.residual == Residual::kProjection) u.res_bn.visit_buffers(p + "residual_bn.", f);
    }
  }

 private:
  struct Edge {
    int part, from, to;
    Scalar weight;
  };

  void check_input(const Matrix<Scalar>& x, int batch) const {
    if (batch < 1 || x.rows() != coords_ || x.cols() % (static_cast<Eigen::Index>(batch) * joints_) != 0)
      throw ShapeError("graph branch: input must be coords x (N*T*V)");
  }

  // agg rows [k*C, (k+1)*C) hold x aggregated with partition k. Work one
  // (frame, sample) block at a time so both operands stay cache resident.
  Matrix<Scalar> aggregate(const Matrix<Scalar>& x) const {
    const Eigen::Index c = x.rows();
    const Eigen::Index blocks = x.cols() / joints_;
    Matrix<Scalar> agg = Matrix<Scalar>::Zero(3 * c, x.cols());
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const Scalar* src = x.data() + b * c * joints_;
      Scalar* dst = agg.data() + b * 3 * c * joints_;
      for (const Edge& e : edges_)
        Eigen::Map<Vector<Scalar>>(dst + (e.part + 3 * e.to) * c, c) +=
            e.weight * Eigen::Map<const Vector<Scalar>>(src + e.from * c, c);
    }
    return agg;
  }

  Matrix<Scalar> aggregate_backward(const Matrix<Scalar>& dagg, Eigen::Index c) const {
    const Eigen::Index blocks = dagg.cols() / joints_;
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(c, dagg.cols());
    for (Eigen::Index b = 0; b < blocks; ++b) {
      const Scalar* src = dagg.data() + b * 3 * c * joints_;
      Scalar* dst = dx.data() + b * c * joints_;
      for (const Edge& e : edges_)
        Eigen::Map<Vector<Scalar>>(dst + e.from * c, c) +=
            e.weight * Eigen::Map<const Vector<Scalar>>(src + (e.part + 3 * e.to) * c, c);
    }
    return dx;
  }

  // One sample's temporal patches: (K*C) x (frames_out*V), tap-major rows.
  void im2col_sample(const Scalar* x, Eigen::Index c, int frames, int stride, int frames_out,
                     Matrix<Scalar>& col) const {
    const int k = cfg_.temporal_kernel, pad = k / 2, v = joints_;
    col.setZero(k * c, static_cast<Eigen::Index>(frames_out) * v);
    for (int to = 0; to < frames_out; ++to)
      for (int tap = 0; tap < k; ++tap) {
        const int t = to * stride + tap - pad;
        if (t < 0 || t >= frames) continue;
        col.block(tap * c, static_cast<Eigen::Index>(v) * to, c, v) =
            Eigen::Map<const Matrix<Scalar>>(x + static_cast<Eigen::Index>(t) * v * c, c, v);
      }
  }

  void col2im_sample(const Matrix<Scalar>& dcol, Eigen::Index c, int frames, int stride, int frames_out,
                     Scalar* dx) const {
    const int k = cfg_.temporal_kernel, pad = k / 2, v = joints_;
    for (int to = 0; to < frames_out; ++to)
      for (int tap = 0; tap < k; ++tap) {
        const int t = to * stride + tap - pad;
        if (t < 0 || t >= frames) continue;
        Eigen::Map<Matrix<Scalar>>(dx + static_cast<Eigen::Index>(t) * v * c, c, v) +=
            dcol.block(tap * c, static_cast<Eigen::Index>(v) * to, c, v);
      }
  }

  Matrix<Scalar> temporal_conv(const Linear<Scalar>& conv, const Matrix<Scalar>& x, int batch, int frames,
                               int stride, int frames_out) const {
    const Eigen::Index c = x.rows();
    const Eigen::Index in_per = static_cast<Eigen::Index>(frames) * joints_;
    const Eigen::Index out_per = static_cast<Eigen::Index>(frames_out) * joints_;
    Matrix<Scalar> y(conv.out_features(), out_per * batch);
    Matrix<Scalar> col;
    for (int n = 0; n < batch; ++n) {
      im2col_sample(x.data() + n * in_per * c, c, frames, stride, frames_out, col);
      y.middleCols(n * out_per, out_per).noalias() = conv.weight.value * col;
    }
    y.colwise() += conv.bias.value.col(0);
    return y;
  }

  Matrix<Scalar> temporal_conv_backward(Linear<Scalar>& conv, const Matrix<Scalar>& x, const Matrix<Scalar>& dy,
                                        int batch, int frames, int stride, int frames_out) const {
    const Eigen::Index c = x.rows();
    const Eigen::Index in_per = static_cast<Eigen::Index>(frames) * joints_;
    const Eigen::Index out_per = static_cast<Eigen::Index>(frames_out) * joints_;
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(c, x.cols());
    Matrix<Scalar> col, dcol;
    conv.bias.grad.col(0) += row_sums(dy);
    for (int n = 0; n < batch; ++n) {
      const auto dyn = dy.middleCols(n * out_per, out_per);
      im2col_sample(x.data() + n * in_per * c, c, frames, stride, frames_out, col);
      conv.weight.grad.noalias() += dyn * col.transpose();
      dcol.noalias() = conv.weight.value.transpose() * dyn;
      col2im_sample(dcol, c, frames, stride, frames_out, dx.data() + n * in_per * c);
    }
    return dx;
  }

  Matrix<Scalar> subsample(const Matrix<Scalar>& x, int batch, int frames, int stride, int frames_out) const {
    const int v = joints_;
    Matrix<Scalar> out(x.rows(), static_cast<Eigen::Index>(batch) * frames_out * v);
    for (int n = 0; n < batch; ++n)
      for (int to = 0; to < frames_out; ++to)
        out.middleCols(static_cast<Eigen::Index>(v) * (to + frames_out * n), v) =
            x.middleCols(static_cast<Eigen::Index>(v) * (to * stride + frames * n), v);
    return out;
  }

  void subsample_backward(const Matrix<Scalar>& d, Matrix<Scalar>& dx, int batch, int frames, int stride,
                          int frames_out) const {
    const int v = joints_;
    for (int n = 0; n < batch; ++n)
      for (int to = 0; to < frames_out; ++to)
        dx.middleCols(static_cast<Eigen::Index>(v) * (to * stride + frames * n), v) +=
            d.middleCols(static_cast<Eigen::Index>(v) * (to + frames_out * n), v);
  }

  Matrix<Scalar> unit_forward(Unit& u, const Matrix<Scalar>& x, int batch, int frames, Mode mode, UnitTape& ut) {
    ut.frames_in = frames;
    ut.frames_out = (frames - 1) / u.stride + 1;
    ut.agg = aggregate(x);
    ut.act = relu(u.bn1.forward(u.gcn.forward(ut.agg), mode, &ut.bn1));
    Matrix<Scalar> y =
        u.bn2.forward(temporal_conv(u.tcn, ut.act, batch, frames, u.stride, ut.frames_out), mode, &ut.bn2);
    if (u.residual == Residual::kIdentity) {
      y += x;
    } else if (u.residual == Residual::kProjection) {
      ut.res_in = u.stride == 1 ? x : subsample(x, batch, frames, u.stride, ut.frames_out);
      y += u.res_bn.forward(u.res_conv.forward(ut.res_in), mode, &ut.res_bn);
    }
    ut.out = relu(y);
    return ut.out;
  }

  Matrix<Scalar> unit_backward(Unit& u, const UnitTape& ut, const Matrix<Scalar>& dout, int batch) {
    const Matrix<Scalar> dy = relu_backward(ut.out, dout);
    const Matrix<Scalar> dtcn = u.bn2.backward(ut.bn2, dy);
    const Matrix<Scalar> dact =
        temporal_conv_backward(u.tcn, ut.act, dtcn, batch, ut.frames_in, u.stride, ut.frames_out);
    const Matrix<Scalar> dgcn = u.bn1.backward(ut.bn1, relu_backward(ut.act, dact));
    Matrix<Scalar> dx = aggregate_backward(u.gcn.backward(ut.agg, dgcn), u.in);

    if (u.residual == Residual::kIdentity) {
      dx += dy;
    } else if (u.residual == Residual::kProjection) {
      const Matrix<Scalar> dres = u.res_conv.backward(ut.res_in, u.res_bn.backward(ut.res_bn, dy));
      if (u.stride == 1)
        dx += dres;
      else
        subsample_backward(dres, dx, batch, ut.frames_in, u.stride, ut.frames_out);
    }
    return dx;
  }

  GraphBranchConfig cfg_;
  int joints_ = 0;
  int coords_ = 0;
  std::vector<Edge> edges_;
  BatchNorm<Scalar> input_bn_;
  std::vector<Unit> units_;
};

}  // namespace ssagait::nn
