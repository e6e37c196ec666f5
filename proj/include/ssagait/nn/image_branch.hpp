#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "ssagait/nn/config.hpp"
#include "ssagait/nn/layers.hpp"

namespace ssagait::nn {

template <typename Scalar>
using ComplexMatrix = Matrix<std::complex<Scalar>>;

/// A complex matrix stored as separate real and imaginary planes.
template <typename Scalar>
struct Spectrum {
  Matrix<Scalar> re;
  Matrix<Scalar> im;

  ComplexMatrix<Scalar> complex() const {
    ComplexMatrix<Scalar> out(re.rows(), re.cols());
    out.real() = re;
    out.imag() = im;
    return out;
  }
  Matrix<Scalar> magnitude() const { return (re.array().square() + im.array().square()).sqrt().matrix(); }
};

/// Separable 2-D DFT over a token grid of `rows` x `cols` tokens.
///
/// Token features are laid out as (channels x N*rows*cols) with the column
/// index fastest within a sample (token p = col + cols * row). All
/// transforms act independently per channel and sample. The forward
/// transform is unnormalized; the inverse carries the 1/(rows*cols) factor.
template <typename Scalar>
class GridDft {
 public:
  GridDft() = default;
  GridDft(int rows, int cols) : rows_(rows), cols_(cols) {
    row_ = dft_matrix(rows);
    col_ = dft_matrix(cols);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int tokens() const { return rows_ * cols_; }

  /// DFT of a real signal.
  Spectrum<Scalar> forward(const Matrix<Scalar>& x) const {
    Spectrum<Scalar> out;
    apply(x, nullptr, Scalar(-1), Scalar(1), out.re, &out.im);
    return out;
  }

  Spectrum<Scalar> forward(const Spectrum<Scalar>& x) const {
    Spectrum<Scalar> out;
    apply(x.re, &x.im, Scalar(-1), Scalar(1), out.re, &out.im);
    return out;
  }

  /// Real part of the DFT of a complex signal.
  Matrix<Scalar> forward_real(const Spectrum<Scalar>& x) const {
    Matrix<Scalar> out;
    apply(x.re, &x.im, Scalar(-1), Scalar(1), out, nullptr);
    return out;
  }

  Spectrum<Scalar> inverse(const Spectrum<Scalar>& x) const {
    Spectrum<Scalar> out;
    apply(x.re, &x.im, Scalar(1), Scalar(1) / static_cast<Scalar>(tokens()), out.re, &out.im);
    return out;
  }

  /// Real part of the inverse DFT.
  Matrix<Scalar> inverse_real(const Spectrum<Scalar>& x) const {
    Matrix<Scalar> out;
    apply(x.re, &x.im, Scalar(1), Scalar(1) / static_cast<Scalar>(tokens()), out, nullptr);
    return out;
  }

 private:
  // cos and sin planes of exp(-2 pi i a b / n); the inverse flips the sine sign.
  static Spectrum<Scalar> dft_matrix(int n) {
    Spectrum<Scalar> f{Matrix<Scalar>(n, n), Matrix<Scalar>(n, n)};
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        // Reduce the exponent first so large products keep full precision.
        const double angle = -2.0 * std::numbers::pi * static_cast<double>((a * b) % n) / n;
        f.re(a, b) = static_cast<Scalar>(std::cos(angle));
        f.im(a, b) = static_cast<Scalar>(std::sin(angle));
      }
    return f;
  }

  // out = scale * x (row transform) (col transform); `sign` = -1 forward, +1 inverse.
  void apply(const Matrix<Scalar>& xr, const Matrix<Scalar>* xi, Scalar sign, Scalar scale, Matrix<Scalar>& out_re,
             Matrix<Scalar>* out_im) const {
    using Map = Eigen::Map<Matrix<Scalar>>;
    using ConstMap = Eigen::Map<const Matrix<Scalar>>;
    const Eigen::Index ch = xr.rows();
    const Eigen::Index per = tokens();
    const Eigen::Index batch = xr.cols() / per;
    const Eigen::Index block = ch * per;
    const Matrix<Scalar> row_im = sign < 0 ? row_.im : Matrix<Scalar>(-row_.im);
    const Matrix<Scalar> col_im = sign < 0 ? col_.im : Matrix<Scalar>(-col_.im);
    const Matrix<Scalar> col_re = scale * col_.re;
    const Matrix<Scalar> col_im_s = scale * col_im;

    Matrix<Scalar> mid_re(ch, xr.cols()), mid_im(ch, xr.cols());
    out_re.resize(ch, xr.cols());
    if (out_im) out_im->resize(ch, xr.cols());
    for (Eigen::Index n = 0; n < batch; ++n) {
      // (channels*cols) x rows view: contract over the row index.
      ConstMap ar(xr.data() + n * block, ch * cols_, rows_);
      Map mr(mid_re.data() + n * block, ch * cols_, rows_);
      Map mi(mid_im.data() + n * block, ch * cols_, rows_);
      mr.noalias() = ar * row_.re;
      mi.noalias() = ar * row_im;
      if (xi) {
        ConstMap ai(xi->data() + n * block, ch * cols_, rows_);
        mr.noalias() -= ai * row_im;
        mi.noalias() += ai * row_.re;
      }
      for (int r = 0; r < rows_; ++r) {
        const Eigen::Index off = n * block + static_cast<Eigen::Index>(r) * ch * cols_;
        ConstMap br(mid_re.data() + off, ch, cols_), bi(mid_im.data() + off, ch, cols_);
        Map yr(out_re.data() + off, ch, cols_);
        yr.noalias() = br * col_re;
        yr.noalias() -= bi * col_im_s;
        if (out_im) {
          Map yi(out_im->data() + off, ch, cols_);
          yi.noalias() = br * col_im_s;
          yi.noalias() += bi * col_re;
        }
      }
    }
  }

  int rows_ = 0, cols_ = 0;
  Spectrum<Scalar> row_, col_;
};

/// Real part of inverse_dft(dft(h) .* gain) for a real per-frequency gain.
template <typename Scalar>
Matrix<Scalar> spectral_filter(const GridDft<Scalar>& dft, const Matrix<Scalar>& h, const Matrix<Scalar>& gain) {
  Spectrum<Scalar> spec = dft.forward(h);
  spec.re.array() *= gain.array();
  spec.im.array() *= gain.array();
  return dft.inverse_real(spec);
}

/// Convolution-stem tokenizer followed by adaptive frequency filter blocks:
///   u = LN(z); h = W_mix u + b; X = DFT(h);
///   gain = 1 + W2 relu(W1 |X|/sqrt(P) + b1) + b2;
///   z' = h + Re(IDFT(X .* gain)).
/// The output is the token mean of the last block.
template <typename Scalar>
class ImageBranch {
 public:
  struct Block {
    LayerNorm<Scalar> norm;
    Linear<Scalar> mix;
    Linear<Scalar> filter_in;
    Linear<Scalar> filter_out;
  };

  struct BlockTape {
    typename LayerNorm<Scalar>::Tape norm;
    Matrix<Scalar> normed;
    Spectrum<Scalar> spectrum;
    Matrix<Scalar> magnitude;  // |X| / sqrt(P)
    Matrix<Scalar> hidden;     // relu output of the filter network
    Matrix<Scalar> gain;
  };

  struct Tape {
    int batch = 0;
    Matrix<Scalar> patches;
    std::vector<BlockTape> blocks;
  };

  ImageBranch() = default;
  ImageBranch(const ImageBranchConfig& cfg, int frames, int joints, int coords, RngStream& rng)
      : cfg_(cfg), frames_(frames), joints_(joints), coords_(coords) {
    cfg.validate();
    if (frames % cfg.patch_frames != 0 || joints % cfg.patch_joints != 0)
      throw std::invalid_argument("image branch: patch size must divide the grid");
    dft_ = GridDft<Scalar>(frames / cfg.patch_frames, joints / cfg.patch_joints);
    stem_ = Linear<Scalar>(coords * cfg.patch_frames * cfg.patch_joints, cfg.embed_dim, rng);
    for (int b = 0; b < cfg.blocks; ++b) {
      Block blk;
      blk.norm = LayerNorm<Scalar>(cfg.embed_dim);
      blk.mix = Linear<Scalar>(cfg.embed_dim, cfg.embed_dim, rng);
      blk.filter_in = Linear<Scalar>(cfg.embed_dim, cfg.filter_hidden, rng);
      blk.filter_out = Linear<Scalar>(cfg.filter_hidden, cfg.embed_dim, rng);
      blk.filter_out.bias.value.setZero();
      blocks_.push_back(std::move(blk));
    }
  }

  const ImageBranchConfig& config() const { return cfg_; }
  const GridDft<Scalar>& dft() const { return dft_; }
  int out_dim() const { return cfg_.embed_dim; }
  int tokens() const { return dft_.tokens(); }

  /// Non-empty gains replace the generated filter in every block (for probing).
  void set_gain_override(Matrix<Scalar> gain) { gain_override_ = std::move(gain); }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, int batch, Mode /*mode*/, Tape* tape) {
    const Eigen::Index per_sample = static_cast<Eigen::Index>(frames_) * joints_;
    if (batch < 1 || x.rows() != coords_ || x.cols() != per_sample * batch)
      throw ShapeError("image branch: input must be coords x (N*T*V) on the canonical grid");

    Matrix<Scalar> patches = tokenize(x, batch);
    Matrix<Scalar> z = stem_.forward(patches);
    if (tape) {
      tape->batch = batch;
      tape->patches = std::move(patches);
      tape->blocks.assign(blocks_.size(), BlockTape{});
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      BlockTape local;
      z = block_forward(blocks_[b], z, tape ? tape->blocks[b] : local);
    }
    const Eigen::Index p = tokens();
    Matrix<Scalar> pooled(z.rows(), batch);
    for (int n = 0; n < batch; ++n) pooled.col(n) = row_sums(z.middleCols(n * p, p)) / static_cast<Scalar>(p);
    return pooled;
  }

  /// Accumulates parameter gradients. Returns nothing: the raw input needs no gradient.
  void backward(const Tape& tape, const Matrix<Scalar>& dfeat) {
    const Eigen::Index p = tokens();
    Matrix<Scalar> d(dfeat.rows(), p * tape.batch);
    for (int n = 0; n < tape.batch; ++n) d.middleCols(n * p, p) = (dfeat.col(n) / static_cast<Scalar>(p)).replicate(1, p);
    for (std::size_t b = blocks_.size(); b-- > 0;) d = block_backward(blocks_[b], tape.blocks[b], d);
    stem_.backward(tape.patches, d);
  }

  template <typename F>
  void visit_params(const std::string& prefix, F&& f) {
    stem_.visit_params(prefix + "stem.", f);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const std::string p = prefix + "blocks." + std::to_string(b) + ".";
      blocks_[b].norm.visit_params(p + "norm.", f);
      blocks_[b].mix.visit_params(p + "mix.", f);
      blocks_[b].filter_in.visit_params(p + "filter.0.", f);
      blocks_[b].filter_out.visit_params(p + "filter.2.", f);
    }
  }

  template <typename F>
  void visit_buffers(const std::string&, F&&) {}

 private:
  // Patch vectors (coords*patch_joints*patch_frames) x (N*P); row index
  // c + coords*(dj + patch_joints*dt).
  Matrix<Scalar> tokenize(const Matrix<Scalar>& x, int batch) const {
    const int pt = cfg_.patch_frames, pj = cfg_.patch_joints;
    const int rows = dft_.rows(), cols = dft_.cols();
    const int width = coords_ * pj;  // contiguous floats of one token within one frame
    Matrix<Scalar> patches(static_cast<Eigen::Index>(width) * pt, static_cast<Eigen::Index>(batch) * rows * cols);
    for (int n = 0; n < batch; ++n)
      for (int r = 0; r < rows; ++r)
        for (int dt = 0; dt < pt; ++dt) {
          const int t = r * pt + dt;
          const Scalar* frame = x.data() + (static_cast<Eigen::Index>(n) * frames_ + t) * joints_ * coords_;
          for (int c = 0; c < cols; ++c) {
            const Eigen::Index token = c + static_cast<Eigen::Index>(cols) * (r + static_cast<Eigen::Index>(rows) * n);
            patches.col(token).segment(static_cast<Eigen::Index>(dt) * width, width) =
                Eigen::Map<const Vector<Scalar>>(frame + c * width, width);
          }
        }
    return patches;
  }

  Matrix<Scalar> block_forward(Block& blk, const Matrix<Scalar>& z, BlockTape& bt) {
    bt.normed = blk.norm.forward(z, &bt.norm);
    Matrix<Scalar> h = blk.mix.forward(bt.normed);
    bt.spectrum = dft_.forward(h);
    bt.magnitude = bt.spectrum.magnitude() / std::sqrt(static_cast<Scalar>(tokens()));
    bt.hidden = relu(blk.filter_in.forward(bt.magnitude));
    if (gain_override_.size() > 0) {
      bt.gain = gain_override_;
    } else {
      bt.gain = blk.filter_out.forward(bt.hidden);
      bt.gain.array() += Scalar(1);
    }
    Spectrum<Scalar> filtered{bt.spectrum.re.cwiseProduct(bt.gain), bt.spectrum.im.cwiseProduct(bt.gain)};
    return h + dft_.inverse_real(filtered);
  }

  Matrix<Scalar> block_backward(Block& blk, const BlockTape& bt, const Matrix<Scalar>& dout) {
    const auto p = static_cast<Scalar>(tokens());
    const Spectrum<Scalar> delta = dft_.forward(dout);

    // Linear path through the fixed filter.
    Matrix<Scalar> dh =
        dout + dft_.inverse_real(Spectrum<Scalar>{delta.re.cwiseProduct(bt.gain), delta.im.cwiseProduct(bt.gain)});

    if (gain_override_.size() == 0) {
      // Re(X .* conj(delta)) / P
      const Matrix<Scalar> dgain =
          (bt.spectrum.re.cwiseProduct(delta.re) + bt.spectrum.im.cwiseProduct(delta.im)) / p;
      const Matrix<Scalar> dhidden = blk.filter_out.backward(bt.hidden, dgain);
      Matrix<Scalar> dmag = blk.filter_in.backward(bt.magnitude, relu_backward(bt.hidden, dhidden));
      dmag /= std::sqrt(p);
      // d|X|/dh through the forward transform: Re(DFT(dmag .* conj(X) / |X|)).
      const Matrix<Scalar> mag = bt.magnitude * std::sqrt(p);
      const Matrix<Scalar> w =
          (mag.array() > Scalar(0)).select(dmag.array() / mag.array(), Scalar(0)).matrix();
      dh += dft_.forward_real(Spectrum<Scalar>{bt.spectrum.re.cwiseProduct(w), -bt.spectrum.im.cwiseProduct(w)});
    }
    return blk.norm.backward(bt.norm, blk.mix.backward(bt.normed, dh));
  }

  ImageBranchConfig cfg_;
  int frames_ = 0, joints_ = 0, coords_ = 0;
  GridDft<Scalar> dft_;
  Linear<Scalar> stem_;
  std::vector<Block> blocks_;
  Matrix<Scalar> gain_override_;
};

}  // namespace ssagait::nn
