// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/model/config.hpp"
#include "swcodec/model/fsq.hpp"
#include "swcodec/model/layers.hpp"

namespace swc::model {

// Temporal 4x downsampling by frame stacking plus dilated residual blocks that
// compress to the quantizer width, and the mirrored upsampler.

/// Stacks groups of `factor` consecutive frames into channels. Row-major
/// layout makes this a pure reshape, so it is exactly invertible.
template <typename S>
Mat<S> stack_frames(const Mat<S>& x, Index factor) {
  require(factor >= 1 && x.rows() % factor == 0,
          "stack_frames: " + std::to_string(x.rows()) + " rows not divisible by " +
              std::to_string(factor));
  return Eigen::Map<const Mat<S>>(x.data(), x.rows() / factor, x.cols() * factor);
}

template <typename S>
Mat<S> unstack_frames(const Mat<S>& x, Index factor) {
  require(factor >= 1 && x.cols() % factor == 0,
          "unstack_frames: " + std::to_string(x.cols()) + " cols not divisible by " +
              std::to_string(factor));
  return Eigen::Map<const Mat<S>>(x.data(), x.rows() * factor, x.cols() / factor);
}

/// Pads a 50 Hz tape sequence to a multiple of `factor` frames by repeating
/// the last frame. Returns the input unchanged when already divisible.
template <typename S>
nn::Var<S> pad_frames_to_multiple(nn::Var<S> x, Index factor) {
  const Index rem = x.rows() % factor;
  if (rem == 0) return x;
  nn::Var<S> last = nn::slice_rows(x, x.rows() - 1, 1);
  return nn::concat_rows<S>({x, nn::repeat_rows(last, factor - rem)});
}

// 50 Hz, d_model channels -> 12.5 Hz, code_dim channels. Frame stacking first
// (dim x4), then a k=3 projection, residual units at dilations 1,3,5,9, and a
// final snake + k=3 projection down to the code width. The intermediate width
// stays at d_model; the full-size channel plan is not published, so the toy
// plan just keeps the encoder width.
template <typename S>
class Downsampler {
public:
  static constexpr Index kFactor = 4;

  Downsampler(const ModelConfig& mcfg, const FSQSpec& fsq, Rng& rng) {
    const Index d = mcfg.d_model;
    conv_in_ = Conv1dLayer<S>("down.in", kFactor * d, d, 3, 1, 1, rng);
    const Index dil[] = {1, 3, 5, 9};
    for (Index i = 0; i < 4; ++i)
      units_.emplace_back("down.res" + std::to_string(i), d, dil[i], rng);
    alpha_out_ = nn::Parameter<S>("down.a_out", nn::init_ones<S>(1, d));
    conv_out_ = Conv1dLayer<S>("down.out", d, fsq.code_dim(), 3, 1, 1, rng);
  }

  /// Input frames must already be a multiple of 4 (see pad_frames_to_multiple).
  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> latent50) {
    require(latent50.rows() % kFactor == 0,
            "downsample: frame count " + std::to_string(latent50.rows()) +
                " not divisible by " + std::to_string(kFactor));
    nn::Var<S> h = nn::reshape(latent50, latent50.rows() / kFactor, latent50.cols() * kFactor);
    h = conv_in_.forward(t, h);
    for (auto& u : units_) h = u.forward(t, h);
    return conv_out_.forward(t, nn::snake(h, t.bind(alpha_out_)));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    conv_in_.collect(out);
    for (auto& u : units_) u.collect(out);
    out.push_back(&alpha_out_);
    conv_out_.collect(out);
  }

private:
  Conv1dLayer<S> conv_in_, conv_out_;
  std::vector<ResidualUnit<S>> units_;
  nn::Parameter<S> alpha_out_;
};

// Mirror of the downsampler: two stages of 2x nearest-neighbor upsampling,
// each followed by a conv and residual units with the dilations mirrored
// ((9,5) then (3,1)), restoring 50 Hz and d_model channels.
template <typename S>
class Upsampler {
public:
  Upsampler(const ModelConfig& mcfg, const FSQSpec& fsq, Rng& rng) {
    const Index d = mcfg.d_model;
    conv_in_ = Conv1dLayer<S>("up.in", fsq.code_dim(), d, 3, 1, 1, rng);
    conv_s1_ = Conv1dLayer<S>("up.stage1.conv", d, d, 3, 1, 1, rng);
    units_.emplace_back("up.stage1.res0", d, 9, rng);
    units_.emplace_back("up.stage1.res1", d, 5, rng);
    conv_s2_ = Conv1dLayer<S>("up.stage2.conv", d, d, 3, 1, 1, rng);
    units_.emplace_back("up.stage2.res0", d, 3, rng);
    units_.emplace_back("up.stage2.res1", d, 1, rng);
    alpha_out_ = nn::Parameter<S>("up.a_out", nn::init_ones<S>(1, d));
    conv_out_ = Conv1dLayer<S>("up.out", d, d, 3, 1, 1, rng);
  }

  /// 12.5 Hz, code_dim channels -> 4x frames, d_model channels.
  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> latent125) {
    nn::Var<S> h = conv_in_.forward(t, latent125);
    h = conv_s1_.forward(t, nn::repeat_rows(h, 2));
    h = units_[1].forward(t, units_[0].forward(t, h));
    h = conv_s2_.forward(t, nn::repeat_rows(h, 2));
    h = units_[3].forward(t, units_[2].forward(t, h));
    return conv_out_.forward(t, nn::snake(h, t.bind(alpha_out_)));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    conv_in_.collect(out);
    conv_s1_.collect(out);
    units_[0].collect(out);
    units_[1].collect(out);
    conv_s2_.collect(out);
    units_[2].collect(out);
    units_[3].collect(out);
    out.push_back(&alpha_out_);
    conv_out_.collect(out);
  }

private:
  Conv1dLayer<S> conv_in_, conv_s1_, conv_s2_, conv_out_;
  std::vector<ResidualUnit<S>> units_;
  nn::Parameter<S> alpha_out_;
};

} // namespace swc::model
