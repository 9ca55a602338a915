// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/model/config.hpp"
#include "swcodec/model/layers.hpp"

namespace swc::model {

/// Fixed interleaved sin/cos encodings, base 10000. Row t is the encoding of
/// position t; d must be even.
template <typename S>
Mat<S> sinusoidal_pe(Index T, Index d) {
  require(d % 2 == 0, "sinusoidal_pe: dimension must be even");
  Mat<S> pe(T, d);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < d / 2; ++i) {
      const double rate = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      pe(t, 2 * i) = static_cast<S>(std::sin(t * rate));
      pe(t, 2 * i + 1) = static_cast<S>(std::cos(t * rate));
    }
  return pe;
}

template <typename S>
struct EncodeResult {
  nn::Var<S> latent;                     // ceil(T/2) x d_model, 50 Hz
  std::vector<std::vector<Mat<S>>> attn; // [layer][head], rows sum to 1
  std::vector<Mat<S>> layer_outputs;     // block-stack input, then each block output
};

// Two-layer convolutional stem (stride 1 then stride 2) and pre-norm
// transformer blocks. The two simplification flags: use_stem_gelu re-inserts
// the stem non-linearities (off = the stem is affine), use_abs_pe re-adds
// fixed sinusoidal encodings after the stem.
template <typename S>
class Encoder {
public:
  Encoder(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.validate();
    conv1_ = Conv1dLayer<S>("encoder.stem.conv1", cfg.n_mels, cfg.d_model, 3, 1, 1, rng);
    conv2_ = Conv1dLayer<S>("encoder.stem.conv2", cfg.d_model, cfg.d_model, 3, 2, 1, rng);
    for (Index l = 0; l < cfg.n_layers; ++l)
      blocks_.emplace_back("encoder.block" + std::to_string(l), cfg.d_model, cfg.n_heads, rng);
  }

  /// T x n_mels at 100 Hz -> ceil(T/2) x d_model at 50 Hz.
  nn::Var<S> stem(nn::Tape<S>& t, nn::Var<S> mel) {
    require(mel.cols() == cfg_.n_mels, "encoder: input has " + std::to_string(mel.cols()) +
                                           " mel bands, config expects " +
                                           std::to_string(cfg_.n_mels));
    require(mel.rows() >= 2, "encoder: need at least 2 frames");
    nn::Var<S> h = conv1_.forward(t, mel);
    if (cfg_.use_stem_gelu) h = nn::gelu(h);
    h = conv2_.forward(t, h);
    if (cfg_.use_stem_gelu) h = nn::gelu(h);
    return h;
  }

  /// Runs the block stack on post-stem features (the injection point the
  /// permutation-equivariance tests use). Adds PEs first when enabled.
  EncodeResult<S> encode_features(nn::Tape<S>& t, nn::Var<S> feats) {
    if (cfg_.use_abs_pe)
      feats = nn::add(feats, t.constant(sinusoidal_pe<S>(feats.rows(), cfg_.d_model)));
    EncodeResult<S> out;
    out.layer_outputs.push_back(feats.value());
    nn::Var<S> h = feats;
    for (auto& block : blocks_) {
      typename TransformerBlock<S>::Out b = block.forward(t, h);
      h = b.y;
      out.attn.push_back(std::move(b.attn));
      out.layer_outputs.push_back(h.value());
    }
    out.latent = h;
    return out;
  }

  EncodeResult<S> encode(nn::Tape<S>& t, nn::Var<S> mel) {
    return encode_features(t, stem(t, mel));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    conv1_.collect(out);
    conv2_.collect(out);
    for (auto& b : blocks_) b.collect(out);
  }

  const ModelConfig& config() const { return cfg_; }

private:
  ModelConfig cfg_;
  Conv1dLayer<S> conv1_, conv2_;
  std::vector<TransformerBlock<S>> blocks_;
};

} // namespace swc::model
