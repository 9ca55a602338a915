// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/model/config.hpp"
#include "swcodec/model/layers.hpp"

namespace swc::model {

// Symmetric decoder: the same transformer block stack as the encoder (no
// positional encodings, mirroring the simplified encoder), then the stem
// mirror as transposed convolutions (stride 2 then stride 1) and a linear head
// to n_mels. The head output is passed through a shifted softplus so predicted
// log-mels never fall below the analysis log floor.
template <typename S>
class Decoder {
public:
  Decoder(const ModelConfig& cfg, double mel_log_floor, Rng& rng)
      : cfg_(cfg), floor_(static_cast<S>(std::log(mel_log_floor))) {
    cfg.validate();
    require(mel_log_floor > 0.0, "decoder: mel log floor must be positive");
    const Index d = cfg.d_model;
    for (Index l = 0; l < cfg.n_layers; ++l)
      blocks_.emplace_back("decoder.block" + std::to_string(l), d, cfg.n_heads, rng);
    // Transposed-conv weights are [(k*Cout) x Cin] (the adjoint layout).
    tconv1_w_ = nn::Parameter<S>("decoder.tconv1.w", nn::init_truncated_normal<S>(rng, 3 * d, d));
    tconv1_b_ = nn::Parameter<S>("decoder.tconv1.b", nn::init_zeros<S>(1, d));
    tconv2_w_ = nn::Parameter<S>("decoder.tconv2.w", nn::init_truncated_normal<S>(rng, 3 * d, d));
    tconv2_b_ = nn::Parameter<S>("decoder.tconv2.b", nn::init_zeros<S>(1, d));
    head_ = Dense<S>("decoder.head", d, cfg.n_mels, rng);
  }

  /// The transformer stack alone (permutation-equivariant; used by tests).
  nn::Var<S> blocks_forward(nn::Tape<S>& t, nn::Var<S> latent) {
    require(latent.cols() == cfg_.d_model, "decoder: latent dim " + std::to_string(latent.cols()) +
                                               " != d_model " + std::to_string(cfg_.d_model));
    nn::Var<S> h = latent;
    for (auto& block : blocks_) h = block.forward(t, h).y;
    return h;
  }

  /// T latent frames at 50 Hz -> 2T mel frames at 100 Hz (caller trims).
  nn::Var<S> decode(nn::Tape<S>& t, nn::Var<S> latent) {
    nn::Var<S> h = blocks_forward(t, latent);
    const Index T = h.rows();
    h = nn::transposed_conv1d(h, t.bind(tconv1_w_), t.bind(tconv1_b_), 3, 2, 1, 2 * T);
    if (cfg_.use_stem_gelu) h = nn::gelu(h);
    h = nn::transposed_conv1d(h, t.bind(tconv2_w_), t.bind(tconv2_b_), 3, 1, 1, 2 * T);
    if (cfg_.use_stem_gelu) h = nn::gelu(h);
    nn::Var<S> y = head_.forward(t, h);
    // floor + softplus(y - floor): identity-like for loud cells, clamped at
    // the log floor from below.
    return nn::add_scalar(nn::softplus(nn::add_scalar(y, -floor_)), floor_);
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    for (auto& b : blocks_) b.collect(out);
    out.push_back(&tconv1_w_);
    out.push_back(&tconv1_b_);
    out.push_back(&tconv2_w_);
    out.push_back(&tconv2_b_);
    head_.collect(out);
  }

  S log_floor() const { return floor_; }

private:
  ModelConfig cfg_;
  S floor_;
  std::vector<TransformerBlock<S>> blocks_;
  nn::Parameter<S> tconv1_w_, tconv1_b_, tconv2_w_, tconv2_b_;
  Dense<S> head_;
};

} // namespace swc::model
