// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "swcodec/nn/attention.hpp"
#include "swcodec/nn/init.hpp"
#include "swcodec/nn/ops.hpp"

namespace swc::model {

// Parameter-owning layers. Each exposes forward(tape, x) and collect(), which
// appends parameters in a fixed order; that order is the checkpoint layout.
// forward() is non-const because binding hands the tape a mutable pointer to
// the parameter (gradients are written back there).

template <typename S>
struct Dense {
  nn::Parameter<S> w, b;

  Dense() = default;
  Dense(const std::string& name, Index in, Index out, Rng& rng)
      : w(name + ".w", nn::init_truncated_normal<S>(rng, in, out)),
        b(name + ".b", nn::init_zeros<S>(1, out)) {}

  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> x) {
    return nn::add_rowvec(nn::matmul(x, t.bind(w)), t.bind(b));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
struct Conv1dLayer {
  Index k = 3, stride = 1, dilation = 1;
  nn::Parameter<S> w; // (k*Cin) x Cout
  nn::Parameter<S> b; // 1 x Cout

  Conv1dLayer() = default;
  Conv1dLayer(const std::string& name, Index cin, Index cout, Index k_, Index stride_,
              Index dilation_, Rng& rng, double w_std = 0.02)
      : k(k_), stride(stride_), dilation(dilation_),
        w(name + ".w", nn::init_truncated_normal<S>(rng, k_ * cin, cout, w_std)),
        b(name + ".b", nn::init_zeros<S>(1, cout)) {}

  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> x) {
    return nn::conv1d_same(x, t.bind(w), t.bind(b), k, stride, dilation);
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename S>
struct LayerNormLayer {
  nn::Parameter<S> gain, bias;

  LayerNormLayer() = default;
  LayerNormLayer(const std::string& name, Index d)
      : gain(name + ".g", nn::init_ones<S>(1, d)), bias(name + ".b", nn::init_zeros<S>(1, d)) {}

  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> x) {
    return nn::layer_norm(x, t.bind(gain), t.bind(bias));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

// Pre-norm transformer block: x + MHSA(LN(x)), then h + MLP(LN(h)) with a 4x
// GELU MLP. Attention maps are copied out for the analysis instruments.
template <typename S>
struct TransformerBlock {
  Index heads = 1;
  LayerNormLayer<S> ln_attn, ln_mlp;
  Dense<S> wq, wk, wv, wo, mlp_in, mlp_out;

  TransformerBlock() = default;
  TransformerBlock(const std::string& name, Index d, Index heads_, Rng& rng)
      : heads(heads_), ln_attn(name + ".ln_attn", d), ln_mlp(name + ".ln_mlp", d),
        wq(name + ".attn.q", d, d, rng), wk(name + ".attn.k", d, d, rng),
        wv(name + ".attn.v", d, d, rng), wo(name + ".attn.o", d, d, rng),
        mlp_in(name + ".mlp.in", d, 4 * d, rng), mlp_out(name + ".mlp.out", 4 * d, d, rng) {}

  struct Out {
    nn::Var<S> y;
    std::vector<Mat<S>> attn; // per head, rows sum to 1
  };

  Out forward(nn::Tape<S>& t, nn::Var<S> x) {
    nn::AttentionResult<S> a = nn::multi_head_attention(
        ln_attn.forward(t, x), t.bind(wq.w), t.bind(wq.b), t.bind(wk.w), t.bind(wk.b),
        t.bind(wv.w), t.bind(wv.b), t.bind(wo.w), t.bind(wo.b), heads);
    nn::Var<S> h = nn::add(x, a.y);
    nn::Var<S> m = mlp_out.forward(t, nn::gelu(mlp_in.forward(t, ln_mlp.forward(t, h))));
    return Out{nn::add(h, m), std::move(a.attn)};
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    ln_attn.collect(out);
    wq.collect(out);
    wk.collect(out);
    wv.collect(out);
    wo.collect(out);
    ln_mlp.collect(out);
    mlp_in.collect(out);
    mlp_out.collect(out);
  }
};

// Dilated residual unit used by the bottleneck resamplers:
// x + conv1x1(snake(conv_k3_dilated(snake(x)))).
template <typename S>
struct ResidualUnit {
  nn::Parameter<S> alpha1, alpha2; // snake slopes, one per channel
  Conv1dLayer<S> dilated, pointwise;

  ResidualUnit() = default;
  ResidualUnit(const std::string& name, Index channels, Index dilation, Rng& rng)
      : alpha1(name + ".a1", nn::init_ones<S>(1, channels)),
        alpha2(name + ".a2", nn::init_ones<S>(1, channels)),
        dilated(name + ".dil", channels, channels, 3, 1, dilation, rng),
        pointwise(name + ".pw", channels, channels, 1, 1, 1, rng) {}

  nn::Var<S> forward(nn::Tape<S>& t, nn::Var<S> x) {
    nn::Var<S> h = dilated.forward(t, nn::snake(x, t.bind(alpha1)));
    return nn::add(x, pointwise.forward(t, nn::snake(h, t.bind(alpha2))));
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    out.push_back(&alpha1);
    dilated.collect(out);
    out.push_back(&alpha2);
    pointwise.collect(out);
  }
};

} // namespace swc::model
