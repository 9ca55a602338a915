// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/nn/ops.hpp"

namespace swc::nn {

template <typename S>
struct AttentionResult {
  Var<S> y;                 // [T x D]
  std::vector<Mat<S>> attn; // per head, [T x T], rows sum to 1
};

// Bidirectional multi-head self-attention built from the primitive ops, so
// gradients come for free. Weights are [D x D], biases [1 x D]. The attention
// maps are copied out per head for the analysis instruments.
template <typename S>
AttentionResult<S> multi_head_attention(Var<S> x, Var<S> wq, Var<S> bq, Var<S> wk, Var<S> bk,
                                        Var<S> wv, Var<S> bv, Var<S> wo, Var<S> bo, Index heads) {
  const Index d = x.cols();
  require(heads >= 1, "attention: heads must be >= 1");
  require(d % heads == 0, "attention: d_model " + std::to_string(d) +
                              " not divisible by heads " + std::to_string(heads));
  const Index dh = d / heads;
  const S scale = S(1) / S(std::sqrt(static_cast<double>(dh)));

  Var<S> q = add_rowvec(matmul(x, wq), bq);
  Var<S> k = add_rowvec(matmul(x, wk), bk);
  Var<S> v = add_rowvec(matmul(x, wv), bv);

  AttentionResult<S> result{Var<S>{}, {}};
  std::vector<Var<S>> head_outputs;
  for (Index h = 0; h < heads; ++h) {
    Var<S> qh = slice_cols(q, h * dh, dh);
    Var<S> kh = slice_cols(k, h * dh, dh);
    Var<S> vh = slice_cols(v, h * dh, dh);
    Var<S> scores = mul_scalar(matmul(qh, transpose(kh)), scale);
    Var<S> attn = softmax_rows(scores);
    result.attn.push_back(attn.value());
    head_outputs.push_back(matmul(attn, vh));
  }
  result.y = add_rowvec(matmul(concat_cols(head_outputs), wo), bo);
  return result;
}

} // namespace swc::nn
