// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swcodec/nn/tape.hpp"
#include "swcodec/rng.hpp"

namespace swc::nn {

/// Truncated normal (|z| <= 2 sigma), the init used for projection weights.
template <typename S>
Mat<S> init_truncated_normal(Rng& rng, Index rows, Index cols, double stddev = 0.02) {
  Mat<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>(rng.truncated_normal(stddev));
  return m;
}

template <typename S>
Mat<S> init_zeros(Index rows, Index cols) {
  return Mat<S>::Zero(rows, cols);
}

template <typename S>
Mat<S> init_ones(Index rows, Index cols) {
  return Mat<S>::Ones(rows, cols);
}

} // namespace swc::nn
