// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>

#include "swcodec/model/config.hpp"
#include "swcodec/nn/ops.hpp"

namespace swc::model {

// Finite scalar quantization. Each latent scalar with L levels is squashed by
// b(z) = floor(L/2) * tanh(z + s_L) + o_L, rounded to an integer digit, and
// re-normalized to [-1, 1]. For even L the (s_L, o_L) pair shifts the grid by
// half a step so the L rounded values are {-L/2, ..., L/2 - 1}; for odd L both
// are zero and the values are symmetric. Groups of dims_per_group digits pack
// into one mixed-radix code index.

/// Quantized token indices at the bottleneck rate, frames x n_groups.
struct CodeGrid {
  MatI indices;
  double frame_rate = 12.5;

  Index frames() const { return indices.rows(); }
  Index n_groups() const { return indices.cols(); }
};

namespace detail {

inline double fsq_shift(int L) { return L % 2 == 0 ? std::atanh(1.0 / L) : 0.0; }
inline double fsq_offset(int L) { return L % 2 == 0 ? -0.5 : 0.0; }

/// b(z), before rounding.
inline double fsq_bound(double z, int L) {
  const double half = static_cast<double>(L / 2);
  return half * std::tanh(z + fsq_shift(L)) + fsq_offset(L);
}

/// Integer digit in [0, L), the rounded bounded value re-based at zero.
inline int fsq_digit(double z, int L) {
  const int q = static_cast<int>(std::lround(fsq_bound(z, L)));
  return q + L / 2;
}

/// Normalized lattice value for a digit, in [-1, 1].
inline double fsq_value(int digit, int L) {
  return static_cast<double>(digit - L / 2) / static_cast<double>(L / 2);
}

} // namespace detail

/// Mixed-radix encoding of one group's digits (digit 0 is the fastest axis).
inline int32_t fsq_index_from_digits(const std::vector<int>& digits, const FSQSpec& spec) {
  int32_t idx = 0, stride = 1;
  for (size_t j = 0; j < spec.levels.size(); ++j) {
    idx += static_cast<int32_t>(digits[j]) * stride;
    stride *= spec.levels[j];
  }
  return idx;
}

inline std::vector<int> fsq_digits_from_index(int32_t index, const FSQSpec& spec) {
  std::vector<int> digits(spec.levels.size());
  for (size_t j = 0; j < spec.levels.size(); ++j) {
    digits[j] = static_cast<int>(index % spec.levels[j]);
    index /= spec.levels[j];
  }
  return digits;
}

template <typename S>
struct FSQResult {
  Mat<S> values; // on-lattice, same shape as the input
  CodeGrid codes;
};

/// Quantizes a frames x code_dim latent. Pure per-frame function.
template <typename S>
FSQResult<S> fsq_quantize(const Mat<S>& z, const FSQSpec& spec) {
  require(z.cols() == spec.code_dim(), "fsq: latent dim " + std::to_string(z.cols()) +
                                           " != code dim " + std::to_string(spec.code_dim()));
  const Index D = spec.dims_per_group();
  FSQResult<S> out;
  out.values.resize(z.rows(), z.cols());
  out.codes.indices.resize(z.rows(), spec.n_groups);
  std::vector<int> digits(static_cast<size_t>(D));
  for (Index t = 0; t < z.rows(); ++t) {
    for (Index g = 0; g < spec.n_groups; ++g) {
      for (Index j = 0; j < D; ++j) {
        const int L = spec.levels[static_cast<size_t>(j)];
        const int d = detail::fsq_digit(static_cast<double>(z(t, g * D + j)), L);
        digits[static_cast<size_t>(j)] = d;
        out.values(t, g * D + j) = static_cast<S>(detail::fsq_value(d, L));
      }
      out.codes.indices(t, g) = fsq_index_from_digits(digits, spec);
    }
  }
  return out;
}

/// Exact inverse of the digit encoding back to normalized lattice values.
template <typename S>
Mat<S> fsq_dequantize(const CodeGrid& codes, const FSQSpec& spec) {
  const Index D = spec.dims_per_group();
  const int32_t size = static_cast<int32_t>(spec.codebook_size());
  Mat<S> z(codes.frames(), spec.code_dim());
  for (Index t = 0; t < codes.frames(); ++t)
    for (Index g = 0; g < codes.n_groups(); ++g) {
      const int32_t idx = codes.indices(t, g);
      require(idx >= 0 && idx < size, "fsq: index " + std::to_string(idx) +
                                          " out of range at frame " + std::to_string(t) +
                                          ", group " + std::to_string(g));
      const std::vector<int> digits = fsq_digits_from_index(idx, spec);
      for (Index j = 0; j < D; ++j)
        z(t, g * D + j) =
            static_cast<S>(detail::fsq_value(digits[static_cast<size_t>(j)], spec.levels[static_cast<size_t>(j)]));
    }
  return z;
}

// Tape node for training: forward emits the on-lattice values, backward is the
// identity (straight-through), so d(sum fsq(z))/dz is exactly all-ones.
template <typename S>
nn::Var<S> fsq_ste(nn::Var<S> z, const FSQSpec& spec) {
  Mat<S> q = fsq_quantize(z.value(), spec).values;
  return z.tape->make(std::move(q), [iz = z.id, id = z.tape->size()](nn::Tape<S>& t) {
    t.grad(iz) += t.grad(id);
  });
}

// Token-stream file, bit-exact: magic "SWTOK", u16 version, u8 n_groups,
// u8 dims_per_group, dims u8 levels, f32 frame_rate, u32 original 50 Hz frame
// count (so decode can trim the divisibility padding), then frames x n_groups
// u16 little-endian indices.
struct TokenStream {
  CodeGrid grid;
  FSQSpec spec;
  uint32_t original_50hz_frames = 0;
};

void save_tokens(const std::string& path, const TokenStream& ts);
TokenStream load_tokens(const std::string& path);

} // namespace swc::model
