// SPDX-License-Identifier: Apache-2.0

#include "swcodec/analysis/stoi.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "swcodec/common.hpp"
#include "swcodec/dsp/stft.hpp"

namespace swc::analysis {

namespace {

constexpr int kRate = 16000;
constexpr Index kWin = 256;
constexpr Index kHop = 128;
constexpr Index kFft = 512;
constexpr Index kBands = 15;
constexpr Index kSegment = 48; // 384 ms of hops per scoring window
constexpr double kDynRange = 40.0;
constexpr Index kMinSamples = kWin + (kSegment - 1) * kHop; // 6272

// Real DFT basis for the zero-padded frame, built once. Only the first kWin
// rows matter since the pad is zero.
struct Basis {
  MatD cos_b{kWin, kFft / 2 + 1};
  MatD sin_b{kWin, kFft / 2 + 1};
  Basis() {
    for (Index t = 0; t < kWin; ++t)
      for (Index k = 0; k <= kFft / 2; ++k) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k * t) / kFft;
        cos_b(t, k) = std::cos(ang);
        sin_b(t, k) = -std::sin(ang);
      }
  }
};

// Windowed frames of x at the fixed hop, one row per frame.
MatD frame_signal(const VecF& x, Index frames) {
  const VecD w = dsp::hann_periodic(kWin).cast<double>();
  MatD out(frames, kWin);
  for (Index m = 0; m < frames; ++m)
    out.row(m) =
        x.segment(m * kHop, kWin).cast<double>().cwiseProduct(w).transpose();
  return out;
}

// One-third-octave band energies, frames x kBands. Bands are contiguous in
// log frequency with centers 150 * 2^(j/3).
MatD band_envelopes(const MatD& framed) {
  static const Basis basis;
  const MatD re = framed * basis.cos_b;
  const MatD im = framed * basis.sin_b;
  const MatD power = re.array().square() + im.array().square();
  MatD bands = MatD::Zero(framed.rows(), kBands);
  for (Index j = 0; j < kBands; ++j) {
    const double lo = 150.0 * std::pow(2.0, (j - 0.5) / 3.0);
    const double hi = 150.0 * std::pow(2.0, (j + 0.5) / 3.0);
    const auto k_lo = static_cast<Index>(std::ceil(lo * kFft / kRate));
    const auto k_hi = static_cast<Index>(std::ceil(hi * kFft / kRate)); // exclusive
    require(k_lo < k_hi && k_hi <= kFft / 2 + 1, "stoi: empty analysis band");
    bands.col(j) = power.middleCols(k_lo, k_hi - k_lo).rowwise().sum();
  }
  return bands.cwiseSqrt();
}

} // namespace

double stoi(const AudioBuffer& reference, const AudioBuffer& degraded) {
  require(reference.sample_rate == kRate && degraded.sample_rate == kRate,
          "stoi: signals must be 16 kHz");
  const Index n = std::min(reference.samples.size(), degraded.samples.size());
  require(n >= kMinSamples,
          "stoi: signals too short: need 6272 samples (392 ms) at 16 kHz");
  const Index frames = 1 + (n - kWin) / kHop;

  const MatD fx = frame_signal(reference.samples, frames);
  const MatD fy = frame_signal(degraded.samples, frames);

  // Drop frames far below the loudest reference frame, from both signals.
  const VecD energy_db =
      (fx.rowwise().norm().array() + 1e-12).log10() * 20.0;
  const double floor_db = energy_db.maxCoeff() - kDynRange;
  std::vector<Index> keep;
  keep.reserve(frames);
  for (Index m = 0; m < frames; ++m)
    if (energy_db[m] >= floor_db) keep.push_back(m);
  require(static_cast<Index>(keep.size()) >= kSegment,
          "stoi: fewer than 48 frames above the silence floor");

  MatD kx(static_cast<Index>(keep.size()), kWin);
  MatD ky(static_cast<Index>(keep.size()), kWin);
  for (Index i = 0; i < kx.rows(); ++i) {
    kx.row(i) = fx.row(keep[static_cast<size_t>(i)]);
    ky.row(i) = fy.row(keep[static_cast<size_t>(i)]);
  }

  const MatD bx = band_envelopes(kx);
  const MatD by = band_envelopes(ky);

  // Clip bound: the rescaled degraded envelope may not exceed the reference
  // by more than 15 dB, which caps how much a hot band can be rewarded.
  const double clip = std::pow(10.0, 15.0 / 20.0);
  double acc = 0.0;
  Index cells = 0;
  for (Index j = 0; j < kBands; ++j) {
    for (Index m = kSegment - 1; m < bx.rows(); ++m) {
      const VecD x = bx.col(j).segment(m - kSegment + 1, kSegment);
      const VecD y = by.col(j).segment(m - kSegment + 1, kSegment);
      const double alpha = x.norm() / std::max(y.norm(), 1e-300);
      const VecD yc = (alpha * y).cwiseMin((1.0 + clip) * x);
      const VecD xd = x.array() - x.mean();
      const VecD yd = yc.array() - yc.mean();
      acc += xd.dot(yd) / std::max(xd.norm() * yd.norm(), 1e-300);
      ++cells;
    }
  }
  return acc / static_cast<double>(cells);
}

} // namespace swc::analysis
