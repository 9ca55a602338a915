// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "swcodec/dsp/griffin_lim.hpp"
#include "swcodec/dsp/stft.hpp"
#include "swcodec/nn/ops.hpp"

namespace swc::loss {

// Differentiable mel-to-waveform synthesis. Magnitude comes from the clamped
// filterbank pseudo-inverse (linear, so it stays on the tape); phase comes
// from a few fixed-seed Griffin-Lim rounds computed off-tape and held
// constant. The waveform is then an inverse DFT matmul plus weighted
// overlap-add, mirroring the non-tape inverse transform sample for sample.
//
// The inference vocoder refines magnitude with a multiplicative NNLS solve
// instead; the pseudo-inverse is the cheaper-to-differentiate stand-in.

template <typename S>
struct SynthCache {
  dsp::MelConfig cfg;
  int sample_rate = 16000;
  std::shared_ptr<const Mat<S>> pinv_t;  // n_mels x (fft/2+1)
  std::shared_ptr<const Mat<S>> idft_re; // (fft/2+1) x fft
  std::shared_ptr<const Mat<S>> idft_im; // (fft/2+1) x fft
  std::shared_ptr<const Mat<S>> window;  // 1 x fft
  Vec<S> win_sq;                         // per-tap window energy for the OLA envelope
};

template <typename S>
SynthCache<S> make_synth_cache(const dsp::MelConfig& cfg, int sample_rate) {
  cfg.validate(sample_rate);
  require(cfg.hop <= cfg.fft_size / 2, "synth: hop must be at most fft/2 for full overlap");
  SynthCache<S> c;
  c.cfg = cfg;
  c.sample_rate = sample_rate;
  c.pinv_t = std::make_shared<Mat<S>>(
      dsp::mel_pseudo_inverse(cfg, sample_rate).transpose().template cast<S>());
  const Index fft = cfg.fft_size;
  const Index bins = fft / 2 + 1;
  auto re = std::make_shared<Mat<S>>(bins, fft);
  auto im = std::make_shared<Mat<S>>(bins, fft);
  for (Index k = 0; k < bins; ++k) {
    // One-sided spectrum: interior bins carry their conjugate twin's weight.
    const double ak = (k == 0 || k == fft / 2) ? 1.0 : 2.0;
    for (Index n = 0; n < fft; ++n) {
      const double ang = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(n) /
                         static_cast<double>(fft);
      (*re)(k, n) = static_cast<S>(ak * std::cos(ang) / static_cast<double>(fft));
      (*im)(k, n) = static_cast<S>(-ak * std::sin(ang) / static_cast<double>(fft));
    }
  }
  c.idft_re = std::move(re);
  c.idft_im = std::move(im);
  const VecF w = dsp::padded_window(cfg.win, fft);
  auto window = std::make_shared<Mat<S>>(1, fft);
  c.win_sq.resize(fft);
  for (Index n = 0; n < fft; ++n) {
    (*window)(0, n) = static_cast<S>(w[n]);
    c.win_sq[n] = static_cast<S>(w[n]) * static_cast<S>(w[n]);
  }
  c.window = std::move(window);
  return c;
}

/// Log-mel -> linear magnitude on the tape (pseudo-inverse path). The
/// analysis floor is additive on power, so it is subtracted back out.
template <typename S>
nn::Var<S> magnitude_tape(nn::Var<S> mel, const SynthCache<S>& c) {
  require(mel.cols() == c.pinv_t->rows(), "synth: mel has " + std::to_string(mel.cols()) +
                                              " bands, cache expects " +
                                              std::to_string(c.pinv_t->rows()));
  nn::Var<S> power = nn::add_scalar(nn::exp(mel), static_cast<S>(-c.cfg.log_floor));
  return nn::sqrt_clamped(nn::matmul_const(power, c.pinv_t), S(1e-10));
}

/// Magnitude + externally supplied phase -> T * hop waveform samples.
template <typename S>
nn::Var<S> synthesize_tape_fixed_phase(nn::Var<S> mag, const SynthCache<S>& c,
                                       const MatF& phase) {
  require(phase.rows() == mag.rows() && phase.cols() == mag.cols(),
          "synth: phase shape does not match the magnitude");
  const Index T = mag.rows();
  const Index fft = c.cfg.fft_size;
  const Index hop = c.cfg.hop;
  std::shared_ptr<const Mat<S>> cos_p =
      std::make_shared<Mat<S>>(phase.array().cos().template cast<S>());
  std::shared_ptr<const Mat<S>> sin_p =
      std::make_shared<Mat<S>>(phase.array().sin().template cast<S>());

  nn::Var<S> frames = nn::add(nn::matmul_const(nn::mul_const(mag, cos_p), c.idft_re),
                              nn::matmul_const(nn::mul_const(mag, sin_p), c.idft_im));
  nn::Var<S> windowed = nn::mul_rowvec_const(frames, c.window);

  const Index out_len = (T - 1) * hop + fft;
  nn::Var<S> ola = nn::fold(windowed, out_len, 1, fft, hop, 1, 0);

  // Weighted overlap-add normalization by the window-energy envelope.
  auto env = std::make_shared<Mat<S>>(out_len, 1);
  {
    Vec<S> den = Vec<S>::Zero(out_len);
    for (Index t = 0; t < T; ++t) den.segment(t * hop, fft) += c.win_sq;
    for (Index i = 0; i < out_len; ++i)
      (*env)(i, 0) = S(1) / std::max(den[i], static_cast<S>(1e-8));
  }
  std::shared_ptr<const Mat<S>> inv_den = std::move(env);
  // Drop the centering margin: sample i of the output sits at analysis time i.
  return nn::slice_rows(nn::mul_const(ola, inv_den), fft / 2, T * hop);
}

/// T x n_mels log-mel -> T * hop waveform samples. Phase is estimated
/// off-tape against the current magnitude and then held fixed.
template <typename S>
nn::Var<S> synthesize_tape(nn::Var<S> mel, const SynthCache<S>& c, int phase_iters) {
  require(phase_iters >= 1, "synth: phase_iters must be >= 1");
  nn::Var<S> mag = magnitude_tape(mel, c);
  const MatF mag_f = mag.value().template cast<float>();
  return synthesize_tape_fixed_phase(mag, c, dsp::griffin_lim_phase(mag_f, c.cfg, phase_iters));
}

} // namespace swc::loss
