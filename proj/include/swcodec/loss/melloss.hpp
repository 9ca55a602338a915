// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "swcodec/dsp/mel.hpp"
#include "swcodec/dsp/stft.hpp"
#include "swcodec/nn/ops.hpp"

namespace swc::loss {

// Differentiable log-mel analysis. The spectrogram is expressed with tape ops
// (unfold, window, a dense DFT matmul, filterbank matmul, clamped log) so the
// reconstruction distance can backpropagate into a synthesized waveform. The
// DFT matrices and filterbank enter as fixed factors, not gradient-carrying
// nodes.

template <typename S>
struct MelScale {
  dsp::MelConfig cfg;
  std::shared_ptr<const Mat<S>> window;  // 1 x fft, centered padded Hann
  std::shared_ptr<const Mat<S>> dft_cos; // fft x (fft/2+1)
  std::shared_ptr<const Mat<S>> dft_sin; // fft x (fft/2+1), negated sine
  std::shared_ptr<const Mat<S>> fb_t;    // (fft/2+1) x n_mels
};

template <typename S>
MelScale<S> make_mel_scale(const dsp::MelConfig& cfg, int sample_rate) {
  cfg.validate(sample_rate);
  MelScale<S> s;
  s.cfg = cfg;
  const Index fft = cfg.fft_size;
  const Index bins = fft / 2 + 1;
  const VecF w = dsp::padded_window(cfg.win, fft);
  auto window = std::make_shared<Mat<S>>(1, fft);
  for (Index n = 0; n < fft; ++n) (*window)(0, n) = static_cast<S>(w[n]);
  auto dft_cos = std::make_shared<Mat<S>>(fft, bins);
  auto dft_sin = std::make_shared<Mat<S>>(fft, bins);
  for (Index n = 0; n < fft; ++n)
    for (Index k = 0; k < bins; ++k) {
      const double ang = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(n) /
                         static_cast<double>(fft);
      (*dft_cos)(n, k) = static_cast<S>(std::cos(ang));
      (*dft_sin)(n, k) = static_cast<S>(-std::sin(ang));
    }
  s.fb_t = std::make_shared<Mat<S>>(
      dsp::mel_filterbank(cfg, sample_rate).transpose().template cast<S>());
  s.window = std::move(window);
  s.dft_cos = std::move(dft_cos);
  s.dft_sin = std::move(dft_sin);
  return s;
}

/// The seven reconstruction-loss scales (fft 32..2048).
template <typename S>
std::vector<MelScale<S>> multiscale_tape_scales(int sample_rate) {
  std::vector<MelScale<S>> out;
  for (const dsp::MelConfig& cfg : dsp::multiscale_configs())
    out.push_back(make_mel_scale<S>(cfg, sample_rate));
  return out;
}

/// Centered log-power mel of a waveform column, frames x n_mels, matching the
/// non-tape analysis conventions (reflect padding, ceil(len/hop) frames).
template <typename S>
nn::Var<S> log_mel_tape(nn::Var<S> wave, const MelScale<S>& scale) {
  require(wave.cols() == 1, "log_mel_tape: expected a single-column waveform");
  const Index fft = scale.cfg.fft_size;
  const Index hop = scale.cfg.hop;
  const Index n = wave.rows();
  const Index frames = (n + hop - 1) / hop;
  const Index left = fft / 2;
  const Index right = (frames - 1) * hop + fft - n - left;
  require(left < n && right < n,
          "log_mel_tape: waveform shorter than the analysis padding (" + std::to_string(n) +
              " samples, fft " + std::to_string(fft) + ")");
  nn::Var<S> frames_mat = nn::unfold(nn::reflect_pad_rows(wave, left, right), fft, hop, 1, 0, 0);
  nn::Var<S> windowed = nn::mul_rowvec_const(frames_mat, scale.window);
  nn::Var<S> re = nn::matmul_const(windowed, scale.dft_cos);
  nn::Var<S> im = nn::matmul_const(windowed, scale.dft_sin);
  nn::Var<S> power = nn::matmul_const(nn::add(nn::square(re), nn::square(im)), scale.fb_t);
  return nn::log_clamped(power, static_cast<S>(scale.cfg.log_floor));
}

/// Multi-scale mel distance between a fixed target waveform and a tape
/// waveform of the same length: the sum over scales of the mean absolute
/// log-mel difference.
template <typename S>
nn::Var<S> recon_loss_tape(nn::Tape<S>& t, const AudioBuffer& target, nn::Var<S> wave_hat,
                           const std::vector<MelScale<S>>& scales) {
  require(!scales.empty(), "recon loss: no scales");
  require_runtime(target.size() == wave_hat.rows(),
                  "recon loss: target has " + std::to_string(target.size()) +
                      " samples, reconstruction has " + std::to_string(wave_hat.rows()));
  nn::Var<S> total = t.scalar(S(0));
  for (const MelScale<S>& scale : scales) {
    const dsp::MelSpectrogram ref = dsp::log_mel(target, scale.cfg);
    nn::Var<S> diff =
        nn::sub(log_mel_tape(wave_hat, scale), t.constant(ref.values.template cast<S>()));
    total = nn::add(total, nn::mean(nn::abs(diff)));
  }
  return total;
}

/// Non-tape reconstruction metric between two waveforms; lengths are trimmed
/// to the shorter one. Needs at least 2048 samples (the largest analysis fft).
inline double recon_loss(const AudioBuffer& a, const AudioBuffer& b) {
  const Index n = std::min(a.size(), b.size());
  require_runtime(n >= 2048, "recon loss: need at least 2048 samples, got " + std::to_string(n));
  AudioBuffer ta{a.samples.head(n), a.sample_rate};
  AudioBuffer tb{b.samples.head(n), b.sample_rate};
  const std::vector<dsp::MelSpectrogram> ma = dsp::multiscale_mels(ta);
  const std::vector<dsp::MelSpectrogram> mb = dsp::multiscale_mels(tb);
  double total = 0.0;
  for (size_t i = 0; i < ma.size(); ++i)
    total += (ma[i].values - mb[i].values).cwiseAbs().mean();
  return total;
}

} // namespace swc::loss
