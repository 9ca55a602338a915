// SPDX-License-Identifier: Apache-2.0
#include "swcodec/dsp/stft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace swc::dsp {

VecF hann_periodic(Index length) {
  VecF w(length);
  for (Index n = 0; n < length; ++n)
    w[n] = 0.5f - 0.5f * std::cos(2.0 * M_PI * n / static_cast<double>(length));
  return w;
}

VecF padded_window(Index win, Index fft_size) {
  VecF w = VecF::Zero(fft_size);
  const Index offset = (fft_size - win) / 2;
  w.segment(offset, win) = hann_periodic(win);
  return w;
}

Index stft_frames(Index len, Index hop) { return (len + hop - 1) / hop; }

VecF center_pad(const VecF& x, Index fft_size, Index hop) {
  const Index len = x.size();
  const Index frames = stft_frames(len, hop);
  const Index left = fft_size / 2;
  const Index right = (frames - 1) * hop + fft_size - len - left;
  VecF padded(left + len + right);
  for (Index i = 0; i < padded.size(); ++i) {
    Index j = i - left;
    if (j < 0) j = -j;
    if (j >= len) j = 2 * len - 2 - j;
    padded[i] = x[j];
  }
  return padded;
}

MatC stft_padded(const VecF& padded, Index frames, Index fft_size, Index hop, Index win) {
  const Index bins = fft_size / 2 + 1;
  const VecF window = padded_window(win, fft_size);
  Eigen::FFT<float> fft;
  MatC out(frames, bins);
  Eigen::VectorXcf spectrum(fft_size);
  VecF frame(fft_size);
  for (Index t = 0; t < frames; ++t) {
    frame = padded.segment(t * hop, fft_size).cwiseProduct(window);
    fft.fwd(spectrum, frame);
    out.row(t) = spectrum.head(bins).transpose();
  }
  return out;
}

MatC stft(const AudioBuffer& audio, Index fft_size, Index hop, Index win) {
  require(audio.samples.size() > 0, "stft: input audio is empty");
  require(hop > 0 && win > 0 && fft_size > 0, "stft: sizes must be positive");
  require(hop <= win && win <= fft_size, "stft: need hop <= win <= fft_size");
  require(audio.samples.size() >= win, "stft: input too short (" +
                                           std::to_string(audio.samples.size()) + " samples, window " +
                                           std::to_string(win) + ")");
  const Index frames = stft_frames(audio.samples.size(), hop);
  const VecF padded = center_pad(audio.samples, fft_size, hop);
  return stft_padded(padded, frames, fft_size, hop, win);
}

VecF istft_padded(const MatC& spec, Index fft_size, Index hop, Index win) {
  const Index frames = spec.rows();
  const Index bins = spec.cols();
  const Index out_len = (frames - 1) * hop + fft_size;
  const VecF window = padded_window(win, fft_size);

  Eigen::FFT<float> fft;
  VecF num = VecF::Zero(out_len);
  VecF den = VecF::Zero(out_len);
  Eigen::VectorXcf full(fft_size);
  VecF frame(fft_size);
  const VecF w2 = window.cwiseProduct(window);
  for (Index t = 0; t < frames; ++t) {
    full.head(bins) = spec.row(t).transpose();
    for (Index k = bins; k < fft_size; ++k) full[k] = std::conj(full[fft_size - k]);
    fft.inv(frame, full);
    num.segment(t * hop, fft_size) += frame.cwiseProduct(window);
    den.segment(t * hop, fft_size) += w2;
  }
  for (Index i = 0; i < out_len; ++i) num[i] /= std::max(den[i], 1e-8f);
  return num;
}

MatF magnitudes(const MatC& spec) { return spec.cwiseAbs(); }

} // namespace swc::dsp
