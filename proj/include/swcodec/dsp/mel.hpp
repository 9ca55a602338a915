// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "swcodec/audio.hpp"
#include "swcodec/types.hpp"

namespace swc::dsp {

struct MelConfig {
  Index fft_size = 512;
  Index hop = 160;
  Index win = 400;
  Index n_mels = 40;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5; // applied to power before the log

  void validate(int sample_rate) const;
};

/// Log-power mel spectrogram, frames x n_mels.
struct MelSpectrogram {
  MatF values;
  double frame_rate = 0.0;

  Index frames() const { return values.rows(); }
  Index n_mels() const { return values.cols(); }
};

/// Triangular area-normalized filterbank, n_mels x (fft/2 + 1). Pure function
/// of its arguments, so repeated calls are bit-identical.
MatF mel_filterbank(const MelConfig& cfg, int sample_rate);

/// log(max(mel_power, log_floor)) features at sample_rate / hop frames per second.
MelSpectrogram log_mel(const AudioBuffer& audio, const MelConfig& cfg);

/// Configuration of the seven loss scales: fft = 2^k for k in 5..11,
/// win = fft, hop = fft/4, n_mels = min(80, fft/2).
std::vector<MelConfig> multiscale_configs();

/// Log-mel spectrograms at the seven loss scales.
std::vector<MelSpectrogram> multiscale_mels(const AudioBuffer& audio);

// Flat binary export: magic "SWMEL\0", u16 version, u32 frames, u32 n_mels,
// then row-major float32 little-endian.
void save_mel(const std::string& path, const MelSpectrogram& mel);
MelSpectrogram load_mel(const std::string& path);

} // namespace swc::dsp
