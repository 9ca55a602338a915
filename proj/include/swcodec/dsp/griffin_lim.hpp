// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swcodec/dsp/mel.hpp"

namespace swc::dsp {

/// Pseudo-inverse of the mel filterbank with negative entries clamped to zero,
/// (fft/2 + 1) x n_mels. Maps mel power back to an approximate linear power
/// spectrum.
MatF mel_pseudo_inverse(const MelConfig& cfg, int sample_rate);

/// Linear magnitude spectrogram estimated from a log-power mel, frames x bins.
MatF mel_to_linear_magnitude(const MelSpectrogram& mel, const MelConfig& cfg, int sample_rate);

// Iterative phase reconstruction against a target magnitude. Phase starts
// from a fixed-seed draw, so the result is deterministic. Returns a waveform
// of frames * hop samples aligned with the centered STFT convention.
AudioBuffer griffin_lim(const MelSpectrogram& mel, const MelConfig& cfg, int iters,
                        int sample_rate = 16000);

/// Phase matrix after `iters` Griffin-Lim rounds for the given magnitude
/// target; used by the training path, which keeps phase fixed.
MatF griffin_lim_phase(const MatF& magnitude, const MelConfig& cfg, int iters);

} // namespace swc::dsp
