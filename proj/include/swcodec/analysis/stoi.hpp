// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swcodec/audio.hpp"

namespace swc::analysis {

/// Short-time objective intelligibility of `degraded` against `reference`.
///
/// Both signals must be 16 kHz; they are truncated to the shorter length.
/// Band envelopes come from 256-sample Hann frames hopped by 128 (zero-padded
/// to a 512 FFT), grouped into 15 one-third-octave bands from 150 Hz. Frames
/// more than 40 dB below the loudest reference frame are dropped from both
/// signals, then each band is scored over sliding 48-frame windows (384 ms)
/// with a clipped, normalized correlation. Score is the mean over bands and
/// windows, in [-1, 1]; identical inputs score 1. The scale is gain-invariant.
double stoi(const AudioBuffer& reference, const AudioBuffer& degraded);

} // namespace swc::analysis
