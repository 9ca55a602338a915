// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swcodec/audio.hpp"
#include "swcodec/types.hpp"

namespace swc::dsp {

/// Periodic Hann window of the given length.
VecF hann_periodic(Index length);

/// The analysis window centered and zero-padded to fft_size.
VecF padded_window(Index win, Index fft_size);

/// Frame count of a centered STFT: ceil(len / hop).
Index stft_frames(Index len, Index hop);

/// Reflect-pads by fft/2 on the left and enough on the right for the last
/// frame, so frame t covers the window centered at sample t*hop.
VecF center_pad(const VecF& x, Index fft_size, Index hop);

// Short-time Fourier transform of mono audio, one-sided spectrum, frames x
// (fft/2 + 1). Frames are centered via reflect padding; the window is a
// periodic Hann of length `win` zero-padded into the fft buffer.
MatC stft(const AudioBuffer& audio, Index fft_size, Index hop, Index win);

/// STFT of an already padded signal, no additional padding. Frame t covers
/// padded[t*hop, t*hop + fft).
MatC stft_padded(const VecF& padded, Index frames, Index fft_size, Index hop, Index win);

/// Weighted overlap-add inverse of stft_padded; returns a signal of length
/// (frames-1)*hop + fft in the padded domain.
VecF istft_padded(const MatC& spec, Index fft_size, Index hop, Index win);

MatF magnitudes(const MatC& spec);

} // namespace swc::dsp
