// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "swcodec/common.hpp"
#include "swcodec/types.hpp"

namespace swc {

/// Mono PCM audio. Samples live in [-1, 1]; ingestion rejects anything else.
struct AudioBuffer {
  VecF samples;
  int sample_rate = 16000;

  Index size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Validates the ingestion invariants: finite samples in [-1, 1], positive rate.
void validate_audio(const AudioBuffer& audio);

/// Reads a mono 16 kHz PCM16 little-endian WAV. Anything else is rejected.
AudioBuffer load_wav(const std::string& path);

/// Writes mono PCM16; samples are clamped to [-1, 1] before conversion.
void save_wav(const std::string& path, const AudioBuffer& audio);

} // namespace swc
