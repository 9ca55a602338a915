// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "swcodec/audio.hpp"
#include "swcodec/rng.hpp"

namespace swc::train {

struct Manifest {
  std::vector<std::string> paths; // resolved against the manifest's directory
};

/// Text manifest: one WAV path per line, '#' comments and blank lines
/// ignored. Relative entries are resolved against the manifest's directory.
Manifest load_manifest(const std::string& path);

struct Segment {
  AudioBuffer audio;   // exactly the requested length
  std::string source;  // originating file
  bool padded = false; // file was shorter than the segment and got zero-padded
};

// Seeded random file pick + random crop. Decoded files are cached, so the
// stream state is exactly (manifest, segment length, rng state) and a resumed
// run replays the same segments the uninterrupted run saw.
class SegmentStream {
public:
  SegmentStream(Manifest manifest, Index segment_samples, uint64_t seed);

  Segment next();

  Rng& rng() { return rng_; } // checkpointed by the trainer

private:
  const AudioBuffer& fetch(size_t file_idx);

  Manifest manifest_;
  Index segment_samples_;
  Rng rng_;
  std::vector<std::unique_ptr<AudioBuffer>> cache_;
};

} // namespace swc::train
