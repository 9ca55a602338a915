// SPDX-License-Identifier: Apache-2.0
#include "swcodec/train/data.hpp"

#include <filesystem>
#include <fstream>

namespace swc::train {

namespace fs = std::filesystem;

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "manifest: cannot open '" + path + "'");
  const fs::path base = fs::path(path).parent_path();
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
    line.erase(0, start);
    if (line.empty()) continue;
    fs::path p(line);
    m.paths.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  require(!m.paths.empty(), "manifest: '" + path + "' lists no files");
  return m;
}

SegmentStream::SegmentStream(Manifest manifest, Index segment_samples, uint64_t seed)
    : manifest_(std::move(manifest)), segment_samples_(segment_samples), rng_(seed),
      cache_(manifest_.paths.size()) {
  require(segment_samples_ >= 1, "segment stream: segment length must be >= 1 sample");
}

const AudioBuffer& SegmentStream::fetch(size_t file_idx) {
  if (!cache_[file_idx]) {
    const std::string& path = manifest_.paths[file_idx];
    try {
      cache_[file_idx] = std::make_unique<AudioBuffer>(load_wav(path));
    } catch (const Error& e) {
      throw ConfigError("manifest entry '" + path + "': " + e.what());
    }
  }
  return *cache_[file_idx];
}

Segment SegmentStream::next() {
  const size_t idx = static_cast<size_t>(rng_.bounded(manifest_.paths.size()));
  const AudioBuffer& clip = fetch(idx);
  Segment seg;
  seg.source = manifest_.paths[idx];
  seg.audio.sample_rate = clip.sample_rate;
  seg.audio.samples = VecF::Zero(segment_samples_);
  if (clip.size() >= segment_samples_) {
    const Index start =
        static_cast<Index>(rng_.bounded(static_cast<uint64_t>(clip.size() - segment_samples_ + 1)));
    seg.audio.samples = clip.samples.segment(start, segment_samples_);
  } else {
    seg.audio.samples.head(clip.size()) = clip.samples;
    seg.padded = true;
  }
  return seg;
}

} // namespace swc::train
