// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "swcodec/analysis/f0.hpp"
#include "swcodec/types.hpp"

namespace swc::analysis {

/// Maps one clip to per-layer feature matrices (frames x dims). All clips
/// must yield the same layer count and widths; every layer shares one frame
/// rate, supplied alongside.
using FeatureExtractor = std::function<std::vector<MatD>(const AudioBuffer&)>;

struct ProbeRecord {
  Index layer = 0;
  double pcc = 0.0;    // Pearson correlation on held-out voiced frames
  Index n_frames = 0;  // held-out voiced frames scored
};

/// Linear pitch probe. For each layer, fits ridge regression from
/// standardized features to f0 on the voiced frames of the training split
/// and reports the Pearson correlation on the held-out split. The split is
/// deterministic by clip index: every fifth clip is held out. Feature frames
/// map to pitch frames by nearest time.
std::vector<ProbeRecord> probe_f0(const FeatureExtractor& features,
                                  double feature_rate,
                                  const std::vector<PitchClip>& corpus,
                                  double lambda = 1.0);

} // namespace swc::analysis
