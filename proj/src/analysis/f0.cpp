// SPDX-License-Identifier: Apache-2.0

#include "swcodec/analysis/f0.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "swcodec/common.hpp"
#include "swcodec/rng.hpp"

namespace swc::analysis {

namespace {

constexpr double kWindowSec = 0.025;
constexpr double kHopSec = 0.010;
constexpr double kFloorHz = 60.0;
constexpr double kCeilHz = 500.0;
constexpr double kVoicedCorr = 0.5;
constexpr double kVoicedRms = 1e-3;

} // namespace

PitchTrack extract_f0(const AudioBuffer& audio) {
  const double sr = audio.sample_rate;
  const auto win = static_cast<Index>(std::lround(kWindowSec * sr));
  const auto hop = static_cast<Index>(std::lround(kHopSec * sr));
  const auto lag_min = static_cast<Index>(std::ceil(sr / kCeilHz));
  const auto lag_max = static_cast<Index>(std::floor(sr / kFloorHz));
  const Index n = audio.samples.size();
  const Index frames =
      n >= win + lag_max ? (n - win - lag_max) / hop + 1 : 0;

  PitchTrack track;
  track.frame_rate = 1.0 / kHopSec;
  track.f0 = VecD::Zero(frames);
  track.voiced.assign(static_cast<size_t>(frames), false);

  VecD corr(lag_max + 1);
  for (Index m = 0; m < frames; ++m) {
    const VecD seg =
        audio.samples.segment(m * hop, win + lag_max).cast<double>();
    const VecD head = seg.head(win);
    const double rms = std::sqrt(head.squaredNorm() / static_cast<double>(win));
    const double norm0 = head.norm();
    double best = -1.0;
    for (Index lag = lag_min; lag <= lag_max; ++lag) {
      const VecD shifted = seg.segment(lag, win);
      corr[lag] =
          head.dot(shifted) / std::max(norm0 * shifted.norm(), 1e-300);
      best = std::max(best, corr[lag]);
    }
    // A periodic frame correlates almost equally at the true lag and its
    // multiples; taking the shortest near-tied local peak avoids octave-down
    // errors.
    Index pick = 0;
    for (Index lag = lag_min; lag <= lag_max; ++lag) {
      const bool local_peak = (lag == lag_min || corr[lag] >= corr[lag - 1]) &&
                              (lag == lag_max || corr[lag] >= corr[lag + 1]);
      if (local_peak && corr[lag] >= 0.97 * best) {
        pick = lag;
        break;
      }
    }
    if (pick == 0 || corr[pick] <= kVoicedCorr || rms <= kVoicedRms) continue;

    double lag_hat = static_cast<double>(pick);
    if (pick > lag_min && pick < lag_max) {
      const double a = corr[pick - 1], b = corr[pick], c = corr[pick + 1];
      const double denom = a - 2.0 * b + c;
      if (std::abs(denom) > 1e-12) {
        const double delta = 0.5 * (a - c) / denom;
        if (std::abs(delta) <= 1.0) lag_hat += delta;
      }
    }
    track.f0[m] = sr / lag_hat;
    track.voiced[static_cast<size_t>(m)] = true;
  }
  return track;
}

void save_f0(const std::string& path, const PitchTrack& track) {
  std::ofstream out(path);
  require(out.good(), "f0: cannot write '" + path + "'");
  for (Index m = 0; m < track.f0.size(); ++m) {
    char line[64];
    std::snprintf(line, sizeof(line), "%.6f %.4f %d\n",
                  static_cast<double>(m) / track.frame_rate, track.f0[m],
                  track.voiced[static_cast<size_t>(m)] ? 1 : 0);
    out << line;
  }
  require(out.good(), "f0: write to '" + path + "' failed");
}

PitchTrack load_f0(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "f0: cannot open '" + path + "'");
  std::vector<double> times, freqs;
  std::vector<bool> voiced;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    double t = 0.0, f = 0.0;
    int v = 0;
    fields >> t >> f >> v;
    require(!fields.fail() && (v == 0 || v == 1),
            "f0: '" + path + "' line " + std::to_string(line_no) +
                ": expected 'time_sec f0_hz voiced_flag'");
    times.push_back(t);
    freqs.push_back(f);
    voiced.push_back(v == 1);
  }
  require(!times.empty(), "f0: '" + path + "' holds no frames");
  PitchTrack track;
  track.f0 = Eigen::Map<const VecD>(freqs.data(), static_cast<Index>(freqs.size()));
  track.voiced = voiced;
  if (times.size() >= 2 && times[1] > times[0])
    track.frame_rate = 1.0 / (times[1] - times[0]);
  return track;
}

std::vector<PitchClip> synthetic_pitch_corpus(int clips, double seconds, uint64_t seed) {
  require(clips > 0, "corpus: need at least one clip");
  require(seconds > 0.1, "corpus: clips must be longer than 0.1 s");
  constexpr int sr = 16000;
  constexpr double vib_hz = 5.0, vib_depth = 0.03;
  Rng rng(seed);
  std::vector<PitchClip> out;
  out.reserve(static_cast<size_t>(clips));
  for (int c = 0; c < clips; ++c) {
    const double f0 = rng.uniform(100.0, 400.0);
    const double vib_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    // Keep every partial comfortably below Nyquist at peak vibrato.
    const int harmonics = std::min(
        5, static_cast<int>(7000.0 / (f0 * (1.0 + vib_depth))));
    std::vector<double> amp(static_cast<size_t>(harmonics)),
        pha(static_cast<size_t>(harmonics));
    for (int k = 0; k < harmonics; ++k) {
      amp[static_cast<size_t>(k)] = 0.5 / (k + 1);
      pha[static_cast<size_t>(k)] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const auto n = static_cast<Index>(std::lround(seconds * sr));
    PitchClip clip;
    clip.audio.sample_rate = sr;
    clip.audio.samples = VecF::Zero(n);
    double phase = 0.0;
    auto inst_f0 = [&](double t) {
      return f0 * (1.0 + vib_depth *
                             std::sin(2.0 * std::numbers::pi * vib_hz * t + vib_phase));
    };
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = 0; k < harmonics; ++k)
        s += amp[static_cast<size_t>(k)] *
             std::sin((k + 1) * phase + pha[static_cast<size_t>(k)]);
      clip.audio.samples[i] = static_cast<float>(
          0.3 * s + 0.002 * rng.normal());
      phase += 2.0 * std::numbers::pi * inst_f0(static_cast<double>(i) / sr) / sr;
    }
    const auto truth_frames = static_cast<Index>(std::floor(seconds * 100.0));
    clip.truth.frame_rate = 100.0;
    clip.truth.f0 = VecD::Zero(truth_frames);
    clip.truth.voiced.assign(static_cast<size_t>(truth_frames), true);
    for (Index m = 0; m < truth_frames; ++m)
      clip.truth.f0[m] = inst_f0(static_cast<double>(m) / 100.0);
    out.push_back(std::move(clip));
  }
  return out;
}

} // namespace swc::analysis
