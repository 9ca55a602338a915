// SPDX-License-Identifier: Apache-2.0
#include "swcodec/dsp/mel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "swcodec/dsp/stft.hpp"

namespace swc::dsp {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

constexpr uint16_t kMelVersion = 1;
constexpr char kMelMagic[6] = {'S', 'W', 'M', 'E', 'L', '\0'};

} // namespace

void MelConfig::validate(int sample_rate) const {
  require(sample_rate > 0, "mel: sample rate must be positive");
  require(fft_size > 0 && hop > 0 && win > 0, "mel: sizes must be positive");
  require(hop <= win && win <= fft_size, "mel: need hop <= win <= fft_size");
  require(n_mels >= 1, "mel: n_mels must be >= 1");
  require(fmin >= 0.0 && fmax > fmin, "mel: need 0 <= fmin < fmax");
  require(fmax <= sample_rate / 2.0, "mel: fmax exceeds Nyquist");
  require(log_floor > 0.0, "mel: log_floor must be positive");
}

MatF mel_filterbank(const MelConfig& cfg, int sample_rate) {
  cfg.validate(sample_rate);
  const Index bins = cfg.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);

  // n_mels + 2 breakpoints; triangle m spans [hz[m], hz[m+2]] peaking at hz[m+1].
  std::vector<double> hz(cfg.n_mels + 2);
  for (Index m = 0; m < cfg.n_mels + 2; ++m)
    hz[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / static_cast<double>(cfg.n_mels + 1));

  MatF fb = MatF::Zero(cfg.n_mels, bins);
  for (Index m = 0; m < cfg.n_mels; ++m) {
    const double lo = hz[m], mid = hz[m + 1], hi = hz[m + 2];
    const double norm = 2.0 / (hi - lo); // area normalization
    for (Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.fft_size;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        w = (hi - f) / (hi - mid);
      fb(m, k) = static_cast<float>(w * norm);
    }
  }
  return fb;
}

MelSpectrogram log_mel(const AudioBuffer& audio, const MelConfig& cfg) {
  cfg.validate(audio.sample_rate);
  const MatC spec = stft(audio, cfg.fft_size, cfg.hop, cfg.win);
  const MatF power = spec.cwiseAbs2();
  const MatF fb = mel_filterbank(cfg, audio.sample_rate);

  MelSpectrogram mel;
  mel.values = (power * fb.transpose())
                   .cwiseMax(static_cast<float>(cfg.log_floor))
                   .array()
                   .log()
                   .matrix();
  mel.frame_rate = static_cast<double>(audio.sample_rate) / cfg.hop;
  return mel;
}

std::vector<MelConfig> multiscale_configs() {
  std::vector<MelConfig> cfgs;
  for (int k = 5; k <= 11; ++k) {
    MelConfig c;
    c.fft_size = Index(1) << k;
    c.win = c.fft_size;
    c.hop = c.fft_size / 4;
    c.n_mels = std::min<Index>(80, c.fft_size / 2);
    c.fmin = 0.0;
    c.fmax = 8000.0;
    cfgs.push_back(c);
  }
  return cfgs;
}

std::vector<MelSpectrogram> multiscale_mels(const AudioBuffer& audio) {
  require(audio.samples.size() >= (Index(1) << 11),
          "multiscale_mels: input shorter than the largest scale (" +
              std::to_string(audio.samples.size()) + " < 2048 samples)");
  std::vector<MelSpectrogram> out;
  for (const MelConfig& c : multiscale_configs()) out.push_back(log_mel(audio, c));
  return out;
}

void save_mel(const std::string& path, const MelSpectrogram& mel) {
  std::ofstream out(path, std::ios::binary);
  require_runtime(out.good(), "mel: cannot write '" + path + "'");
  out.write(kMelMagic, 6);
  const uint16_t version = kMelVersion;
  out.write(reinterpret_cast<const char*>(&version), 2);
  const uint32_t frames = static_cast<uint32_t>(mel.values.rows());
  const uint32_t n_mels = static_cast<uint32_t>(mel.values.cols());
  out.write(reinterpret_cast<const char*>(&frames), 4);
  out.write(reinterpret_cast<const char*>(&n_mels), 4);
  out.write(reinterpret_cast<const char*>(mel.values.data()),
            static_cast<std::streamsize>(sizeof(float)) * mel.values.size());
  require_runtime(out.good(), "mel: write failed for '" + path + "'");
}

MelSpectrogram load_mel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "mel: cannot open '" + path + "'");
  char magic[6];
  in.read(magic, 6);
  require(in.good() && std::memcmp(magic, kMelMagic, 6) == 0,
          "mel: '" + path + "' has wrong magic");
  uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  require(version == kMelVersion,
          "mel: unsupported version " + std::to_string(version) + " in '" + path + "'");
  uint32_t frames = 0, n_mels = 0;
  in.read(reinterpret_cast<char*>(&frames), 4);
  in.read(reinterpret_cast<char*>(&n_mels), 4);
  MelSpectrogram mel;
  mel.values.resize(frames, n_mels);
  in.read(reinterpret_cast<char*>(mel.values.data()),
          static_cast<std::streamsize>(sizeof(float)) * mel.values.size());
  require(in.good(), "mel: truncated payload in '" + path + "'");
  return mel;
}

} // namespace swc::dsp
