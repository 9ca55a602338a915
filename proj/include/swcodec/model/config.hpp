// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swcodec/common.hpp"
#include "swcodec/dsp/mel.hpp"
#include "swcodec/types.hpp"

namespace swc::model {

// Encoder/decoder dimensions plus the two architectural ablation flags. The
// defaults are the toy size used by the tests; config presets carry the
// full-size variant.
struct ModelConfig {
  Index n_mels = 40;
  Index d_model = 64;
  Index n_layers = 2;
  Index n_heads = 4;
  bool use_stem_gelu = false;
  bool use_abs_pe = false;
  bool frozen_encoder = true;

  void validate() const {
    require(n_mels >= 1 && d_model >= 1, "model: dimensions must be positive");
    require(n_layers >= 1, "model: n_layers must be >= 1");
    require(n_heads >= 1, "model: n_heads must be >= 1");
    require(d_model % n_heads == 0, "model: d_model " + std::to_string(d_model) +
                                        " not divisible by n_heads " + std::to_string(n_heads));
    require(d_model % 2 == 0, "model: d_model must be even for sinusoidal encodings");
  }
};

// Quantizer lattice: per-group level counts and the group count. The implicit
// codebook is the product of levels; nothing is learned.
struct FSQSpec {
  std::vector<int> levels = {8, 7, 6, 6};
  Index n_groups = 8;

  Index dims_per_group() const { return static_cast<Index>(levels.size()); }
  Index code_dim() const { return n_groups * dims_per_group(); }

  int64_t codebook_size() const {
    int64_t n = 1;
    for (int l : levels) n *= l;
    return n;
  }

  double bits_per_group() const { return std::log2(static_cast<double>(codebook_size())); }

  /// Logical bitrate in bits/s at the given token frame rate.
  double bitrate(double frame_rate) const {
    return static_cast<double>(n_groups) * bits_per_group() * frame_rate;
  }

  void validate() const {
    require(!levels.empty(), "fsq: levels list is empty");
    for (int l : levels)
      require(l >= 2, "fsq: every level must be >= 2, got " + std::to_string(l));
    require(n_groups >= 1, "fsq: n_groups must be >= 1");
    require(codebook_size() < 65536, "fsq: codebook too large for u16 token storage");
  }
};

struct LossWeights {
  double recon = 15.0;
  double adv = 1.0;
  double feat = 2.0;
  double eps = 1e-7; // feature-matching denominator guard

  void validate() const {
    require(std::isfinite(recon) && std::isfinite(adv) && std::isfinite(feat),
            "loss weights must be finite");
    require(recon >= 0.0 && adv >= 0.0 && feat >= 0.0, "loss weights must be non-negative");
    require(eps > 0.0, "loss eps must be positive");
  }
};

struct TrainConfig {
  int64_t steps = 2000;
  int64_t warmup = 100;
  Index batch_size = 4;
  Index grad_accum = 1;
  double segment_seconds = 4.0;
  double peak_lr = 1e-4;
  uint64_t seed = 0;
  LossWeights weights;
  bool freeze_encoder = true;
  int gl_iters = 2;           // phase-estimation rounds inside the training synthesizer
  int64_t checkpoint_every = 0; // 0 = only at the end

  void validate() const {
    require(steps > warmup, "train: steps must exceed warmup");
    require(warmup >= 1, "train: warmup must be >= 1");
    require(batch_size >= 1 && grad_accum >= 1, "train: batch_size and grad_accum must be >= 1");
    require(segment_seconds > 0.0, "train: segment_seconds must be positive");
    require(peak_lr > 0.0, "train: peak_lr must be positive");
    require(gl_iters >= 1, "train: gl_iters must be >= 1");
    require(checkpoint_every >= 0, "train: checkpoint_every must be >= 0");
    weights.validate();
  }
};

// Everything one run needs, composed from a single key-value file plus
// dotted-path overrides.
struct RunConfig {
  ModelConfig model;
  FSQSpec fsq;
  dsp::MelConfig mel; // codec front end; n_mels is slaved to model.n_mels
  TrainConfig train;
  int sample_rate = 16000;
  std::string manifest;
  std::string run_dir = "runs/default";

  void validate() const {
    model.validate();
    fsq.validate();
    mel.validate(sample_rate);
    train.validate();
    require(mel.n_mels == model.n_mels, "config: mel.n_mels must equal model.n_mels");
  }
};

/// The toy configuration every test uses.
RunConfig default_run_config();

/// The full-size configuration as a named preset; never run in CI.
RunConfig paper_run_config();

/// Applies one dotted-path override, e.g. "train.steps=500". Unknown keys and
/// unparsable values raise ConfigError.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Parses "key = value" lines ('#' comments, blank lines ignored). A
// "preset = desk|paper" line switches the base configuration and must come
// before other keys. The result is validated.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Serializes every key so that parse_config_text round-trips the config.
std::string serialize_config(const RunConfig& cfg);

} // namespace swc::model
