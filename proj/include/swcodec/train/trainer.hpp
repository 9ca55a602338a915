// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "swcodec/dsp/mel.hpp"
#include "swcodec/loss/discriminator.hpp"
#include "swcodec/loss/gan.hpp"
#include "swcodec/loss/melloss.hpp"
#include "swcodec/loss/synth.hpp"
#include "swcodec/model/codec.hpp"
#include "swcodec/nn/optim.hpp"
#include "swcodec/train/checkpoint.hpp"
#include "swcodec/train/data.hpp"

namespace swc::train {

struct StepMetrics {
  int64_t step = 0;
  double lr = 0.0;
  double recon = 0.0, adv = 0.0, feat = 0.0, disc = 0.0, total = 0.0;
};

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// One machine-readable line per step; deliberately timestamp-free so reruns
/// produce byte-identical metrics files.
inline std::string metrics_json(const StepMetrics& m) {
  std::string s = "{\"step\":" + std::to_string(m.step);
  s += ",\"lr\":" + format_double(m.lr);
  s += ",\"recon\":" + format_double(m.recon);
  s += ",\"adv\":" + format_double(m.adv);
  s += ",\"feat\":" + format_double(m.feat);
  s += ",\"disc\":" + format_double(m.disc);
  s += ",\"total\":" + format_double(m.total);
  s += "}";
  return s;
}

// Single-stage adversarial training. Each step draws one deterministic batch,
// updates the critics on (real, detached fake), then updates the generator
// against the refreshed critics; both optimizers share the cosine schedule.
// The critic pass binds no generator parameters and the generator pass never
// steps the critic optimizer, so the two updates cannot leak into each other.
template <typename S>
class Trainer {
public:
  explicit Trainer(const model::RunConfig& cfg, std::ostream* echo = nullptr)
      : cfg_(validated(cfg)), init_rng_(cfg_.train.seed), gen_(cfg_, init_rng_),
        disc_(init_rng_),
        gen_opt_(gen_.trainable_parameters(cfg_.train.freeze_encoder)),
        disc_opt_(disc_.parameters()),
        scales_(loss::multiscale_tape_scales<S>(cfg_.sample_rate)),
        synth_(loss::make_synth_cache<S>(cfg_.mel, cfg_.sample_rate)),
        stream_(load_manifest(cfg_.manifest), segment_samples(cfg_), cfg_.train.seed + 1),
        echo_(echo) {
    require(segment_samples(cfg_) % cfg_.mel.hop == 0,
            "train: segment length must be a whole number of analysis hops");
  }

  static Index segment_samples(const model::RunConfig& cfg) {
    return static_cast<Index>(std::llround(cfg.train.segment_seconds * cfg.sample_rate));
  }

  /// batch_size x grad_accum segments; one optimizer step consumes all of them.
  std::vector<Segment> next_batch() {
    std::vector<Segment> batch;
    const Index n = cfg_.train.batch_size * cfg_.train.grad_accum;
    batch.reserve(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) batch.push_back(stream_.next());
    return batch;
  }

  /// Critic pass: real clips against the current generator's detached output.
  double critic_update(const std::vector<Segment>& batch, double lr) {
    disc_opt_.zero_grads();
    const double inv = 1.0 / static_cast<double>(batch.size());
    double value = 0.0;
    for (const Segment& seg : batch) {
      Mat<S> x_hat;
      {
        nn::Tape<S> tg;
        auto fwd = gen_.forward(tg, tg.constant(mel_of(seg)));
        x_hat = loss::synthesize_tape(fwd.mel_hat, synth_, cfg_.train.gl_iters).value();
      }
      nn::Tape<S> t;
      auto real = disc_.forward(t, t.constant(wave_of(seg)));
      auto fake = disc_.forward(t, t.constant(x_hat));
      nn::Var<S> l = loss::disc_loss(t, real, fake);
      check_term(l.scalar(), "discriminator loss");
      value += l.scalar() * inv;
      t.backward(nn::mul_scalar(l, S(inv)));
    }
    disc_opt_.step(lr);
    return value;
  }

  /// Generator pass against the just-updated critics; fills the loss terms.
  void generator_update(const std::vector<Segment>& batch, StepMetrics& m) {
    gen_opt_.zero_grads();
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const Segment& seg : batch) {
      nn::Tape<S> t;
      auto fwd = gen_.forward(t, t.constant(mel_of(seg)));
      nn::Var<S> wave_hat = loss::synthesize_tape(fwd.mel_hat, synth_, cfg_.train.gl_iters);
      nn::Var<S> recon = loss::recon_loss_tape(t, seg.audio, wave_hat, scales_);
      auto real = disc_.forward(t, t.constant(wave_of(seg)));
      auto fake = disc_.forward(t, wave_hat);
      nn::Var<S> adv = loss::gen_adv_loss(t, fake);
      nn::Var<S> feat = loss::feat_match_loss(t, real, fake, cfg_.train.weights.eps);
      nn::Var<S> total = loss::total_gen_loss(recon, adv, feat, cfg_.train.weights);
      check_term(recon.scalar(), "reconstruction term");
      check_term(adv.scalar(), "adversarial term");
      check_term(feat.scalar(), "feature-matching term");
      m.recon += recon.scalar() * inv;
      m.adv += adv.scalar() * inv;
      m.feat += feat.scalar() * inv;
      m.total += total.scalar() * inv;
      t.backward(nn::mul_scalar(total, S(inv)));
    }
    gen_opt_.step(m.lr);
  }

  StepMetrics train_step() {
    const std::vector<Segment> batch = next_batch();
    ++step_;
    StepMetrics m;
    m.step = step_;
    m.lr = nn::cosine_lr(step_, cfg_.train.steps, cfg_.train.warmup, cfg_.train.peak_lr);
    m.disc = critic_update(batch, m.lr);
    generator_update(batch, m);
    return m;
  }

  /// Runs to cfg.train.steps, streaming metrics and saving checkpoints into
  /// the run directory.
  void run() {
    std::filesystem::create_directories(cfg_.run_dir);
    const std::string metrics_path = cfg_.run_dir + "/metrics.jsonl";
    std::ofstream metrics(metrics_path, step_ == 0 ? std::ios::trunc : std::ios::app);
    require_runtime(metrics.good(), "trainer: cannot write '" + metrics_path + "'");
    bool saved = false;
    while (step_ < cfg_.train.steps) {
      const StepMetrics m = train_step();
      const std::string line = metrics_json(m);
      metrics << line << '\n';
      metrics.flush();
      if (echo_) *echo_ << line << '\n';
      saved = cfg_.train.checkpoint_every > 0 && step_ % cfg_.train.checkpoint_every == 0;
      if (saved) save(checkpoint_path());
    }
    if (!saved) save(checkpoint_path());
  }

  std::string checkpoint_path() const {
    return cfg_.run_dir + "/ckpt_step" + std::to_string(step_) + ".swckpt";
  }

  void save(const std::string& path) {
    Checkpoint c;
    c.step = static_cast<uint64_t>(step_);
    c.config_text = model::serialize_config(cfg_);
    c.rng_state = stream_.rng().serialize();
    c.gen_opt_steps = static_cast<uint64_t>(gen_opt_.step_count());
    c.disc_opt_steps = static_cast<uint64_t>(disc_opt_.step_count());
    for (auto* p : gen_.parameters()) c.records.push_back(make_record(p->name, p->value));
    for (auto* p : disc_.parameters()) c.records.push_back(make_record(p->name, p->value));
    append_moments(c, gen_opt_);
    append_moments(c, disc_opt_);
    save_checkpoint(path, c);
  }

  void load(const std::string& path) {
    const Checkpoint c = load_checkpoint(path);
    require(c.config_text == model::serialize_config(cfg_),
            "checkpoint: '" + path + "' was written under a different configuration");
    std::vector<std::pair<std::string, Mat<S>*>> targets;
    for (auto* p : gen_.parameters()) targets.emplace_back(p->name, &p->value);
    for (auto* p : disc_.parameters()) targets.emplace_back(p->name, &p->value);
    collect_moment_targets(targets, gen_opt_);
    collect_moment_targets(targets, disc_opt_);
    apply_records<S>(c, targets, /*exact_set=*/true);
    step_ = static_cast<int64_t>(c.step);
    gen_opt_.set_step_count(static_cast<int64_t>(c.gen_opt_steps));
    disc_opt_.set_step_count(static_cast<int64_t>(c.disc_opt_steps));
    stream_.rng().deserialize(c.rng_state);
  }

  int64_t step() const { return step_; }
  const model::RunConfig& config() const { return cfg_; }
  model::Generator<S>& generator() { return gen_; }
  loss::DiscriminatorBank<S>& critic() { return disc_; }

private:
  static model::RunConfig validated(model::RunConfig cfg) {
    cfg.validate();
    require(!cfg.manifest.empty(), "train: no manifest configured");
    return cfg;
  }

  Mat<S> mel_of(const Segment& seg) const {
    return dsp::log_mel(seg.audio, cfg_.mel).values.template cast<S>();
  }

  Mat<S> wave_of(const Segment& seg) const {
    return seg.audio.samples.template cast<S>();
  }

  void check_term(double v, const char* term) const {
    require_runtime(std::isfinite(v), "training step " + std::to_string(step_) +
                                          ": non-finite " + std::string(term));
  }

  void append_moments(Checkpoint& c, nn::AdamW<S>& opt) {
    const auto& params = opt.params();
    for (size_t i = 0; i < params.size(); ++i) {
      c.records.push_back(make_record("adam.m." + params[i]->name, opt.first_moments()[i]));
      c.records.push_back(make_record("adam.v." + params[i]->name, opt.second_moments()[i]));
    }
  }

  void collect_moment_targets(std::vector<std::pair<std::string, Mat<S>*>>& targets,
                              nn::AdamW<S>& opt) {
    const auto& params = opt.params();
    for (size_t i = 0; i < params.size(); ++i) {
      targets.emplace_back("adam.m." + params[i]->name, &opt.first_moments()[i]);
      targets.emplace_back("adam.v." + params[i]->name, &opt.second_moments()[i]);
    }
  }

  model::RunConfig cfg_;
  Rng init_rng_;
  model::Generator<S> gen_;
  loss::DiscriminatorBank<S> disc_;
  nn::AdamW<S> gen_opt_, disc_opt_;
  std::vector<loss::MelScale<S>> scales_;
  loss::SynthCache<S> synth_;
  SegmentStream stream_;
  std::ostream* echo_ = nullptr;
  int64_t step_ = 0;
};

/// Rebuilds a generator for inference from a checkpoint alone: the embedded
/// config text names the architecture, the value records fill it in.
template <typename S>
struct LoadedGenerator {
  model::RunConfig cfg;
  model::Generator<S> gen;
};

template <typename S>
LoadedGenerator<S> load_generator(const std::string& path) {
  const Checkpoint c = load_checkpoint(path);
  model::RunConfig cfg = model::parse_config_text(c.config_text);
  Rng rng(cfg.train.seed);
  LoadedGenerator<S> out{cfg, model::Generator<S>(cfg, rng)};
  std::vector<std::pair<std::string, Mat<S>*>> targets;
  for (auto* p : out.gen.parameters()) targets.emplace_back(p->name, &p->value);
  apply_records<S>(c, targets, /*exact_set=*/false);
  return out;
}

} // namespace swc::train
