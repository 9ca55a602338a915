// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "swcodec/model/layers.hpp"
#include "swcodec/nn/ops.hpp"

namespace swc::loss {

// The adversarial critics. Multi-period discriminators fold the waveform into
// period-phase columns and share one conv stack across the columns;
// multi-scale discriminators run a wider stack on average-pooled copies.
// Every sub-discriminator exposes its four intermediate activation maps for
// the feature-matching loss. The channel plan (1 -> 8 -> 16 -> 32 -> 32) is
// the desk-scale one; only the count and kinds of critics are contractual.
//
// Critic convs use fan-in-scaled init rather than the fixed transformer
// stddev: four stacked 0.02-sigma convs attenuate a unit input to ~1e-4,
// leaving the critics nearly blind at the start of adversarial training.

inline double critic_w_std(Index k, Index cin) {
  return std::sqrt(2.0 / static_cast<double>(k * cin));
}

template <typename S>
struct DiscOut {
  nn::Var<S> score;                // 1-channel map, shape varies per critic
  std::vector<nn::Var<S>> feats;   // the four conv activations, in depth order
};

template <typename S>
class PeriodDisc {
public:
  PeriodDisc(Index period, Rng& rng) : period_(period) {
    const std::string base = "disc.p" + std::to_string(period);
    const Index ch[] = {1, 8, 16, 32, 32};
    for (int j = 0; j < 4; ++j)
      convs_.emplace_back(base + ".conv" + std::to_string(j), ch[j], ch[j + 1], 5, 3, 1, rng,
                          critic_w_std(5, ch[j]));
    post_ = model::Conv1dLayer<S>(base + ".post", 32, 1, 3, 1, 1, rng, critic_w_std(3, 32));
  }

  DiscOut<S> forward(nn::Tape<S>& t, nn::Var<S> wave) {
    const Index usable = (wave.rows() / period_) * period_;
    require(usable >= 2 * period_,
            "discriminator: waveform too short for period " + std::to_string(period_));
    // Row r, column c of the folded view is sample r*period + c, so each
    // column collects one phase class; the stack runs per column with shared
    // weights.
    nn::Var<S> folded = nn::reshape(nn::slice_rows(wave, 0, usable), usable / period_, period_);
    std::vector<std::vector<nn::Var<S>>> levels(4);
    std::vector<nn::Var<S>> scores;
    for (Index c = 0; c < period_; ++c) {
      nn::Var<S> h = nn::slice_cols(folded, c, 1);
      for (int j = 0; j < 4; ++j) {
        h = nn::leaky_relu(convs_[static_cast<size_t>(j)].forward(t, h), S(0.1));
        levels[static_cast<size_t>(j)].push_back(h);
      }
      scores.push_back(post_.forward(t, h));
    }
    DiscOut<S> out;
    for (auto& level : levels) out.feats.push_back(nn::concat_cols<S>(level));
    out.score = nn::concat_cols<S>(scores);
    return out;
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    for (auto& c : convs_) c.collect(out);
    post_.collect(out);
  }

private:
  Index period_;
  std::vector<model::Conv1dLayer<S>> convs_;
  model::Conv1dLayer<S> post_;
};

template <typename S>
class ScaleDisc {
public:
  ScaleDisc(Index pool, Rng& rng) : pool_(pool) {
    const std::string base = "disc.s" + std::to_string(pool);
    const Index ch[] = {1, 8, 16, 32, 32};
    for (int j = 0; j < 4; ++j)
      convs_.emplace_back(base + ".conv" + std::to_string(j), ch[j], ch[j + 1], 15, 4, 1, rng,
                          critic_w_std(15, ch[j]));
    post_ = model::Conv1dLayer<S>(base + ".post", 32, 1, 3, 1, 1, rng, critic_w_std(3, 32));
  }

  DiscOut<S> forward(nn::Tape<S>& t, nn::Var<S> wave) {
    nn::Var<S> h = pool_ > 1 ? nn::avg_pool_rows(wave, pool_) : wave;
    DiscOut<S> out;
    for (auto& conv : convs_) {
      h = nn::leaky_relu(conv.forward(t, h), S(0.1));
      out.feats.push_back(h);
    }
    out.score = post_.forward(t, h);
    return out;
  }

  void collect(std::vector<nn::Parameter<S>*>& out) {
    for (auto& c : convs_) c.collect(out);
    post_.collect(out);
  }

private:
  Index pool_;
  std::vector<model::Conv1dLayer<S>> convs_;
  model::Conv1dLayer<S> post_;
};

/// Five period critics (2, 3, 5, 7, 11) and three scale critics (1x, 2x, 4x).
template <typename S>
class DiscriminatorBank {
public:
  explicit DiscriminatorBank(Rng& rng) {
    for (Index p : {2, 3, 5, 7, 11}) periods_.emplace_back(p, rng);
    for (Index q : {1, 2, 4}) scales_.emplace_back(q, rng);
  }

  std::vector<DiscOut<S>> forward(nn::Tape<S>& t, nn::Var<S> wave) {
    require(wave.cols() == 1, "discriminator: expected a single-column waveform");
    require(wave.rows() >= 64, "discriminator: waveform too short, got " +
                                   std::to_string(wave.rows()) + " samples");
    std::vector<DiscOut<S>> out;
    for (auto& d : periods_) out.push_back(d.forward(t, wave));
    for (auto& d : scales_) out.push_back(d.forward(t, wave));
    return out;
  }

  std::vector<nn::Parameter<S>*> parameters() {
    std::vector<nn::Parameter<S>*> out;
    for (auto& d : periods_) d.collect(out);
    for (auto& d : scales_) d.collect(out);
    return out;
  }

  static constexpr Index kCount = 8; // sub-discriminators
  static constexpr Index kFeats = 4; // feature maps per sub-discriminator

private:
  std::vector<PeriodDisc<S>> periods_;
  std::vector<ScaleDisc<S>> scales_;
};

} // namespace swc::loss
