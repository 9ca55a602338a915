// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/loss/discriminator.hpp"
#include "swcodec/model/config.hpp"

namespace swc::loss {

// Least-squares adversarial objectives. Each critic's score map is averaged
// to one scalar first and the squared error is taken on that scalar; the
// final value averages over critics.

template <typename S>
nn::Var<S> disc_loss(nn::Tape<S>& t, const std::vector<DiscOut<S>>& real,
                     const std::vector<DiscOut<S>>& fake) {
  require(!real.empty() && real.size() == fake.size(),
          "disc loss: real and fake critic counts differ");
  nn::Var<S> total = t.scalar(S(0));
  for (size_t i = 0; i < real.size(); ++i) {
    nn::Var<S> real_term = nn::square(nn::add_scalar(nn::mean(real[i].score), S(-1)));
    nn::Var<S> fake_term = nn::square(nn::mean(fake[i].score));
    total = nn::add(total, nn::add(real_term, fake_term));
  }
  return nn::mul_scalar(total, S(1) / static_cast<S>(real.size()));
}

template <typename S>
nn::Var<S> gen_adv_loss(nn::Tape<S>& t, const std::vector<DiscOut<S>>& fake) {
  require(!fake.empty(), "adv loss: no critic outputs");
  nn::Var<S> total = t.scalar(S(0));
  for (const DiscOut<S>& out : fake)
    total = nn::add(total, nn::square(nn::add_scalar(nn::mean(out.score), S(-1))));
  return nn::mul_scalar(total, S(1) / static_cast<S>(fake.size()));
}

/// Mean over critics and depths of the L1 gap between real and fake feature
/// maps, each normalized by the real map's total magnitude (plus a guard), so
/// the loss is invariant to the scale of a layer's activations.
template <typename S>
nn::Var<S> feat_match_loss(nn::Tape<S>& t, const std::vector<DiscOut<S>>& real,
                           const std::vector<DiscOut<S>>& fake, double eps) {
  require(!real.empty() && real.size() == fake.size(),
          "feat loss: real and fake critic counts differ");
  nn::Var<S> total = t.scalar(S(0));
  Index terms = 0;
  for (size_t i = 0; i < real.size(); ++i) {
    require(real[i].feats.size() == fake[i].feats.size(),
            "feat loss: feature depth mismatch");
    for (size_t j = 0; j < real[i].feats.size(); ++j) {
      const S denom =
          static_cast<S>(real[i].feats[j].value().cwiseAbs().sum() + static_cast<S>(eps));
      nn::Var<S> gap = nn::sum(nn::abs(nn::sub(fake[i].feats[j], real[i].feats[j])));
      total = nn::add(total, nn::mul_scalar(gap, S(1) / denom));
      ++terms;
    }
  }
  return nn::mul_scalar(total, S(1) / static_cast<S>(terms));
}

template <typename S>
nn::Var<S> total_gen_loss(nn::Var<S> recon, nn::Var<S> adv, nn::Var<S> feat,
                          const model::LossWeights& w) {
  w.validate();
  return nn::add(nn::add(nn::mul_scalar(recon, static_cast<S>(w.recon)),
                         nn::mul_scalar(adv, static_cast<S>(w.adv))),
                 nn::mul_scalar(feat, static_cast<S>(w.feat)));
}

/// Scalar snapshot of one step's loss terms for logging.
struct LossBreakdown {
  double recon = 0.0;
  double adv = 0.0;
  double feat = 0.0;
  double disc = 0.0;
  double total = 0.0;
};

} // namespace swc::loss
