// SPDX-License-Identifier: Apache-2.0

#include "swcodec/analysis/probe.hpp"

#include <cmath>

#include "swcodec/analysis/metrics.hpp"
#include "swcodec/common.hpp"

namespace swc::analysis {

namespace {

struct Split {
  std::vector<MatD> x;  // per layer, rows are voiced frames
  VecD y;
};

// Stack voiced-frame features and targets for the chosen clips.
Split gather(const std::vector<std::vector<MatD>>& feats,
             const std::vector<PitchClip>& corpus, double feature_rate,
             const std::vector<size_t>& clip_ids, const char* split_name) {
  const size_t layers = feats.front().size();
  std::vector<std::vector<Index>> rows(clip_ids.size());
  std::vector<double> targets;
  for (size_t c = 0; c < clip_ids.size(); ++c) {
    const auto& truth = corpus[clip_ids[c]].truth;
    const Index frames = feats[clip_ids[c]].front().rows();
    for (Index i = 0; i < frames; ++i) {
      const double t = static_cast<double>(i) / feature_rate;
      const auto j = static_cast<Index>(std::llround(t * truth.frame_rate));
      if (j >= truth.f0.size() || !truth.voiced[static_cast<size_t>(j)]) continue;
      rows[c].push_back(i);
      targets.push_back(truth.f0[j]);
    }
  }
  require(targets.size() >= 2, std::string("probe: no voiced frames in the ") +
                                   split_name + " split");
  Split out;
  out.y = Eigen::Map<const VecD>(targets.data(), static_cast<Index>(targets.size()));
  out.x.resize(layers);
  for (size_t l = 0; l < layers; ++l) {
    MatD x(out.y.size(), feats.front()[l].cols());
    Index r = 0;
    for (size_t c = 0; c < clip_ids.size(); ++c)
      for (Index i : rows[c]) x.row(r++) = feats[clip_ids[c]][l].row(i);
    out.x[l] = std::move(x);
  }
  return out;
}

} // namespace

std::vector<ProbeRecord> probe_f0(const FeatureExtractor& features,
                                  double feature_rate,
                                  const std::vector<PitchClip>& corpus,
                                  double lambda) {
  require(feature_rate > 0.0, "probe: feature rate must be positive");
  require(corpus.size() >= 5, "probe: need at least 5 clips for the 80/20 split");

  std::vector<std::vector<MatD>> feats(corpus.size());
  for (size_t c = 0; c < corpus.size(); ++c) {
    feats[c] = features(corpus[c].audio);
    require(!feats[c].empty(), "probe: extractor yielded no layers");
    require(feats[c].size() == feats[0].size(),
            "probe: layer count differs between clips");
    for (size_t l = 0; l < feats[c].size(); ++l)
      require(feats[c][l].cols() == feats[0][l].cols(),
              "probe: feature width differs between clips");
  }

  std::vector<size_t> train_ids, test_ids;
  for (size_t c = 0; c < corpus.size(); ++c)
    (c % 5 == 4 ? test_ids : train_ids).push_back(c);

  const Split train = gather(feats, corpus, feature_rate, train_ids, "training");
  const Split test = gather(feats, corpus, feature_rate, test_ids, "held-out");

  std::vector<ProbeRecord> records;
  for (size_t l = 0; l < feats[0].size(); ++l) {
    const Eigen::RowVectorXd mu = train.x[l].colwise().mean();
    Eigen::RowVectorXd sd =
        ((train.x[l].rowwise() - mu).colwise().squaredNorm() /
         static_cast<double>(train.x[l].rows()))
            .cwiseSqrt();
    sd = sd.cwiseMax(1e-8);
    const MatD xs_train =
        (train.x[l].rowwise() - mu).array().rowwise() / sd.array();
    const MatD xs_test =
        (test.x[l].rowwise() - mu).array().rowwise() / sd.array();
    const RidgeModel model = ridge_fit(xs_train, train.y, lambda);
    const VecD pred = ridge_predict(model, xs_test);
    records.push_back({static_cast<Index>(l), pearson(pred, test.y), test.y.size()});
  }
  return records;
}

} // namespace swc::analysis
