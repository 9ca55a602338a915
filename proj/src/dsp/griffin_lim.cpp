// SPDX-License-Identifier: Apache-2.0
#include "swcodec/dsp/griffin_lim.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "swcodec/dsp/stft.hpp"
#include "swcodec/rng.hpp"

namespace swc::dsp {

MatF mel_pseudo_inverse(const MelConfig& cfg, int sample_rate) {
  const MatF fb = mel_filterbank(cfg, sample_rate);
  const MatD fbd = fb.cast<double>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fbd, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double tol = 1e-10 * svd.singularValues()(0);
  Eigen::VectorXd inv_sv = svd.singularValues();
  for (Index i = 0; i < inv_sv.size(); ++i)
    inv_sv[i] = inv_sv[i] > tol ? 1.0 / inv_sv[i] : 0.0;
  MatD pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
  return pinv.cwiseMax(0.0).cast<float>();
}

namespace {

// Nonnegative least squares fb * p ~= m per frame, via multiplicative
// updates. Valid because the filterbank and the targets are nonnegative;
// zeros in the initial point stay zero, so silence inverts to silence.
MatF nnls_power(const MatF& mel_power, const MatF& fb, int iters) {
  const MatF num = mel_power * fb;       // frames x bins
  const MatF gram = fb.transpose() * fb; // bins x bins
  MatF p = num;
  for (int i = 0; i < iters; ++i)
    p = p.cwiseProduct(num.cwiseQuotient((p * gram).array().max(1e-12f).matrix()));
  return p;
}

constexpr int kNnlsIters = 30;
constexpr uint64_t kPhaseSeed = 0x474c5048; // fixed, so synthesis is deterministic

MatF phase_of(const MatC& spec) {
  MatF phase(spec.rows(), spec.cols());
  for (Index i = 0; i < spec.rows(); ++i)
    for (Index j = 0; j < spec.cols(); ++j)
      phase(i, j) = std::arg(spec(i, j));
  return phase;
}

MatC polar(const MatF& mag, const MatF& phase) {
  MatC spec(mag.rows(), mag.cols());
  for (Index i = 0; i < mag.rows(); ++i)
    for (Index j = 0; j < mag.cols(); ++j)
      spec(i, j) = std::polar(mag(i, j), phase(i, j));
  return spec;
}

MatF random_phases(Index rows, Index cols) {
  Rng rng(kPhaseSeed);
  MatF phase(rows, cols);
  for (Index i = 0; i < phase.size(); ++i)
    phase.data()[i] = static_cast<float>(rng.uniform(-M_PI, M_PI));
  return phase;
}

MatF reflect_pad_frames(const MatF& m, Index pad) {
  const Index n = m.rows();
  MatF out(n + 2 * pad, m.cols());
  for (Index i = 0; i < out.rows(); ++i) {
    Index j = i - pad;
    if (n == 1) {
      j = 0;
    } else {
      while (j < 0 || j >= n) {
        if (j < 0) j = -j;
        if (j >= n) j = 2 * n - 2 - j;
      }
    }
    out.row(i) = m.row(j);
  }
  return out;
}

} // namespace

MatF mel_to_linear_magnitude(const MelSpectrogram& mel, const MelConfig& cfg, int sample_rate) {
  require(mel.values.allFinite(), "griffin_lim: mel contains non-finite values");
  require(mel.values.cols() == cfg.n_mels,
          "griffin_lim: mel has " + std::to_string(mel.values.cols()) +
              " bands but the config expects " + std::to_string(cfg.n_mels));
  const MatF fb = mel_filterbank(cfg, sample_rate);
  // The analysis floor is an additive lower bound on power; undo it so cells
  // at the floor invert to genuine silence instead of smeared noise.
  const MatF mel_power =
      (mel.values.array().exp() - static_cast<float>(cfg.log_floor)).cwiseMax(0.0f).matrix();
  return nnls_power(mel_power, fb, kNnlsIters).cwiseSqrt();
}

MatF griffin_lim_phase(const MatF& magnitude, const MelConfig& cfg, int iters) {
  require(iters >= 1, "griffin_lim: iters must be >= 1");
  MatF phase = random_phases(magnitude.rows(), magnitude.cols());
  for (int i = 0; i < iters; ++i) {
    const VecF wave = istft_padded(polar(magnitude, phase), cfg.fft_size, cfg.hop, cfg.win);
    const MatC estimate = stft_padded(wave, magnitude.rows(), cfg.fft_size, cfg.hop, cfg.win);
    phase = phase_of(estimate);
  }
  return phase;
}

AudioBuffer griffin_lim(const MelSpectrogram& mel, const MelConfig& cfg, int iters,
                        int sample_rate) {
  require(iters >= 1, "griffin_lim: iters must be >= 1");
  cfg.validate(sample_rate);
  const MatF magnitude = mel_to_linear_magnitude(mel, cfg, sample_rate);

  // Extend the frame sequence at both ends and discard the margins afterwards;
  // otherwise the overlap-add has thin window coverage near the edges and the
  // division by the window-energy envelope amplifies whatever lands there.
  const Index pad = (cfg.fft_size + cfg.hop - 1) / cfg.hop;
  const MatF mag = reflect_pad_frames(magnitude, pad);
  const Index out_len = mel.values.rows() * cfg.hop;
  const Index offset = cfg.fft_size / 2 + pad * cfg.hop;

  auto synthesize = [&](const VecF& padded) {
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples = padded.segment(offset, out_len).cwiseMax(-1.0f).cwiseMin(1.0f);
    return out;
  };

  // Keep the iterate whose round-trip log-mel error is smallest; extra
  // iterations then can only improve the result.
  const bool can_score = out_len >= cfg.win;
  AudioBuffer best;
  double best_err = std::numeric_limits<double>::infinity();
  MatF phase = random_phases(mag.rows(), mag.cols());
  for (int i = 0; i <= iters; ++i) {
    const VecF wave = istft_padded(polar(mag, phase), cfg.fft_size, cfg.hop, cfg.win);
    AudioBuffer candidate = synthesize(wave);
    if (can_score) {
      const MelSpectrogram got = log_mel(candidate, cfg);
      const double err = (got.values - mel.values).cwiseAbs().mean();
      if (err < best_err) {
        best_err = err;
        best = std::move(candidate);
      }
    } else {
      best = std::move(candidate);
    }
    if (i == iters) break;
    const MatC estimate = stft_padded(wave, mag.rows(), cfg.fft_size, cfg.hop, cfg.win);
    phase = phase_of(estimate);
  }
  return best;
}

} // namespace swc::dsp
