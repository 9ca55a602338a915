// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "swcodec/nn/tape.hpp"

namespace swc::nn {

/// Linear warmup to `peak`, then cosine decay to zero at `total`. Clamps
/// outside [0, total].
inline double cosine_lr(int64_t step, int64_t total, int64_t warmup, double peak) {
  if (step <= 0) return 0.0;
  if (step >= total) return 0.0;
  if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return peak * 0.5 * (1.0 + std::cos(M_PI * progress));
}

// AdamW with decoupled weight decay. Moment buffers are kept per parameter in
// registration order, which also fixes the checkpoint layout.
template <typename S>
class AdamW {
public:
  struct Config {
    double beta1 = 0.8;
    double beta2 = 0.99;
    double weight_decay = 0.01;
    double eps = 1e-8;
  };

  explicit AdamW(std::vector<Parameter<S>*> params, Config cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (const auto* p : params_) {
      m_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  int64_t step_count() const { return step_; }
  const std::vector<Parameter<S>*>& params() const { return params_; }
  std::vector<Mat<S>>& first_moments() { return m_; }
  std::vector<Mat<S>>& second_moments() { return v_; }
  void set_step_count(int64_t s) { step_ = s; }

  void zero_grads() {
    for (auto* p : params_) p->zero_grad();
  }

  /// One update from the gradients accumulated in the parameters.
  void step(double lr) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter<S>& p = *params_[i];
      require_runtime(p.grad.allFinite(),
                      "adamw: non-finite gradient for parameter '" + p.name + "'");
      m_[i] = S(cfg_.beta1) * m_[i] + S(1.0 - cfg_.beta1) * p.grad;
      v_[i] = (S(cfg_.beta2) * v_[i].array() +
               S(1.0 - cfg_.beta2) * p.grad.array().square())
                  .matrix();
      const Mat<S> mhat = m_[i] / S(bc1);
      const Mat<S> vhat = v_[i] / S(bc2);
      p.value -= (S(lr) * mhat.array() / (vhat.array().sqrt() + S(cfg_.eps))).matrix();
      p.value -= S(lr * cfg_.weight_decay) * p.value;
    }
  }

private:
  std::vector<Parameter<S>*> params_;
  Config cfg_;
  std::vector<Mat<S>> m_, v_;
  int64_t step_ = 0;
};

} // namespace swc::nn
