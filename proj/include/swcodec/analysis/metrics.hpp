// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "swcodec/common.hpp"
#include "swcodec/types.hpp"

namespace swc::analysis {

// Excess diagonal attention mass over the uniform baseline, head-averaged:
// mean_t A[t,t] - 1/T. Identity attention scores 1 - 1/T, uniform scores 0.
// The statistic is a stand-in; only ordinal comparisons between encoder
// variants are claimed.
inline double diag_dominance(const std::vector<MatD>& head_maps) {
  require(!head_maps.empty(), "dominance: no attention maps");
  const Index t = head_maps.front().rows();
  require(t >= 2, "dominance: need at least 2 frames");
  MatD avg = MatD::Zero(t, t);
  for (const MatD& m : head_maps) {
    require(m.rows() == t && m.cols() == t, "dominance: attention maps must be square and equal");
    avg += m;
  }
  avg /= static_cast<double>(head_maps.size());
  return avg.diagonal().mean() - 1.0 / static_cast<double>(t);
}

inline double pearson(const VecD& a, const VecD& b) {
  require(a.size() == b.size(), "pearson: length mismatch");
  require(a.size() >= 2, "pearson: need at least 2 points");
  const VecD ac = a.array() - a.mean();
  const VecD bc = b.array() - b.mean();
  const double na = ac.norm(), nb = bc.norm();
  require(na > 0.0 && nb > 0.0, "pearson: zero-variance input");
  return ac.dot(bc) / (na * nb);
}

struct RidgeModel {
  VecD weights;
  double bias = 0.0;
};

/// Closed-form ridge on centered data: (XcᵀXc + λI)⁻¹ Xcᵀ yc, bias from the
/// means. λ = 0 solves ordinary least squares and is refused when singular.
inline RidgeModel ridge_fit(const MatD& x, const VecD& y, double lambda) {
  require(x.rows() == y.size(), "ridge: feature/target row mismatch");
  require(x.rows() >= 2, "ridge: need at least 2 rows");
  require(lambda >= 0.0, "ridge: lambda must be >= 0");
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const double ym = y.mean();
  const MatD xc = x.rowwise() - mu;
  MatD a = xc.transpose() * xc;
  a.diagonal().array() += lambda;
  const VecD rhs = xc.transpose() * (y.array() - ym).matrix();
  RidgeModel m;
  if (lambda == 0.0) {
    const Eigen::FullPivLU<MatD> lu(a);
    require(lu.isInvertible(),
            "ridge: normal equations are singular at lambda = 0; use lambda > 0");
    m.weights = lu.solve(rhs);
  } else {
    m.weights = a.ldlt().solve(rhs);
  }
  m.bias = ym - mu.dot(m.weights);
  return m;
}

inline VecD ridge_predict(const RidgeModel& m, const MatD& x) {
  require(x.cols() == m.weights.size(), "ridge: feature width mismatch");
  return ((x * m.weights).array() + m.bias).matrix();
}

} // namespace swc::analysis
