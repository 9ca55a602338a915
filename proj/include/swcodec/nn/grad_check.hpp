// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "swcodec/nn/ops.hpp"
#include "swcodec/rng.hpp"

namespace swc::nn {

// Compares the reverse-mode gradient of a scalar-valued build function against
// central finite differences, coordinate by coordinate, at 64-bit precision.
// Returns the maximum relative error, with the denominator floored so that
// near-zero gradients compare absolutely.
//
// Coordinates where the finite difference itself fails to converge (the
// estimates at eps and eps/2 disagree) are skipped: there the function is not
// locally smooth, typically because the probe straddles a piecewise-linear
// kink, and no step size yields a trustworthy reference. A wrong analytic
// gradient at a smooth point still produces consistent finite differences and
// is reported.
//
// build receives a fresh tape and the input leaf and must return a 1x1 Var.
inline double grad_check(const std::function<Var<double>(Tape<double>&, Var<double>)>& build,
                         const MatD& x0, double eps = 1e-5, Index max_coords = -1,
                         uint64_t seed = 0) {
  MatD analytic;
  {
    Tape<double> tape;
    Var<double> x = tape.leaf(x0);
    Var<double> loss = build(tape, x);
    tape.backward(loss);
    analytic = tape.grad(x.id);
  }

  std::vector<Index> coords(static_cast<size_t>(x0.size()));
  for (Index i = 0; i < x0.size(); ++i) coords[static_cast<size_t>(i)] = i;
  if (max_coords > 0 && max_coords < x0.size()) {
    Rng rng(seed);
    for (Index i = 0; i < max_coords; ++i) {
      const Index j = i + static_cast<Index>(rng.bounded(static_cast<uint64_t>(x0.size() - i)));
      std::swap(coords[static_cast<size_t>(i)], coords[static_cast<size_t>(j)]);
    }
    coords.resize(static_cast<size_t>(max_coords));
  }

  auto eval = [&](const MatD& x) {
    Tape<double> tape;
    Var<double> v = tape.leaf(x);
    return build(tape, v).scalar();
  };

  auto central = [&](Index c, double h) {
    MatD xp = x0, xm = x0;
    xp.data()[c] += h;
    xm.data()[c] -= h;
    return (eval(xp) - eval(xm)) / (2.0 * h);
  };

  double max_rel = 0.0;
  for (Index c : coords) {
    const double coarse = central(c, eps);
    const double numeric = central(c, eps / 2.0);
    // Tight threshold: away from kinks the two estimates agree to truncation
    // error (zero for the piecewise-polynomial losses), so any visible
    // disagreement marks a kink. The absolute floor absorbs roundoff.
    const double gap = 1e-4 * std::max({std::abs(coarse), std::abs(numeric), 3e-5});
    if (std::abs(coarse - numeric) > gap) continue;
    const double a = analytic.data()[c];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
  }
  return max_rel;
}

} // namespace swc::nn
