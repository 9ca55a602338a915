// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "swcodec/nn/tape.hpp"

// Primitive differentiable ops. Each pushes one node; backward closures
// capture parent ids (never references into the node vector, which may grow).

namespace swc::nn {

template <typename S>
void check_same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
              std::to_string(b.cols()));
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "add");
  return a.tape->make(a.value() + b.value(), [ia = a.id, ib = b.id, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id);
    t.grad(ib) += t.grad(id);
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "sub");
  return a.tape->make(a.value() - b.value(), [ia = a.id, ib = b.id, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id);
    t.grad(ib) -= t.grad(id);
  });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "mul");
  return a.tape->make(a.value().cwiseProduct(b.value()),
                      [ia = a.id, ib = b.id, id = a.tape->size()](Tape<S>& t) {
                        t.grad(ia) += t.grad(id).cwiseProduct(t.value(ib));
                        t.grad(ib) += t.grad(id).cwiseProduct(t.value(ia));
                      });
}

template <typename S>
Var<S> div(Var<S> a, Var<S> b) {
  check_same_shape(a, b, "div");
  return a.tape->make(a.value().cwiseQuotient(b.value()),
                      [ia = a.id, ib = b.id, id = a.tape->size()](Tape<S>& t) {
                        const Mat<S>& bv = t.value(ib);
                        t.grad(ia) += t.grad(id).cwiseQuotient(bv);
                        t.grad(ib) -= t.grad(id)
                                          .cwiseProduct(t.value(ia))
                                          .cwiseQuotient(bv.cwiseProduct(bv));
                      });
}

template <typename S>
Var<S> add_scalar(Var<S> a, S c) {
  return a.tape->make((a.value().array() + c).matrix(),
                      [ia = a.id, id = a.tape->size()](Tape<S>& t) { t.grad(ia) += t.grad(id); });
}

template <typename S>
Var<S> mul_scalar(Var<S> a, S c) {
  return a.tape->make(a.value() * c, [ia = a.id, c, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id) * c;
  });
}

/// x[T x C] + r[1 x C], broadcast over rows (bias add).
template <typename S>
Var<S> add_rowvec(Var<S> x, Var<S> r) {
  require(r.rows() == 1 && r.cols() == x.cols(),
          "add_rowvec: expected 1x" + std::to_string(x.cols()) + ", got " +
              std::to_string(r.rows()) + "x" + std::to_string(r.cols()));
  Mat<S> y = x.value();
  y.rowwise() += r.value().row(0);
  return x.tape->make(std::move(y), [ix = x.id, ir = r.id, id = x.tape->size()](Tape<S>& t) {
    t.grad(ix) += t.grad(id);
    t.grad(ir).row(0) += t.grad(id).colwise().sum();
  });
}

/// x[T x C] * r[1 x C] elementwise, broadcast over rows.
template <typename S>
Var<S> mul_rowvec(Var<S> x, Var<S> r) {
  require(r.rows() == 1 && r.cols() == x.cols(),
          "mul_rowvec: expected 1x" + std::to_string(x.cols()) + ", got " +
              std::to_string(r.rows()) + "x" + std::to_string(r.cols()));
  Mat<S> y = (x.value().array().rowwise() * r.value().row(0).array()).matrix();
  return x.tape->make(std::move(y), [ix = x.id, ir = r.id, id = x.tape->size()](Tape<S>& t) {
    t.grad(ix) += (t.grad(id).array().rowwise() * t.value(ir).row(0).array()).matrix();
    t.grad(ir).row(0) += t.grad(id).cwiseProduct(t.value(ix)).colwise().sum();
  });
}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()));
  return a.tape->make(a.value() * b.value(), [ia = a.id, ib = b.id, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id) * t.value(ib).transpose();
    t.grad(ib) += t.value(ia).transpose() * t.grad(id);
  });
}

// The _const variants below take a fixed factor that never needs a gradient.
// Keeping it off the tape avoids allocating (and zeroing) a same-sized grad
// buffer per forward pass, which matters for the big DFT matrices in the
// spectral losses. The shared_ptr keeps the factor alive past the caller.

template <typename S>
Var<S> matmul_const(Var<S> a, std::shared_ptr<const Mat<S>> b) {
  require(a.cols() == b->rows(), "matmul_const: inner dimensions " + std::to_string(a.cols()) +
                                     " vs " + std::to_string(b->rows()));
  return a.tape->make(a.value() * (*b), [ia = a.id, b, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id) * b->transpose();
  });
}

/// Elementwise product with a fixed matrix of the same shape.
template <typename S>
Var<S> mul_const(Var<S> a, std::shared_ptr<const Mat<S>> c) {
  require(a.rows() == c->rows() && a.cols() == c->cols(),
          "mul_const: shape mismatch " + std::to_string(a.rows()) + "x" +
              std::to_string(a.cols()) + " vs " + std::to_string(c->rows()) + "x" +
              std::to_string(c->cols()));
  return a.tape->make(a.value().cwiseProduct(*c), [ia = a.id, c, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id).cwiseProduct(*c);
  });
}

/// x[T x C] times a fixed 1 x C row, broadcast over rows.
template <typename S>
Var<S> mul_rowvec_const(Var<S> x, std::shared_ptr<const Mat<S>> r) {
  require(r->rows() == 1 && r->cols() == x.cols(),
          "mul_rowvec_const: expected 1x" + std::to_string(x.cols()) + ", got " +
              std::to_string(r->rows()) + "x" + std::to_string(r->cols()));
  Mat<S> y = (x.value().array().rowwise() * r->row(0).array()).matrix();
  return x.tape->make(std::move(y), [ix = x.id, r, id = x.tape->size()](Tape<S>& t) {
    t.grad(ix) += (t.grad(id).array().rowwise() * r->row(0).array()).matrix();
  });
}

template <typename S>
Var<S> transpose(Var<S> a) {
  return a.tape->make(a.value().transpose(), [ia = a.id, id = a.tape->size()](Tape<S>& t) {
    t.grad(ia) += t.grad(id).transpose();
  });
}

template <typename S>
Var<S> slice_rows(Var<S> a, Index start, Index n) {
  require(start >= 0 && n >= 0 && start + n <= a.rows(),
          "slice_rows: [" + std::to_string(start) + ", " + std::to_string(start + n) +
              ") out of " + std::to_string(a.rows()) + " rows");
  return a.tape->make(a.value().middleRows(start, n),
                      [ia = a.id, start, n, id = a.tape->size()](Tape<S>& t) {
                        t.grad(ia).middleRows(start, n) += t.grad(id);
                      });
}

template <typename S>
Var<S> slice_cols(Var<S> a, Index start, Index n) {
  require(start >= 0 && n >= 0 && start + n <= a.cols(),
          "slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + n) +
              ") out of " + std::to_string(a.cols()) + " columns");
  return a.tape->make(a.value().middleCols(start, n),
                      [ia = a.id, start, n, id = a.tape->size()](Tape<S>& t) {
                        t.grad(ia).middleCols(start, n) += t.grad(id);
                      });
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  Index total = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts[0].rows(), "concat_cols: row mismatch");
    total += p.cols();
  }
  Mat<S> y(parts[0].rows(), total);
  std::vector<Index> ids, offs;
  Index off = 0;
  for (const auto& p : parts) {
    y.middleCols(off, p.cols()) = p.value();
    ids.push_back(p.id);
    offs.push_back(off);
    off += p.cols();
  }
  return parts[0].tape->make(std::move(y),
                             [ids, offs, id = parts[0].tape->size()](Tape<S>& t) {
                               for (size_t i = 0; i < ids.size(); ++i) {
                                 const Index n = t.value(ids[i]).cols();
                                 t.grad(ids[i]) += t.grad(id).middleCols(offs[i], n);
                               }
                             });
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  Index total = 0;
  for (const auto& p : parts) {
    require(p.cols() == parts[0].cols(), "concat_rows: column mismatch");
    total += p.rows();
  }
  Mat<S> y(total, parts[0].cols());
  std::vector<Index> ids, offs;
  Index off = 0;
  for (const auto& p : parts) {
    y.middleRows(off, p.rows()) = p.value();
    ids.push_back(p.id);
    offs.push_back(off);
    off += p.rows();
  }
  return parts[0].tape->make(std::move(y),
                             [ids, offs, id = parts[0].tape->size()](Tape<S>& t) {
                               for (size_t i = 0; i < ids.size(); ++i) {
                                 const Index n = t.value(ids[i]).rows();
                                 t.grad(ids[i]) += t.grad(id).middleRows(offs[i], n);
                               }
                             });
}

/// Row-major reshape (same element order, new dimensions).
template <typename S>
Var<S> reshape(Var<S> a, Index rows, Index cols) {
  require(rows * cols == a.rows() * a.cols(),
          "reshape: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " to " +
              std::to_string(rows) + "x" + std::to_string(cols) + " changes element count");
  Mat<S> y = Eigen::Map<const Mat<S>>(a.value().data(), rows, cols);
  return a.tape->make(std::move(y), [ia = a.id, id = a.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    t.grad(ia) += Eigen::Map<const Mat<S>>(g.data(), t.value(ia).rows(), t.value(ia).cols());
  });
}

template <typename S>
Var<S> softmax_rows(Var<S> a) {
  Mat<S> y = a.value();
  for (Index i = 0; i < y.rows(); ++i) {
    y.row(i) = (y.row(i).array() - y.row(i).maxCoeff()).exp();
    y.row(i) /= y.row(i).sum();
  }
  return a.tape->make(std::move(y), [ia = a.id, id = a.tape->size()](Tape<S>& t) {
    const Mat<S>& y = t.value(id);
    const Mat<S>& g = t.grad(id);
    const Mat<S> gy = g.cwiseProduct(y);
    const Vec<S> row_dot = gy.rowwise().sum();
    t.grad(ia) += gy - y.cwiseProduct(row_dot.replicate(1, y.cols()));
  });
}

/// Per-row normalization over columns with learned gain/bias row vectors.
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gain, Var<S> bias, S eps = S(1e-5)) {
  require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: bad gain shape");
  require(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bad bias shape");
  const Mat<S>& xv = x.value();
  const Index d = xv.cols();
  Vec<S> mean = xv.rowwise().mean();
  Mat<S> centered = xv - mean.replicate(1, d);
  Vec<S> inv_std =
      ((centered.cwiseProduct(centered).rowwise().sum() / S(d)).array() + eps).sqrt().inverse().matrix();
  Mat<S> xhat = centered.cwiseProduct(inv_std.replicate(1, d));
  Mat<S> y = ((xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
              bias.value().row(0).array())
                 .matrix();
  return x.tape->make(std::move(y), [ix = x.id, ig = gain.id, ib = bias.id, xhat, inv_std,
                                     id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    const Index d = g.cols();
    const Mat<S> ghat = g.array().rowwise() * t.value(ig).row(0).array();
    const Vec<S> m1 = ghat.rowwise().mean();
    const Vec<S> m2 = ghat.cwiseProduct(xhat).rowwise().mean();
    t.grad(ix) += (ghat - m1.replicate(1, d) - xhat.cwiseProduct(m2.replicate(1, d)))
                      .cwiseProduct(inv_std.replicate(1, d));
    t.grad(ig).row(0) += g.cwiseProduct(xhat).colwise().sum();
    t.grad(ib).row(0) += g.colwise().sum();
  });
}

/// GELU, tanh approximation (used everywhere GELU appears, for reproducibility).
template <typename S>
Var<S> gelu(Var<S> x) {
  const S c = S(std::sqrt(2.0 / M_PI));
  const S a3 = S(0.044715);
  auto fwd = [c, a3](S v) {
    return S(0.5) * v * (S(1) + std::tanh(c * (v + a3 * v * v * v)));
  };
  return x.tape->make(x.value().unaryExpr(fwd), [ix = x.id, c, a3, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& xv = t.value(ix);
    Mat<S> d = xv.unaryExpr([c, a3](S v) {
      const S u = c * (v + a3 * v * v * v);
      const S th = std::tanh(u);
      const S du = c * (S(1) + S(3) * a3 * v * v);
      return S(0.5) * (S(1) + th) + S(0.5) * v * (S(1) - th * th) * du;
    });
    t.grad(ix) += t.grad(id).cwiseProduct(d);
  });
}

template <typename S>
Var<S> leaky_relu(Var<S> x, S slope) {
  return x.tape->make(x.value().unaryExpr([slope](S v) { return v >= S(0) ? v : slope * v; }),
                      [ix = x.id, slope, id = x.tape->size()](Tape<S>& t) {
                        const Mat<S>& xv = t.value(ix);
                        t.grad(ix) += t.grad(id).cwiseProduct(
                            xv.unaryExpr([slope](S v) { return v >= S(0) ? S(1) : slope; }));
                      });
}

/// snake(x) = x + sin^2(alpha x)/alpha with a learned per-channel alpha row.
template <typename S>
Var<S> snake(Var<S> x, Var<S> alpha) {
  require(alpha.rows() == 1 && alpha.cols() == x.cols(), "snake: alpha must be 1 x channels");
  require((alpha.value().array() > S(0)).all(), "snake: alpha must be positive");
  const Mat<S>& xv = x.value();
  const auto a = alpha.value().row(0).array();
  const Mat<S> ax = (xv.array().rowwise() * a).matrix();
  Mat<S> y = (xv.array() + (ax.array().sin().square().rowwise() / a)).matrix();
  return x.tape->make(std::move(y), [ix = x.id, ia = alpha.id, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& xv = t.value(ix);
    const auto a = t.value(ia).row(0).array();
    const Mat<S> ax = (xv.array().rowwise() * a).matrix();
    const Mat<S> sin2ax = (S(2) * ax.array()).sin().matrix(); // sin(2 a x)
    const Mat<S>& g = t.grad(id);
    t.grad(ix) += g.cwiseProduct((sin2ax.array() + S(1)).matrix());
    // d/da [sin^2(ax)/a] = (a x sin(2ax) - sin^2(ax)) / a^2
    const Mat<S> da = (((xv.cwiseProduct(sin2ax).array().rowwise() * a) -
                        ax.array().sin().square())
                           .rowwise() /
                       (a * a))
                          .matrix();
    t.grad(ia).row(0) += g.cwiseProduct(da).colwise().sum();
  });
}

template <typename S>
Var<S> abs(Var<S> x) {
  return x.tape->make(x.value().cwiseAbs(), [ix = x.id, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& xv = t.value(ix);
    t.grad(ix) += t.grad(id).cwiseProduct(
        xv.unaryExpr([](S v) { return v > S(0) ? S(1) : (v < S(0) ? S(-1) : S(0)); }));
  });
}

template <typename S>
Var<S> square(Var<S> x) {
  return x.tape->make(x.value().cwiseProduct(x.value()),
                      [ix = x.id, id = x.tape->size()](Tape<S>& t) {
                        t.grad(ix) += S(2) * t.grad(id).cwiseProduct(t.value(ix));
                      });
}

template <typename S>
Var<S> exp(Var<S> x) {
  return x.tape->make(x.value().array().exp().matrix(),
                      [id = x.tape->size(), ix = x.id](Tape<S>& t) {
                        t.grad(ix) += t.grad(id).cwiseProduct(t.value(id));
                      });
}

/// log(max(x, floor)); gradient is 1/x above the floor and 0 at or below it.
template <typename S>
Var<S> log_clamped(Var<S> x, S floor) {
  require(floor > S(0), "log_clamped: floor must be positive");
  return x.tape->make(x.value().cwiseMax(floor).array().log().matrix(),
                      [ix = x.id, floor, id = x.tape->size()](Tape<S>& t) {
                        const Mat<S>& xv = t.value(ix);
                        t.grad(ix) += t.grad(id).cwiseProduct(
                            xv.unaryExpr([floor](S v) { return v > floor ? S(1) / v : S(0); }));
                      });
}

/// sqrt(max(x, floor)); gradient flows only above the floor.
template <typename S>
Var<S> sqrt_clamped(Var<S> x, S floor) {
  require(floor > S(0), "sqrt_clamped: floor must be positive");
  Mat<S> y = x.value().cwiseMax(floor).cwiseSqrt();
  return x.tape->make(std::move(y), [ix = x.id, floor, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& xv = t.value(ix);
    const Mat<S>& yv = t.value(id);
    Mat<S> d(xv.rows(), xv.cols());
    for (Index i = 0; i < d.size(); ++i)
      d.data()[i] = xv.data()[i] > floor ? S(0.5) / yv.data()[i] : S(0);
    t.grad(ix) += t.grad(id).cwiseProduct(d);
  });
}

/// Numerically stable log(1 + e^x).
template <typename S>
Var<S> softplus(Var<S> x) {
  auto fwd = [](S v) {
    if (v > S(20)) return v;
    if (v < S(-20)) return std::exp(v);
    return std::log1p(std::exp(v));
  };
  return x.tape->make(x.value().unaryExpr(fwd), [ix = x.id, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& xv = t.value(ix);
    t.grad(ix) += t.grad(id).cwiseProduct(
        xv.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); }));
  });
}

template <typename S>
Var<S> sum(Var<S> x) {
  return x.tape->make(Mat<S>::Constant(1, 1, x.value().sum()),
                      [ix = x.id, id = x.tape->size()](Tape<S>& t) {
                        t.grad(ix).array() += t.grad(id)(0, 0);
                      });
}

template <typename S>
Var<S> mean(Var<S> x) {
  const S n = S(x.rows() * x.cols());
  return x.tape->make(Mat<S>::Constant(1, 1, x.value().sum() / n),
                      [ix = x.id, n, id = x.tape->size()](Tape<S>& t) {
                        t.grad(ix).array() += t.grad(id)(0, 0) / n;
                      });
}

// im2col for 1-D sequences: x[T x C] to patches[T' x (k*C)], zero padding.
// Column j*C + c of row t holds x[t*stride + j*dilation - pad_left, c].
template <typename S>
Var<S> unfold(Var<S> x, Index k, Index stride, Index dilation, Index pad_left, Index pad_right) {
  require(k >= 1 && stride >= 1 && dilation >= 1, "unfold: k, stride, dilation must be >= 1");
  require(pad_left >= 0 && pad_right >= 0, "unfold: negative padding");
  const Index T = x.rows(), C = x.cols();
  const Index span = dilation * (k - 1) + 1;
  const Index Tp = T + pad_left + pad_right;
  require(Tp >= span, "unfold: input of " + std::to_string(T) + " rows too short for span " +
                          std::to_string(span));
  const Index To = (Tp - span) / stride + 1;
  Mat<S> y = Mat<S>::Zero(To, k * C);
  const Mat<S>& xv = x.value();
  for (Index t = 0; t < To; ++t)
    for (Index j = 0; j < k; ++j) {
      const Index src = t * stride + j * dilation - pad_left;
      if (src >= 0 && src < T) y.row(t).segment(j * C, C) = xv.row(src);
    }
  return x.tape->make(std::move(y), [ix = x.id, k, stride, dilation, pad_left, To, C,
                                     id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    Mat<S>& gx = t.grad(ix);
    const Index T = gx.rows();
    for (Index r = 0; r < To; ++r)
      for (Index j = 0; j < k; ++j) {
        const Index src = r * stride + j * dilation - pad_left;
        if (src >= 0 && src < T) gx.row(src) += g.row(r).segment(j * C, C);
      }
  });
}

// Exact adjoint of unfold with the same geometry: scatter-adds patch rows back
// into a [out_rows x C] sequence. unfold(fold-input) geometry must match:
// (out_rows + pad_left + pad_right - dilation*(k-1) - 1)/stride + 1 == patches.
template <typename S>
Var<S> fold(Var<S> patches, Index out_rows, Index C, Index k, Index stride, Index dilation,
            Index pad_left) {
  require(patches.cols() == k * C, "fold: patch width " + std::to_string(patches.cols()) +
                                       " != k*C = " + std::to_string(k * C));
  const Index To = patches.rows();
  Mat<S> y = Mat<S>::Zero(out_rows, C);
  const Mat<S>& pv = patches.value();
  for (Index t = 0; t < To; ++t)
    for (Index j = 0; j < k; ++j) {
      const Index dst = t * stride + j * dilation - pad_left;
      if (dst >= 0 && dst < out_rows) y.row(dst) += pv.row(t).segment(j * C, C);
    }
  return patches.tape->make(std::move(y), [ip = patches.id, k, stride, dilation, pad_left, To, C,
                                           id = patches.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    Mat<S>& gp = t.grad(ip);
    for (Index r = 0; r < To; ++r)
      for (Index j = 0; j < k; ++j) {
        const Index src = r * stride + j * dilation - pad_left;
        if (src >= 0 && src < g.rows()) gp.row(r).segment(j * C, C) += g.row(src);
      }
  });
}

/// Nearest-neighbor upsampling along rows: each row appears `factor` times.
template <typename S>
Var<S> repeat_rows(Var<S> x, Index factor) {
  require(factor >= 1, "repeat_rows: factor must be >= 1");
  const Index T = x.rows();
  Mat<S> y(T * factor, x.cols());
  for (Index t = 0; t < T; ++t) y.middleRows(t * factor, factor) = x.value().row(t).replicate(factor, 1);
  return x.tape->make(std::move(y), [ix = x.id, factor, T, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    for (Index r = 0; r < T; ++r)
      t.grad(ix).row(r) += g.middleRows(r * factor, factor).colwise().sum();
  });
}

/// Non-overlapping average pooling along rows; trailing remainder rows are dropped.
template <typename S>
Var<S> avg_pool_rows(Var<S> x, Index factor) {
  require(factor >= 1, "avg_pool_rows: factor must be >= 1");
  const Index To = x.rows() / factor;
  require(To >= 1, "avg_pool_rows: fewer rows than the pooling factor");
  Mat<S> y(To, x.cols());
  for (Index t = 0; t < To; ++t)
    y.row(t) = x.value().middleRows(t * factor, factor).colwise().mean();
  return x.tape->make(std::move(y), [ix = x.id, factor, To, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    for (Index r = 0; r < To; ++r)
      t.grad(ix).middleRows(r * factor, factor) +=
          (g.row(r) / S(factor)).replicate(factor, 1);
  });
}

/// Reflect padding along rows (same convention as the STFT center padding).
template <typename S>
Var<S> reflect_pad_rows(Var<S> x, Index pad_left, Index pad_right) {
  const Index T = x.rows();
  require(T >= 2 || (pad_left == 0 && pad_right == 0), "reflect_pad_rows: need at least 2 rows");
  require(pad_left < T && pad_right < T, "reflect_pad_rows: padding exceeds input");
  auto mirror = [T](Index j) {
    if (j < 0) j = -j;
    if (j >= T) j = 2 * T - 2 - j;
    return j;
  };
  Mat<S> y(pad_left + T + pad_right, x.cols());
  for (Index i = 0; i < y.rows(); ++i) y.row(i) = x.value().row(mirror(i - pad_left));
  return x.tape->make(std::move(y), [ix = x.id, pad_left, T, mirror, id = x.tape->size()](Tape<S>& t) {
    const Mat<S>& g = t.grad(id);
    for (Index i = 0; i < g.rows(); ++i) t.grad(ix).row(mirror(i - pad_left)) += g.row(i);
  });
}

// Convolution as unfold + matmul. x[T x Cin], w[(k*Cin) x Cout] with rows
// ordered (tap, channel), b[1 x Cout]. Cross-correlation, exact.
template <typename S>
Var<S> conv1d(Var<S> x, Var<S> w, Var<S> b, Index k, Index stride, Index dilation, Index pad) {
  require(k % 2 == 1, "conv1d: kernel size must be odd");
  require(w.rows() == k * x.cols(),
          "conv1d: weight rows " + std::to_string(w.rows()) + " != k*Cin = " +
              std::to_string(k * x.cols()) + " (input channel axis mismatch)");
  Var<S> u = unfold(x, k, stride, dilation, pad, pad);
  return add_rowvec(matmul(u, w), b);
}

/// "same" padding so stride 1 preserves T and stride s gives ceil(T/s).
template <typename S>
Var<S> conv1d_same(Var<S> x, Var<S> w, Var<S> b, Index k, Index stride, Index dilation = 1) {
  return conv1d(x, w, b, k, stride, dilation, dilation * (k - 1) / 2);
}

// Adjoint of conv1d in the same geometry, then bias: maps [T x Cout] up to
// [out_rows x Cin]. With shared w and zero biases,
// <conv1d(x), y> == <x, transposed_conv1d(y)> exactly.
template <typename S>
Var<S> transposed_conv1d(Var<S> y, Var<S> w, Var<S> b, Index k, Index stride, Index pad,
                         Index out_rows) {
  require(k % 2 == 1, "transposed_conv1d: kernel size must be odd");
  require(w.cols() == y.cols(),
          "transposed_conv1d: weight cols " + std::to_string(w.cols()) + " != input channels " +
              std::to_string(y.cols()));
  require(w.rows() % k == 0, "transposed_conv1d: weight rows not divisible by kernel size");
  const Index Cin = w.rows() / k;
  const Index span = k; // dilation 1
  require((out_rows + 2 * pad - span) / stride + 1 == y.rows(),
          "transposed_conv1d: out_rows " + std::to_string(out_rows) +
              " inconsistent with input rows " + std::to_string(y.rows()));
  Var<S> u = matmul(y, transpose(w));
  Var<S> x = fold(u, out_rows, Cin, k, stride, Index(1), pad);
  return add_rowvec(x, b);
}

} // namespace swc::nn
