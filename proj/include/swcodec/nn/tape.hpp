// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "swcodec/common.hpp"
#include "swcodec/types.hpp"

namespace swc::nn {

template <typename S>
class Tape;

/// Lightweight handle to a node on a tape. Copyable; valid while the tape lives.
template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  Index id = -1;

  const Mat<S>& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  S scalar() const;
};

/// Named trainable matrix. Owns the persistent value and the gradient
/// accumulator; a tape binds it per forward pass.
template <typename S>
struct Parameter {
  std::string name;
  Mat<S> value;
  Mat<S> grad;

  Parameter() = default;
  Parameter(std::string n, Mat<S> v)
      : name(std::move(n)), value(std::move(v)), grad(Mat<S>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

// Reverse-mode tape over row-major matrices. The graph is created by running
// the forward computation; creation order is a topological order, so backward
// walks the nodes once in reverse. Ops are free functions (see ops.hpp) that
// push one node each and capture parent ids by value.
template <typename S>
class Tape {
public:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    std::function<void(Tape<S>&)> backward; // empty for leaves and constants
    Parameter<S>* bound = nullptr;          // receives grad after backward()
  };

  Var<S> constant(Mat<S> v) {
    nodes_.push_back(Node{std::move(v), {}, {}, nullptr});
    return Var<S>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  Var<S> scalar(S v) { return constant(Mat<S>::Constant(1, 1, v)); }

  /// Differentiable leaf (an input whose gradient the caller wants to read).
  Var<S> leaf(Mat<S> v) { return constant(std::move(v)); }

  /// Binds a parameter: the node starts from the parameter's current value and
  /// its gradient is added into parameter.grad by backward().
  Var<S> bind(Parameter<S>& p) {
    nodes_.push_back(Node{p.value, {}, {}, &p});
    return Var<S>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  Var<S> make(Mat<S> v, std::function<void(Tape<S>&)> bw) {
    nodes_.push_back(Node{std::move(v), {}, std::move(bw), nullptr});
    return Var<S>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  const Mat<S>& value(Index id) const { return nodes_[id].value; }
  Mat<S>& grad(Index id) { return nodes_[id].grad; }
  Index size() const { return static_cast<Index>(nodes_.size()); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node created before the
  // loss, then adds bound-node gradients into their parameters.
  void backward(Var<S> loss) {
    require(loss.tape == this, "backward: loss lives on a different tape");
    const Mat<S>& lv = nodes_[loss.id].value;
    require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be a 1x1 scalar");
    for (Index i = 0; i <= loss.id; ++i)
      nodes_[i].grad = Mat<S>::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
    nodes_[loss.id].grad(0, 0) = S(1);
    for (Index i = loss.id; i >= 0; --i)
      if (nodes_[i].backward) nodes_[i].backward(*this);
    for (Index i = 0; i <= loss.id; ++i)
      if (nodes_[i].bound) nodes_[i].bound->grad += nodes_[i].grad;
  }

private:
  std::vector<Node> nodes_;
};

template <typename S>
const Mat<S>& Var<S>::value() const {
  return tape->value(id);
}

template <typename S>
S Var<S>::scalar() const {
  const Mat<S>& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar: node is not 1x1");
  return v(0, 0);
}

} // namespace swc::nn
