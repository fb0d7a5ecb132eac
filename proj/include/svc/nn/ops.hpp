// Copyright 2026 The SVC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Differentiable primitives. Every backward function *adds* into the
// gradient buffers it is given; null pointers skip that gradient.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "svc/error.hpp"
#include "svc/nn/tensor.hpp"

namespace svc::nn {

namespace detail {
[[noreturn]] inline void ShapeError(const char* op, const std::string& what) {
  Fail(ErrorKind::kShape, std::string(op) + ": " + what);
}
inline std::string Dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace detail

struct ConvGeometry {
  int kernel = 1;
  int dilation = 1;
  bool causal = false;

  /// Zeros padded before t = 0. Causal: all (kernel-1)*dilation of them;
  /// otherwise half, with the odd sample going to the right.
  int left_pad() const {
    const int total = (kernel - 1) * dilation;
    return causal ? total : total / 2;
  }
};

// ---- conv1d ---------------------------------------------------------------
// Weights are C_out x (C_in * kernel); column block k multiplies the input
// sampled at t - left_pad + k * dilation. Bias is C_out x 1 or empty.

template <typename S>
void conv1d_check(const Mat<S>& x, const Mat<S>& w, const Mat<S>& b, const ConvGeometry& g) {
  if (g.kernel < 1 || g.dilation < 1)
    detail::ShapeError("conv1d", "kernel and dilation must be >= 1");
  if (w.cols() != x.rows() * g.kernel)
    detail::ShapeError("conv1d", "weights " + detail::Dims(w.rows(), w.cols()) +
                                     " do not match " + std::to_string(x.rows()) +
                                     " input channels with kernel " + std::to_string(g.kernel));
  if (b.size() != 0 && (b.rows() != w.rows() || b.cols() != 1))
    detail::ShapeError("conv1d", "bias must be " + std::to_string(w.rows()) + "x1");
}

template <typename S>
void conv1d_accumulate(const Mat<S>& x, const Mat<S>& w, const ConvGeometry& g, Mat<S>& y) {
  const Eigen::Index cin = x.rows(), T = x.cols();
  const int lp = g.left_pad();
  for (int k = 0; k < g.kernel; ++k) {
    const Eigen::Index o = static_cast<Eigen::Index>(k) * g.dilation - lp;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -o);
    const Eigen::Index t1 = std::min<Eigen::Index>(T, T - o);
    if (t1 <= t0) continue;
    y.middleCols(t0, t1 - t0).noalias() +=
        w.middleCols(k * cin, cin) * x.middleCols(t0 + o, t1 - t0);
  }
}

template <typename S>
Mat<S> conv1d(const Mat<S>& x, const Mat<S>& w, const Mat<S>& b, const ConvGeometry& g) {
  conv1d_check(x, w, b, g);
  Mat<S> y(w.rows(), x.cols());
  if (b.size() != 0)
    y.colwise() = b.col(0);
  else
    y.setZero();
  conv1d_accumulate(x, w, g, y);
  return y;
}

template <typename S>
void conv1d_backward(const Mat<S>& x, const Mat<S>& w, const ConvGeometry& g, const Mat<S>& dy,
                     Mat<S>* dx, Mat<S>* dw, Mat<S>* db) {
  if (dy.rows() != w.rows() || dy.cols() != x.cols())
    detail::ShapeError("conv1d_backward", "output gradient has shape " +
                                              detail::Dims(dy.rows(), dy.cols()));
  const Eigen::Index cin = x.rows(), T = x.cols();
  const int lp = g.left_pad();
  if (db) db->col(0) += dy.rowwise().sum();
  for (int k = 0; k < g.kernel; ++k) {
    const Eigen::Index o = static_cast<Eigen::Index>(k) * g.dilation - lp;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -o);
    const Eigen::Index t1 = std::min<Eigen::Index>(T, T - o);
    if (t1 <= t0) continue;
    const Eigen::Index n = t1 - t0;
    if (dw)
      dw->middleCols(k * cin, cin).noalias() +=
          dy.middleCols(t0, n) * x.middleCols(t0 + o, n).transpose();
    if (dx)
      dx->middleCols(t0 + o, n).noalias() +=
          w.middleCols(k * cin, cin).transpose() * dy.middleCols(t0, n);
  }
}

// ---- elementwise ----------------------------------------------------------

template <typename S>
Mat<S> sigmoid(const Mat<S>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

/// tanh(a) * sigmoid(b).
template <typename S>
Mat<S> gated_unit(const Mat<S>& a, const Mat<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    detail::ShapeError("gated_unit", "operands " + detail::Dims(a.rows(), a.cols()) + " and " +
                                         detail::Dims(b.rows(), b.cols()) + " differ");
  return (a.array().tanh() * sigmoid(b).array()).matrix();
}

template <typename S>
void gated_unit_backward(const Mat<S>& a, const Mat<S>& b, const Mat<S>& dy, Mat<S>* da,
                         Mat<S>* db) {
  const auto t = a.array().tanh().eval();
  const auto s = sigmoid(b).array().eval();
  if (da) da->array() += dy.array() * (S(1) - t.square()) * s;
  if (db) db->array() += dy.array() * t * s * (S(1) - s);
}

template <typename S>
Mat<S> relu(const Mat<S>& x) {
  return x.cwiseMax(S(0));
}

template <typename S>
void relu_backward(const Mat<S>& x, const Mat<S>& dy, Mat<S>* dx) {
  dx->array() += (x.array() > S(0)).select(dy.array(), S(0));
}

template <typename S>
Mat<S> elu(const Mat<S>& x) {
  return (x.array() > S(0)).select(x.array(), x.array().exp() - S(1)).matrix();
}

template <typename S>
void elu_backward(const Mat<S>& x, const Mat<S>& dy, Mat<S>* dx) {
  dx->array() += (x.array() > S(0)).select(dy.array(), dy.array() * x.array().exp());
}

// ---- temporal resampling ----------------------------------------------------

template <typename S>
Mat<S> avg_pool(const Mat<S>& x, int kernel, int stride) {
  if (kernel < 1 || stride < 1) detail::ShapeError("avg_pool", "kernel and stride must be >= 1");
  if (x.cols() < kernel)
    detail::ShapeError("avg_pool", "input length " + std::to_string(x.cols()) +
                                       " is shorter than the kernel " + std::to_string(kernel));
  const Eigen::Index frames = (x.cols() - kernel) / stride + 1;
  Mat<S> y(x.rows(), frames);
  for (Eigen::Index f = 0; f < frames; ++f)
    y.col(f) = x.middleCols(f * stride, kernel).rowwise().sum() / S(kernel);
  return y;
}

template <typename S>
void avg_pool_backward(Eigen::Index input_len, int kernel, int stride, const Mat<S>& dy,
                       Mat<S>* dx) {
  if (dx->cols() != input_len || dx->rows() != dy.rows())
    detail::ShapeError("avg_pool_backward", "gradient buffer has the wrong shape");
  for (Eigen::Index f = 0; f < dy.cols(); ++f)
    dx->middleCols(f * stride, kernel).colwise() += dy.col(f) / S(kernel);
}

template <typename S>
Mat<S> upsample_repeat(const Mat<S>& x, int factor) {
  if (factor < 1) detail::ShapeError("upsample_repeat", "factor must be >= 1");
  Mat<S> y(x.rows(), x.cols() * factor);
  for (Eigen::Index f = 0; f < x.cols(); ++f) y.middleCols(f * factor, factor).colwise() = x.col(f);
  return y;
}

template <typename S>
void upsample_repeat_backward(int factor, const Mat<S>& dy, Mat<S>* dx) {
  if (dy.cols() != dx->cols() * factor || dy.rows() != dx->rows())
    detail::ShapeError("upsample_repeat_backward", "gradient buffer has the wrong shape");
  for (Eigen::Index f = 0; f < dx->cols(); ++f)
    dx->col(f) += dy.middleCols(f * factor, factor).rowwise().sum();
}

// ---- loss -----------------------------------------------------------------

/// Column-wise log-softmax.
template <typename S>
Mat<S> log_softmax(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const S m = logits.col(t).maxCoeff();
    const S lse = m + std::log((logits.col(t).array() - m).exp().sum());
    out.col(t) = logits.col(t).array() - lse;
  }
  return out;
}

/// Mean over columns of -log softmax(logits)[target]. When `dlogits` is given,
/// adds scale * d(loss)/d(logits) into it.
template <typename S>
S softmax_cross_entropy(const Mat<S>& logits, std::span<const int> targets,
                        Mat<S>* dlogits = nullptr, S scale = S(1)) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.cols())
    detail::ShapeError("softmax_cross_entropy",
                       std::to_string(targets.size()) + " targets for " +
                           std::to_string(logits.cols()) + " time steps");
  const Eigen::Index classes = logits.rows();
  const S inv_t = S(1) / S(logits.cols());
  S total = 0;
  Eigen::Matrix<S, Eigen::Dynamic, 1> p(classes);
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    const int y = targets[t];
    if (y < 0 || y >= classes)
      Fail(ErrorKind::kDomain, "softmax_cross_entropy: target " + std::to_string(y) +
                                   " at position " + std::to_string(t) + " is outside [0, " +
                                   std::to_string(classes) + ")");
    const S m = logits.col(t).maxCoeff();
    p = (logits.col(t).array() - m).exp();
    const S z = p.sum();
    total += std::log(z) - (logits(y, t) - m);
    if (dlogits) {
      p /= z;
      p(y) -= S(1);
      dlogits->col(t) += (scale * inv_t) * p;
    }
  }
  return total * inv_t;
}

}  // namespace svc::nn
