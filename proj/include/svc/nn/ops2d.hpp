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

// 2-D primitives for the identification network. An image with C channels
// of size H x W is a C x (H*W) matrix, column index h*W + w.

#include <vector>

#include "svc/nn/ops.hpp"

namespace svc::nn {

struct ImageShape {
  int height = 0;
  int width = 0;
  Eigen::Index pixels() const { return static_cast<Eigen::Index>(height) * width; }
};

/// (C*9) x (H*W) patch matrix for a 3x3 "same" convolution with zero padding.
/// Row c*9 + ky*3 + kx holds x[c] at (h + ky - 1, w + kx - 1).
template <typename S>
Mat<S> im2col3x3(const Mat<S>& x, ImageShape s) {
  if (x.cols() != s.pixels())
    detail::ShapeError("conv2d", "input has " + std::to_string(x.cols()) + " pixels, expected " +
                                     std::to_string(s.pixels()));
  Mat<S> cols = Mat<S>::Zero(x.rows() * 9, s.pixels());
  for (Eigen::Index c = 0; c < x.rows(); ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = c * 9 + ky * 3 + kx;
        for (int h = 0; h < s.height; ++h) {
          const int hh = h + ky - 1;
          if (hh < 0 || hh >= s.height) continue;
          const int w0 = std::max(0, 1 - kx), w1 = std::min(s.width, s.width + 1 - kx);
          for (int w = w0; w < w1; ++w) cols(row, h * s.width + w) = x(c, hh * s.width + w + kx - 1);
        }
      }
  return cols;
}

template <typename S>
void col2im3x3_add(const Mat<S>& cols, ImageShape s, Mat<S>& dx) {
  for (Eigen::Index c = 0; c < dx.rows(); ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = c * 9 + ky * 3 + kx;
        for (int h = 0; h < s.height; ++h) {
          const int hh = h + ky - 1;
          if (hh < 0 || hh >= s.height) continue;
          const int w0 = std::max(0, 1 - kx), w1 = std::min(s.width, s.width + 1 - kx);
          for (int w = w0; w < w1; ++w) dx(c, hh * s.width + w + kx - 1) += cols(row, h * s.width + w);
        }
      }
}

/// 3x3 convolution, stride 1, zero "same" padding. w is C_out x (C_in*9);
/// b is C_out x 1 or empty.
template <typename S>
Mat<S> conv2d3x3(const Mat<S>& x, ImageShape s, const Mat<S>& w, const Mat<S>& b) {
  if (w.cols() != x.rows() * 9)
    detail::ShapeError("conv2d", "weights " + detail::Dims(w.rows(), w.cols()) + " for " +
                                     std::to_string(x.rows()) + " input channels");
  Mat<S> y = w * im2col3x3(x, s);
  if (b.size() > 0) y.colwise() += b.col(0);
  return y;
}

template <typename S>
void conv2d3x3_backward(const Mat<S>& x, ImageShape s, const Mat<S>& w, const Mat<S>& dy,
                        Mat<S>* dx, Mat<S>* dw, Mat<S>* db) {
  if (dw || dx) {
    const Mat<S> cols = im2col3x3(x, s);
    if (dw) dw->noalias() += dy * cols.transpose();
  }
  if (db && db->size() > 0) db->col(0) += dy.rowwise().sum();
  if (dx) {
    const Mat<S> dcols = w.transpose() * dy;
    col2im3x3_add(dcols, s, *dx);
  }
}

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// `argmax` receives the input column chosen for each output element.
template <typename S>
Mat<S> max_pool2x2(const Mat<S>& x, ImageShape s, ImageShape* out_shape,
                   std::vector<Eigen::Index>* argmax) {
  const ImageShape o{s.height / 2, s.width / 2};
  if (o.height < 1 || o.width < 1)
    detail::ShapeError("max_pool2x2", "image " + detail::Dims(s.height, s.width) + " too small");
  Mat<S> y(x.rows(), o.pixels());
  if (argmax) argmax->assign(static_cast<std::size_t>(y.size()), 0);
  for (Eigen::Index c = 0; c < x.rows(); ++c)
    for (int h = 0; h < o.height; ++h)
      for (int w = 0; w < o.width; ++w) {
        Eigen::Index best = (2 * h) * s.width + 2 * w;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const Eigen::Index i = (2 * h + dy) * s.width + 2 * w + dx;
            if (x(c, i) > x(c, best)) best = i;
          }
        const Eigen::Index oi = h * o.width + w;
        y(c, oi) = x(c, best);
        if (argmax) (*argmax)[static_cast<std::size_t>(c * o.pixels() + oi)] = best;
      }
  if (out_shape) *out_shape = o;
  return y;
}

template <typename S>
void max_pool2x2_backward(const std::vector<Eigen::Index>& argmax, const Mat<S>& dy, Mat<S>* dx) {
  const Eigen::Index out_pixels = dy.cols();
  for (Eigen::Index c = 0; c < dy.rows(); ++c)
    for (Eigen::Index i = 0; i < out_pixels; ++i)
      (*dx)(c, argmax[static_cast<std::size_t>(c * out_pixels + i)]) += dy(c, i);
}

/// Per-channel statistics of a batch normalization forward pass.
template <typename S>
struct BatchNormCache {
  Vec<S> mean;
  Vec<S> inv_std;
  std::vector<Mat<S>> normalized;  // x_hat per item
};

/// Training-mode batch normalization over all items and pixels. gamma and
/// beta are C x 1.
template <typename S>
std::vector<Mat<S>> batch_norm(const std::vector<Mat<S>>& xs, const Mat<S>& gamma,
                               const Mat<S>& beta, S eps, BatchNormCache<S>* cache) {
  if (xs.empty()) detail::ShapeError("batch_norm", "empty batch");
  const Eigen::Index c = xs[0].rows();
  if (gamma.rows() != c || beta.rows() != c)
    detail::ShapeError("batch_norm", "parameters do not match " + std::to_string(c) + " channels");
  Vec<S> mean = Vec<S>::Zero(c), var = Vec<S>::Zero(c);
  S count = 0;
  for (const auto& x : xs) {
    if (x.rows() != c) detail::ShapeError("batch_norm", "channel count differs across the batch");
    mean += x.rowwise().sum();
    count += S(x.cols());
  }
  mean /= count;
  for (const auto& x : xs) var += (x.colwise() - mean).array().square().matrix().rowwise().sum();
  var /= count;
  const Vec<S> inv_std = (var.array() + eps).rsqrt().matrix();
  std::vector<Mat<S>> out;
  out.reserve(xs.size());
  if (cache) cache->normalized.clear();
  for (const auto& x : xs) {
    Mat<S> xhat = ((x.colwise() - mean).array().colwise() * inv_std.array()).matrix();
    out.push_back(((xhat.array().colwise() * gamma.col(0).array()).colwise() +
                   beta.col(0).array()).matrix());
    if (cache) cache->normalized.push_back(std::move(xhat));
  }
  if (cache) {
    cache->mean = mean;
    cache->inv_std = inv_std;
  }
  return out;
}

template <typename S>
void batch_norm_backward(const BatchNormCache<S>& cache, const Mat<S>& gamma,
                         const std::vector<Mat<S>>& dys, std::vector<Mat<S>>* dxs, Mat<S>* dgamma,
                         Mat<S>* dbeta) {
  const Eigen::Index c = gamma.rows();
  Vec<S> sum_dy = Vec<S>::Zero(c), sum_dy_xhat = Vec<S>::Zero(c);
  S count = 0;
  for (std::size_t i = 0; i < dys.size(); ++i) {
    sum_dy += dys[i].rowwise().sum();
    sum_dy_xhat += dys[i].cwiseProduct(cache.normalized[i]).rowwise().sum();
    count += S(dys[i].cols());
  }
  if (dgamma) dgamma->col(0) += sum_dy_xhat;
  if (dbeta) dbeta->col(0) += sum_dy;
  if (!dxs) return;
  const Vec<S> scale = gamma.col(0).cwiseProduct(cache.inv_std);
  const Vec<S> mean_dy = sum_dy / count, mean_dy_xhat = sum_dy_xhat / count;
  for (std::size_t i = 0; i < dys.size(); ++i) {
    Mat<S> t = dys[i].colwise() - mean_dy;
    t -= (cache.normalized[i].array().colwise() * mean_dy_xhat.array()).matrix();
    (*dxs)[i] += (t.array().colwise() * scale.array()).matrix();
  }
}

/// Mean over the width (time) axis: C x (H*W) -> (C*H) x 1, row c*H + h.
template <typename S>
Vec<S> mean_over_width(const Mat<S>& x, ImageShape s) {
  Vec<S> out(x.rows() * s.height);
  for (Eigen::Index c = 0; c < x.rows(); ++c)
    for (int h = 0; h < s.height; ++h)
      out(c * s.height + h) = x.row(c).segment(h * s.width, s.width).mean();
  return out;
}

template <typename S>
void mean_over_width_backward(const Vec<S>& dy, ImageShape s, Mat<S>* dx) {
  const S inv = S(1) / S(s.width);
  for (Eigen::Index c = 0; c < dx->rows(); ++c)
    for (int h = 0; h < s.height; ++h)
      dx->row(c).segment(h * s.width, s.width).array() += dy(c * s.height + h) * inv;
}

}  // namespace svc::nn
