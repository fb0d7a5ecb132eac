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

// Structural properties of the decoder shared by unit and acceptance tests.

#include <random>
#include <vector>

#include "svc/model.hpp"
#include "test_util.hpp"

namespace svc::testing {

/// Receptive field by explicit summation of every layer's reach.
inline long reference_receptive_field(const DecoderSpec& d) {
  long reach = 0;
  for (int b = 0; b < d.blocks; ++b)
    for (int i = 0; i < d.layers_per_block; ++i) reach += (d.kernel_size - 1) * (1L << i);
  return reach + 1;
}

/// Random parameters with a non-degenerate output head.
template <typename S>
Model<S> random_model(const ModelSpec& spec, std::uint64_t seed) {
  Model<S> m(spec);
  m.init(seed);
  std::mt19937_64 rng(seed ^ 0x5A5A);
  auto& w = m.params()[m.head_fc2().w];
  w = random_mat<S>(rng, w.rows(), w.cols(), 1.0 / std::sqrt(static_cast<double>(w.cols())));
  return m;
}

template <typename S>
Conditioning<S> random_conditioning(const ModelSpec& spec, Eigen::Index samples,
                                    std::mt19937_64& rng) {
  Conditioning<S> c;
  c.hop = spec.hop();
  c.frames = random_mat<S>(rng, spec.decoder.conditioning_dim, (samples + c.hop - 1) / c.hop, 0.5);
  return c;
}

struct CausalityReport {
  bool past_unchanged = true;  // outputs before the edit point are bit-identical
  bool edit_visible = true;    // the edit changes the output at the edit point
};

/// Replaces inputs from `pivot` on and compares logits.
template <typename S>
CausalityReport check_causality(const Model<S>& m, const Conditioning<S>& cond,
                                std::vector<int> inputs, Eigen::Index pivot,
                                std::mt19937_64& rng) {
  const nn::Mat<S> base = m.decoder_forward(inputs, cond);
  for (std::size_t t = static_cast<std::size_t>(pivot); t < inputs.size(); ++t)
    inputs[t] = (inputs[t] + 1 + std::uniform_int_distribution<int>(0, 254)(rng)) % 256;
  const nn::Mat<S> edited = m.decoder_forward(inputs, cond);
  CausalityReport r;
  if (pivot > 0)
    r.past_unchanged =
        (base.leftCols(pivot) - edited.leftCols(pivot)).cwiseAbs().maxCoeff() == S(0);
  r.edit_visible = (base.col(pivot) - edited.col(pivot)).cwiseAbs().maxCoeff() > S(0);
  return r;
}

struct LocalityReport {
  bool outside_ignored = true;  // input at t - RF leaves output t unchanged
  bool edge_seen = true;        // input at t - RF + 1 changes output t
  double edge_effect = 0.0;
  double edge_gradient = 0.0;
};

/// Norm of d(w . logits[:, t]) / d(embedding of the input at `pos`). Every
/// other position holds a different symbol, so the embedding-table gradient
/// of that symbol isolates the one position. Deep stacks attenuate the
/// longest path below the rounding of a finite difference; the backward
/// pass carries it without cancellation.
template <typename S>
double input_sensitivity(const Model<S>& m, const Conditioning<S>& cond, std::size_t n,
                         Eigen::Index t, Eigen::Index pos) {
  const int background = 17, probe = 200;
  std::vector<int> inputs(n, background);
  inputs[static_cast<std::size_t>(pos)] = probe;
  DecoderCache<S> cache;
  const nn::Mat<S> logits = m.decoder_forward(inputs, cond, &cache);
  nn::Mat<S> dlogits = nn::Mat<S>::Zero(logits.rows(), logits.cols());
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) dlogits(i, t) = static_cast<S>(g(rng));
  nn::Grads<S> grads = m.params().zeros_like();
  m.decoder_backward(cache, dlogits, &grads, nullptr);
  return static_cast<double>(grads[m.input_embedding_id()].col(probe).norm());
}

template <typename S>
LocalityReport check_locality(const Model<S>& m, const Conditioning<S>& cond,
                              const std::vector<int>& inputs, Eigen::Index t) {
  const long rf = receptive_field(m.spec().decoder);
  const nn::Mat<S> base = m.decoder_forward(inputs, cond);
  auto flip = [&](Eigen::Index pos) {
    std::vector<int> edited = inputs;
    edited[static_cast<std::size_t>(pos)] = (edited[static_cast<std::size_t>(pos)] + 128) % 256;
    return (m.decoder_forward(edited, cond).col(t) - base.col(t)).cwiseAbs().maxCoeff();
  };
  LocalityReport r;
  if (t - rf >= 0) r.outside_ignored = flip(t - rf) == S(0);
  r.edge_effect = static_cast<double>(flip(t - rf + 1));
  r.edge_gradient = input_sensitivity(m, cond, inputs.size(), t, t - rf + 1);
  r.edge_seen = r.edge_effect > 0.0 || r.edge_gradient > 0.0;
  if (t - rf >= 0) r.outside_ignored = r.outside_ignored && input_sensitivity(m, cond, inputs.size(), t, t - rf) == 0.0;
  return r;
}

inline std::vector<int> random_inputs(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> v(n);
  for (auto& x : v) x = std::uniform_int_distribution<int>(0, 255)(rng);
  return v;
}

}  // namespace svc::testing
