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

// Autoregressive generation. Both generators consume one uniform draw per
// step from the same stream and pick an index by inverse-CDF sampling, so
// for equal logits they pick equal indices.

#include <cstdint>
#include <string>
#include <vector>

#include "svc/audio.hpp"
#include "svc/checkpoint.hpp"
#include "svc/model.hpp"
#include "svc/random.hpp"

namespace svc {

/// temperature == 0 selects argmax; otherwise inverse-CDF sampling of
/// softmax(logits / temperature) against `u` in [0, 1).
template <typename S>
int sample_index(const nn::Vec<S>& logits, double temperature, double u);

/// Optional per-step logits capture for equivalence checks.
template <typename S>
struct GenerationTrace {
  std::vector<nn::Vec<S>> logits;
};

/// Reference generator: re-runs the full decoder on the whole prefix at
/// every step. Quadratic in the output length.
template <typename S>
MuLawClip generate_naive(const Model<S>& model, const Conditioning<S>& cond,
                         std::uint64_t rng_seed, double temperature,
                         GenerationTrace<S>* trace = nullptr, Eigen::Index length = -1);

/// Cached single-step decoder: one ring buffer of past layer inputs per
/// residual layer, sized (kernel - 1) * dilation.
template <typename S>
class IncrementalDecoder {
 public:
  IncrementalDecoder(const Model<S>& model, const Conditioning<S>& cond);

  /// Feeds the previous sample (kStartIndex at t = 0) and returns the
  /// logits predicting the sample at the current time index.
  const nn::Vec<S>& step(int previous_index);
  Eigen::Index time() const { return t_; }
  std::size_t buffer_size(std::size_t layer) const {
    return static_cast<std::size_t>(buffers_[layer].cols());
  }

 private:
  const Model<S>& model_;
  const Conditioning<S>& cond_;
  std::vector<nn::Mat<S>> cond_proj_;  // per layer, 2G x F
  nn::Mat<S> head_cond_proj_;          // skip x F
  std::vector<nn::Mat<S>> buffers_;    // per layer ring of past inputs
  std::vector<Eigen::Index> heads_;    // next write position per ring
  Eigen::Index t_ = 0;
  nn::Vec<S> h_, z_, gate_, skip_, f1_, logits_;
};

template <typename S>
MuLawClip generate_incremental(const Model<S>& model, const Conditioning<S>& cond,
                               std::uint64_t rng_seed, double temperature,
                               GenerationTrace<S>* trace = nullptr, Eigen::Index length = -1);

/// D[v](E(s)) for an arbitrary conditioning vector v.
MuLawClip convert_with_embedding(const Model<float>& model, const std::vector<float>& companded,
                                 const nn::Vec<float>& v, double temperature,
                                 std::uint64_t rng_seed);

/// Converts `clip` to the voice of `target_singer_id`. Output has the input's
/// length and sample rate.
AudioClip convert(const AudioClip& clip, const std::string& target_singer_id,
                  const Checkpoint& checkpoint, double temperature, std::uint64_t rng_seed);
AudioClip convert(const AudioClip& clip, int target_singer, const Model<float>& model,
                  double temperature, std::uint64_t rng_seed);

extern template class IncrementalDecoder<float>;
extern template class IncrementalDecoder<double>;

}  // namespace svc
