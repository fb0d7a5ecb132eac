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

// Incremental-versus-naive generation comparisons shared by unit and
// acceptance tests.

#include <chrono>
#include <vector>

#include "svc/inference.hpp"
#include "svc/model.hpp"

namespace svc::testing {

struct EquivalenceReport {
  double index_agreement = 0.0;  // fraction of equal sampled indices
  double max_logit_diff = 0.0;   // incremental vs full recomputation, same prefix
  long first_mismatch = -1;
};

template <typename S>
EquivalenceReport compare_generators(const Model<S>& m, const Conditioning<S>& cond,
                                     Eigen::Index steps, std::uint64_t seed, double temperature) {
  GenerationTrace<S> naive_trace, inc_trace;
  const MuLawClip naive = generate_naive(m, cond, seed, temperature, &naive_trace, steps);
  const MuLawClip inc = generate_incremental(m, cond, seed, temperature, &inc_trace, steps);
  EquivalenceReport r;
  std::size_t same = 0;
  for (std::size_t t = 0; t < inc.size(); ++t) {
    same += naive.indices[t] == inc.indices[t];
    if (r.first_mismatch < 0 && naive.indices[t] != inc.indices[t]) r.first_mismatch = static_cast<long>(t);
  }
  r.index_agreement = static_cast<double>(same) / inc.size();
  // Recomputing the whole decoder on the incremental run's own prefix gives
  // the logits a naive generator would produce for that prefix.
  std::vector<int> inputs{kStartIndex};
  for (std::size_t t = 0; t + 1 < inc.size(); ++t) inputs.push_back(inc.indices[t]);
  const nn::Mat<S> full = m.decoder_forward(inputs, cond);
  for (std::size_t t = 0; t < inc.size(); ++t)
    r.max_logit_diff = std::max(
        r.max_logit_diff,
        static_cast<double>((full.col(static_cast<Eigen::Index>(t)) - inc_trace.logits[t]).cwiseAbs().maxCoeff()));
  return r;
}

struct ThroughputReport {
  double incremental_seconds = 0.0;   // measured, all T steps
  double naive_seconds = 0.0;         // integrated from timed probe steps
  double ratio = 0.0;
  std::vector<std::pair<long, double>> naive_probes;  // (prefix length, seconds per step)
};

/// Times T incremental steps directly. A naive run of T steps costs the sum
/// of one full decoder pass per prefix length; that sum is integrated
/// (trapezoid rule) from passes timed at `probes` evenly spaced lengths.
template <typename S>
ThroughputReport measure_throughput(const Model<S>& m, const Conditioning<S>& cond, long T,
                                    int probes = 9) {
  using clock = std::chrono::steady_clock;
  ThroughputReport r;
  const auto t0 = clock::now();
  generate_incremental<S>(m, cond, 1, 1.0, nullptr, T);
  r.incremental_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  std::vector<int> inputs(static_cast<std::size_t>(T), kStartIndex);
  for (int p = 0; p < probes; ++p) {
    const long len = std::max(1L, T * p / (probes - 1));
    const std::vector<int> prefix(inputs.begin(), inputs.begin() + len);
    const auto s0 = clock::now();
    const nn::Mat<S> logits = m.decoder_forward(prefix, cond);
    // A naive step also samples from the last column.
    sample_index<S>(logits.col(len - 1), 1.0, 0.5);
    r.naive_probes.emplace_back(len, std::chrono::duration<double>(clock::now() - s0).count());
  }
  for (std::size_t i = 1; i < r.naive_probes.size(); ++i) {
    const auto [l0, s0] = r.naive_probes[i - 1];
    const auto [l1, s1] = r.naive_probes[i];
    r.naive_seconds += 0.5 * (s0 + s1) * static_cast<double>(l1 - l0);
  }
  r.naive_seconds += r.naive_probes.front().second;  // the first step itself
  r.ratio = r.naive_seconds / r.incremental_seconds;
  return r;
}

}  // namespace svc::testing
