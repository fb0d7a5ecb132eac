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

#include <doctest.h>

#include <random>

#include "inference_checks.hpp"
#include "structure_checks.hpp"
#include "svc/error.hpp"
#include "svc/inference.hpp"
#include "gradient_suite.hpp"

using namespace svc;
using namespace svc::testing;

namespace {
ModelSpec GenSpec() {
  ModelSpec s = tiny_spec();
  s.decoder.blocks = 2;
  s.decoder.layers_per_block = 4;
  s.decoder.residual_channels = 8;
  s.decoder.gate_channels = 8;
  s.decoder.skip_channels = 16;
  s.encoder.pool_kernel = s.encoder.pool_stride = 50;
  return s;
}
}  // namespace

TEST_CASE("sampling: temperature zero is argmax") {
  nn::Vec<double> logits(4);
  logits << 0.1, 2.0, -1.0, 1.9;
  for (double u : {0.0, 0.3, 0.999}) CHECK(sample_index(logits, 0.0, u) == 1);
}

TEST_CASE("sampling: inverse CDF against the softmax") {
  nn::Vec<double> logits(3);
  logits << std::log(0.2), std::log(0.3), std::log(0.5);
  CHECK(sample_index(logits, 1.0, 0.0) == 0);
  CHECK(sample_index(logits, 1.0, 0.19) == 0);
  CHECK(sample_index(logits, 1.0, 0.21) == 1);
  CHECK(sample_index(logits, 1.0, 0.49) == 1);
  CHECK(sample_index(logits, 1.0, 0.51) == 2);
  CHECK(sample_index(logits, 1.0, 0.999999) == 2);
  // Frequencies over a uniform stream match the probabilities.
  Rng rng(3);
  std::array<int, 3> counts{};
  const int n = 30000;
  for (int i = 0; i < n; ++i) counts[sample_index(logits, 1.0, uniform01(rng))]++;
  CHECK(std::abs(counts[0] / double(n) - 0.2) < 0.015);
  CHECK(std::abs(counts[2] / double(n) - 0.5) < 0.015);
}

TEST_CASE("incremental decoder: ring buffers hold (K-1)*d past inputs") {
  const ModelSpec spec = GenSpec();
  const auto m = random_model<double>(spec, 1);
  std::mt19937_64 rng(1);
  const auto cond = random_conditioning<double>(spec, 100, rng);
  IncrementalDecoder<double> dec(m, cond);
  std::size_t l = 0;
  for (int b = 0; b < spec.decoder.blocks; ++b)
    for (int i = 0; i < spec.decoder.layers_per_block; ++i, ++l)
      CHECK(dec.buffer_size(l) == static_cast<std::size_t>((spec.decoder.kernel_size - 1) << i));
}

TEST_CASE("incremental and naive generation agree in double precision") {
  const ModelSpec spec = GenSpec();
  std::mt19937_64 rng(2);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto m = random_model<double>(spec, seed);
    const auto cond = random_conditioning<double>(spec, 300, rng);
    const auto r = compare_generators(m, cond, 300, seed, 1.0);
    CHECK(r.index_agreement == 1.0);
    CHECK(r.max_logit_diff < 1e-10);
  }
}

TEST_CASE("incremental and naive generation agree in single precision") {
  const ModelSpec spec = GenSpec();
  std::mt19937_64 rng(3);
  const auto m = random_model<float>(spec, 5);
  const auto cond = random_conditioning<float>(spec, 300, rng);
  const auto r = compare_generators(m, cond, 300, 5, 1.0);
  CHECK(r.index_agreement >= 0.99);
  CHECK(r.max_logit_diff < 1e-3);
}

TEST_CASE("generation is deterministic per seed") {
  const ModelSpec spec = GenSpec();
  std::mt19937_64 rng(4);
  const auto m = random_model<float>(spec, 6);
  const auto cond = random_conditioning<float>(spec, 200, rng);
  const auto a = generate_incremental(m, cond, 9, 1.0);
  const auto b = generate_incremental(m, cond, 9, 1.0);
  const auto c = generate_incremental(m, cond, 10, 1.0);
  CHECK(a.indices == b.indices);
  CHECK(a.indices != c.indices);
  CHECK(a.size() == 200);
  CHECK_THROWS_AS(generate_incremental(m, cond, 9, -1.0), Error);
}

TEST_CASE("convert: output keeps the input duration and rate") {
  const ModelSpec spec = GenSpec();
  auto m = random_model<float>(spec, 7);
  std::mt19937_64 rng(5);
  AudioClip in = random_clip(rng, 10400, 8000, 0.5);  // 1.3 s
  const AudioClip out = convert(in, 1, m, 1.0, 3);
  CHECK(out.sample_rate == 8000);
  CHECK(out.size() == in.size());
  const AudioClip again = convert(in, 1, m, 1.0, 3);
  CHECK(out.samples == again.samples);
  AudioClip hi = random_clip(rng, 20800, 16000, 0.5);  // 1.3 s at another rate
  const AudioClip out_hi = convert(hi, 0, m, 0.0, 3);
  CHECK(out_hi.sample_rate == 16000);
  CHECK(out_hi.size() == hi.size());
  AudioClip tiny = random_clip(rng, 10, 8000);
  CHECK_THROWS_AS(convert(tiny, 0, m, 1.0, 1), Error);
}

TEST_CASE("throughput probe integrates naive cost") {
  const ModelSpec spec = GenSpec();
  const auto m = random_model<float>(spec, 8);
  std::mt19937_64 rng(6);
  const auto cond = random_conditioning<float>(spec, 400, rng);
  const auto r = measure_throughput(m, cond, 400, 5);
  CHECK(r.naive_probes.size() == 5);
  CHECK(r.naive_probes.back().first == 400);
  CHECK(r.naive_seconds > 0.0);
  CHECK(r.incremental_seconds > 0.0);
}
