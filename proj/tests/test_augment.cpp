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

#include "svc/augment.hpp"
#include "test_util.hpp"

using namespace svc;

namespace {
bool Same(const AudioClip& a, const AudioClip& b) {
  return a.samples == b.samples && a.sample_rate == b.sample_rate;
}
}  // namespace

TEST_CASE("augment: four variants, the first bit-identical to the input") {
  std::mt19937_64 rng(1);
  const AudioClip c = svc::testing::random_clip(rng, 257);
  const AugmentedSet set = augment(c, 3);
  CHECK(set.singer_id == 3);
  CHECK(Same(set[Variant::kIdentity], c));
  CHECK(Same(set[Variant::kReversed], reverse(c)));
  CHECK(Same(set[Variant::kNegated], negate(c)));
  CHECK(Same(set[Variant::kReversedNegated], negate(reverse(c))));
  CHECK(set[Variant::kReversed].samples.front() == c.samples.back());
  CHECK(set[Variant::kNegated].samples[10] == -c.samples[10]);
}

TEST_CASE("augment: zero clip gives four zero clips") {
  AudioClip z;
  z.samples.assign(50, 0.0f);
  const AugmentedSet set = augment(z, 0);
  for (const auto& v : set.variants) CHECK(Same(v, z));
}

TEST_CASE("augment: involutions and orbit closure") {
  std::mt19937_64 rng(2);
  const AudioClip c = svc::testing::random_clip(rng, 100);
  CHECK(Same(reverse(reverse(c)), c));
  CHECK(Same(negate(negate(c)), c));
  CHECK(Same(negate(reverse(c)), reverse(negate(c))));
  const AugmentedSet set = augment(c, 0);
  for (const auto& v : set.variants)
    for (const AudioClip& image : {reverse(v), negate(v)}) {
      bool found = false;
      for (const auto& w : set.variants) found = found || Same(image, w);
      CHECK(found);
    }
}

TEST_CASE("augment: all variants share one power spectrum") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 4096);
  for (int trial = 0; trial < 20; ++trial) {
    const AudioClip c = svc::testing::random_clip(rng, len(rng));
    const auto ref = power_spectrum(c);
    double scale = 0.0;
    for (double v : ref) scale = std::max(scale, v);
    for (const auto& v : augment(c, 0).variants) {
      const auto p = power_spectrum(v);
      for (std::size_t k = 0; k < p.size(); ++k)
        REQUIRE(std::abs(p[k] - ref[k]) <= 1e-6 * std::max(scale, 1e-30));
    }
  }
}

TEST_CASE("augment: variant names") {
  CHECK(variant_name(Variant::kIdentity) == "identity");
  CHECK(variant_name(Variant::kReversedNegated) == "reversed_negated");
}
