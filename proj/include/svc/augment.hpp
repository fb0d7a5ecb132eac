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

#include <array>
#include <string_view>

#include "svc/audio.hpp"

namespace svc {

/// The four members of the {reverse, negate} orbit of a clip.
enum class Variant { kIdentity = 0, kReversed = 1, kNegated = 2, kReversedNegated = 3 };
inline constexpr int kNumVariants = 4;

std::string_view variant_name(Variant v);

AudioClip reverse(const AudioClip& clip);
AudioClip negate(const AudioClip& clip);
AudioClip apply_variant(const AudioClip& clip, Variant v);

struct AugmentedSet {
  std::array<AudioClip, kNumVariants> variants;  // indexed by Variant
  int singer_id = 0;

  const AudioClip& operator[](Variant v) const {
    return variants[static_cast<int>(v)];
  }
};

AugmentedSet augment(const AudioClip& clip, int singer_id);

}  // namespace svc
