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

#include "svc/augment.hpp"

#include <algorithm>

namespace svc {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kIdentity: return "identity";
    case Variant::kReversed: return "reversed";
    case Variant::kNegated: return "negated";
    case Variant::kReversedNegated: return "reversed_negated";
  }
  return "unknown";
}

AudioClip reverse(const AudioClip& clip) {
  AudioClip out = clip;
  std::reverse(out.samples.begin(), out.samples.end());
  return out;
}

AudioClip negate(const AudioClip& clip) {
  AudioClip out = clip;
  for (float& s : out.samples) s = -s;
  return out;
}

AudioClip apply_variant(const AudioClip& clip, Variant v) {
  switch (v) {
    case Variant::kIdentity: return clip;
    case Variant::kReversed: return reverse(clip);
    case Variant::kNegated: return negate(clip);
    case Variant::kReversedNegated: return negate(reverse(clip));
  }
  return clip;
}

AugmentedSet augment(const AudioClip& clip, int singer_id) {
  AugmentedSet set;
  set.singer_id = singer_id;
  for (int v = 0; v < kNumVariants; ++v)
    set.variants[v] = apply_variant(clip, static_cast<Variant>(v));
  return set;
}

}  // namespace svc
