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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svc/audio.hpp"

namespace svc {

inline constexpr int kNumHarmonics = 10;

/// A synthetic "singer": a fixed harmonic envelope (timbre) with vibrato.
struct SingerProfile {
  std::string name;
  std::array<double, kNumHarmonics> harmonics{};  // nonnegative, sums to 1
  double vibrato_rate_hz = 5.0;
  double vibrato_depth_cents = 30.0;
  double f0_min_hz = 150.0;
  double f0_max_hz = 300.0;

  void validate() const;  // throws kValidation
  /// Pentatonic note frequencies inside [f0_min, f0_max].
  std::vector<double> note_grid() const;
  /// Power-weighted mean frequency expected for songs of this profile.
  double expected_centroid_hz() const;
};

/// Energy in harmonics 1-3.
SingerProfile dark_profile();
/// Energy concentrated in harmonics 6-10.
SingerProfile bright_profile();
std::vector<SingerProfile> default_profiles();

std::vector<SingerProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(const std::vector<SingerProfile>& profiles, const std::filesystem::path& path);

/// Random pentatonic melody at 8 notes/s, additive synthesis with vibrato,
/// 10 ms linear attack/release per note, peak-normalized to 0.9.
AudioClip generate_song(const SingerProfile& profile, double duration_s,
                        std::uint64_t melody_seed, int sample_rate);

struct SynthCorpusOptions {
  int songs_per_singer = 4;
  double duration_s = 30.0;
  int sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 7;
};

/// Writes one directory of WAVs per profile, `profiles.json`, and
/// `manifest.json` (last song of each singer in the validation split).
/// Returns the manifest path.
std::filesystem::path make_synthetic_manifest(const std::vector<SingerProfile>& profiles,
                                              const std::filesystem::path& out_dir,
                                              const SynthCorpusOptions& options = {});

}  // namespace svc
