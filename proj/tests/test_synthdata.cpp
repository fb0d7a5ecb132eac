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

#include <algorithm>
#include <fstream>

#include "svc/dataset.hpp"
#include "svc/error.hpp"
#include "svc/eval.hpp"
#include "svc/synthdata.hpp"
#include "test_util.hpp"

using namespace svc;
using svc::testing::TempDir;

TEST_CASE("synth: length, peak, determinism") {
  const AudioClip a = generate_song(dark_profile(), 2.0, 5, 16000);
  CHECK(a.size() == 32000);
  CHECK(a.sample_rate == 16000);
  float peak = 0.0f;
  for (float v : a.samples) peak = std::max(peak, std::abs(v));
  CHECK(peak == doctest::Approx(0.9).epsilon(1e-3));
  const AudioClip b = generate_song(dark_profile(), 2.0, 5, 16000);
  CHECK(a.samples == b.samples);
  const AudioClip c = generate_song(dark_profile(), 2.0, 6, 16000);
  CHECK(a.samples != c.samples);
}

TEST_CASE("synth: notes start and end silent") {
  const AudioClip a = generate_song(bright_profile(), 1.0, 1, 8000);
  // 8 notes per second at 8 kHz: 1000 samples per note, ramps of 80 samples.
  for (int note = 0; note < 8; ++note) {
    CHECK(std::abs(a.samples[note * 1000 + 999]) < 0.02);
    CHECK(std::abs(a.samples[note * 1000]) < 0.02);
  }
}

TEST_CASE("synth: single-harmonic profile has a line spectrum near the note") {
  SingerProfile p;
  p.name = "pure";
  p.harmonics = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  p.f0_min_hz = 200;
  p.f0_max_hz = 200;  // a one-note grid
  p.vibrato_depth_cents = 10;
  const AudioClip a = generate_song(p, 1.0, 3, 16000);
  const auto power = power_spectrum(a);
  const std::size_t n = power.size();
  double total = 0.0, near = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double f = static_cast<double>(k) * 16000 / n;
    total += power[k];
    if (std::abs(f - 200.0) < 15.0) near += power[k];
  }
  CHECK(near / total > 0.95);
  CHECK(spectral_centroid(a) == doctest::Approx(200.0).epsilon(0.05));
}

TEST_CASE("synth: profiles validate and round-trip through JSON") {
  TempDir dir("profiles");
  save_profiles(default_profiles(), dir / "p.json");
  const auto back = load_profiles(dir / "p.json");
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "dark");
  CHECK(back[1].harmonics == bright_profile().harmonics);
  for (const auto& p : back) {
    double sum = 0.0;
    for (double h : p.harmonics) sum += h;
    CHECK(sum == doctest::Approx(1.0));
  }
  SingerProfile bad = dark_profile();
  bad.harmonics[0] = 0.6;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = dark_profile();
  bad.f0_max_hz = 1200;
  CHECK_THROWS_AS(bad.validate(), Error);
  {
    std::ofstream o(dir / "bad.json");
    o << R"([{"name": "x", "harmonics": [1, 0]}])";
  }
  CHECK_THROWS_AS(load_profiles(dir / "bad.json"), Error);
}

TEST_CASE("synth: corpus manifest layout") {
  TempDir dir("corpus");
  SynthCorpusOptions o;
  o.songs_per_singer = 4;
  o.duration_s = 0.5;
  o.sample_rate = 8000;
  const auto path = make_synthetic_manifest(default_profiles(), dir.path(), o);
  const auto loaded = load_manifest(path);
  CHECK(loaded.registry.k() == 2);
  int train = 0, val = 0;
  for (const auto& s : loaded.manifest.singers) {
    for (const auto& f : s.files) (f.split == Split::kTrain ? train : val)++;
    CHECK(s.files.back().split == Split::kValidation);
  }
  CHECK(train == 6);
  CHECK(val == 2);
  CHECK(std::filesystem::exists(dir / "profiles.json"));
  CHECK_THROWS_AS(make_synthetic_manifest({dark_profile()}, dir / "one", o), Error);
}

TEST_CASE("synth: the centroid oracle separates the generated corpus") {
  TempDir dir("oracle");
  SynthCorpusOptions o;
  o.songs_per_singer = 4;
  o.duration_s = 2.0;
  o.sample_rate = 8000;
  const auto profiles = default_profiles();
  const auto path = make_synthetic_manifest(profiles, dir.path(), o);
  const Corpus corpus(load_manifest(path), 8000);
  for (int s = 0; s < 2; ++s) {
    for (const auto& c : corpus.train_clips(s)) CHECK(centroid_oracle(c, profiles) == s);
    for (const auto& c : corpus.validation_clips(s)) CHECK(centroid_oracle(c, profiles) == s);
  }
}
