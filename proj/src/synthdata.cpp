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

#include "svc/synthdata.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "svc/dataset.hpp"
#include "svc/error.hpp"
#include "svc/random.hpp"

namespace svc {

using nlohmann::json;

void SingerProfile::validate() const {
  double sum = 0.0;
  for (double a : harmonics) {
    if (!(a >= 0.0)) Fail(ErrorKind::kValidation, "profile '" + name + "': negative harmonic");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    Fail(ErrorKind::kValidation, "profile '" + name + "': harmonic amplitudes must sum to 1");
  if (!(f0_min_hz > 50.0 && f0_max_hz < 1000.0 && f0_min_hz <= f0_max_hz))
    Fail(ErrorKind::kValidation, "profile '" + name + "': f0 range must lie inside (50, 1000) Hz");
  if (!(vibrato_rate_hz >= 0.0 && vibrato_depth_cents >= 0.0))
    Fail(ErrorKind::kValidation, "profile '" + name + "': vibrato must be nonnegative");
  if (name.empty()) Fail(ErrorKind::kValidation, "profile needs a name");
}

std::vector<double> SingerProfile::note_grid() const {
  static constexpr int kPentatonic[] = {0, 2, 4, 7, 9};
  std::vector<double> notes;
  for (int octave = 0; octave < 8; ++octave)
    for (int step : kPentatonic) {
      const double f = f0_min_hz * std::pow(2.0, (12 * octave + step) / 12.0);
      if (f <= f0_max_hz * (1 + 1e-9)) notes.push_back(f);
    }
  return notes;
}

double SingerProfile::expected_centroid_hz() const {
  double num = 0.0, den = 0.0;
  for (int h = 0; h < kNumHarmonics; ++h) {
    num += harmonics[h] * harmonics[h] * (h + 1);
    den += harmonics[h] * harmonics[h];
  }
  const auto grid = note_grid();
  double mean_f0 = 0.0;
  for (double f : grid) mean_f0 += f / grid.size();
  return mean_f0 * num / den;
}

SingerProfile dark_profile() {
  SingerProfile p;
  p.name = "dark";
  p.harmonics = {0.5, 0.3, 0.2, 0, 0, 0, 0, 0, 0, 0};
  p.vibrato_rate_hz = 5.0;
  p.vibrato_depth_cents = 30.0;
  return p;
}

SingerProfile bright_profile() {
  SingerProfile p;
  p.name = "bright";
  p.harmonics = {0.05, 0.02, 0.02, 0.02, 0.04, 0.2, 0.2, 0.2, 0.15, 0.1};
  p.vibrato_rate_hz = 6.0;
  p.vibrato_depth_cents = 30.0;
  return p;
}

std::vector<SingerProfile> default_profiles() { return {dark_profile(), bright_profile()}; }

std::vector<SingerProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kValidation, "cannot open profile spec " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_array()) Fail(ErrorKind::kValidation, path.string() + ": expected a JSON array");
  std::vector<SingerProfile> out;
  try {
    for (const auto& e : doc) {
      SingerProfile p;
      p.name = e.at("name").get<std::string>();
      const auto h = e.at("harmonics").get<std::vector<double>>();
      if (h.size() != kNumHarmonics)
        Fail(ErrorKind::kValidation, "profile '" + p.name + "': needs exactly 10 harmonics");
      std::copy(h.begin(), h.end(), p.harmonics.begin());
      p.vibrato_rate_hz = e.value("vibrato_rate_hz", p.vibrato_rate_hz);
      p.vibrato_depth_cents = e.value("vibrato_depth_cents", p.vibrato_depth_cents);
      p.f0_min_hz = e.value("f0_min_hz", p.f0_min_hz);
      p.f0_max_hz = e.value("f0_max_hz", p.f0_max_hz);
      p.validate();
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, path.string() + ": " + e.what());
  }
  return out;
}

void save_profiles(const std::vector<SingerProfile>& profiles, const std::filesystem::path& path) {
  json doc = json::array();
  for (const auto& p : profiles)
    doc.push_back({{"name", p.name},
                   {"harmonics", std::vector<double>(p.harmonics.begin(), p.harmonics.end())},
                   {"vibrato_rate_hz", p.vibrato_rate_hz},
                   {"vibrato_depth_cents", p.vibrato_depth_cents},
                   {"f0_min_hz", p.f0_min_hz},
                   {"f0_max_hz", p.f0_max_hz}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) Fail(ErrorKind::kIo, "failed writing " + path.string());
}

AudioClip generate_song(const SingerProfile& profile, double duration_s,
                        std::uint64_t melody_seed, int sample_rate) {
  if (!(duration_s > 0.0)) Fail(ErrorKind::kDomain, "generate_song: duration must be positive");
  profile.validate();
  constexpr double kNotesPerSecond = 8.0;
  constexpr double kRampSeconds = 0.010;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const auto grid = profile.note_grid();
  const auto samples_per_note = static_cast<std::size_t>(std::llround(sample_rate / kNotesPerSecond));
  const std::size_t num_notes = (n + samples_per_note - 1) / samples_per_note;
  Rng rng(melody_seed);
  std::vector<double> melody(num_notes);
  for (auto& f : melody) f = grid[uniform_index(rng, grid.size())];

  std::vector<double> out(n);
  const double ramp = kRampSeconds * sample_rate;
  const double nyquist = 0.5 * sample_rate;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t note = i / samples_per_note;
    const double pos = static_cast<double>(i % samples_per_note);
    const double t = static_cast<double>(i) / sample_rate;
    const double cents = profile.vibrato_depth_cents * std::sin(kTwoPi * profile.vibrato_rate_hz * t);
    const double f = melody[note] * std::pow(2.0, cents / 1200.0);
    phase += kTwoPi * f / sample_rate;
    if (phase > kTwoPi) phase -= kTwoPi;
    double v = 0.0;
    for (int h = 0; h < kNumHarmonics; ++h) {
      if (profile.harmonics[h] == 0.0 || (h + 1) * f >= nyquist) continue;
      v += profile.harmonics[h] * std::sin((h + 1) * phase);
    }
    const double note_len = static_cast<double>(
        std::min(samples_per_note, n - note * samples_per_note));
    const double env = std::min({1.0, (pos + 1.0) / ramp, (note_len - pos) / ramp});
    out[i] = v * env;
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(n);
  const double gain = peak > 0.0 ? 0.9 / peak : 0.0;
  for (std::size_t i = 0; i < n; ++i) clip.samples[i] = static_cast<float>(out[i] * gain);
  return clip;
}

std::filesystem::path make_synthetic_manifest(const std::vector<SingerProfile>& profiles,
                                              const std::filesystem::path& out_dir,
                                              const SynthCorpusOptions& options) {
  if (profiles.size() < 2)
    Fail(ErrorKind::kValidation, "a synthetic corpus needs at least 2 profiles");
  if (options.songs_per_singer < 1)
    Fail(ErrorKind::kValidation, "songs_per_singer must be >= 1");
  for (const auto& p : profiles) p.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    Fail(ErrorKind::kIo, "cannot create directory " + out_dir.string());

  DatasetManifest manifest;
  manifest.directory = out_dir;
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < profiles.size(); ++s) {
    const auto& p = profiles[s];
    const auto dir = out_dir / p.name;
    std::filesystem::create_directories(dir, ec);
    if (ec) Fail(ErrorKind::kIo, "cannot create directory " + dir.string());
    ManifestSinger singer;
    singer.id = p.name;
    for (int song = 0; song < options.songs_per_singer; ++song) {
      char name[32];
      std::snprintf(name, sizeof(name), "song_%02d.wav", song);
      const auto path = dir / name;
      const auto seed = derive_seed(options.seed, {s, static_cast<std::uint64_t>(song)});
      write_wav(generate_song(p, options.duration_s, seed, options.sample_rate), path);
      const bool validation = options.songs_per_singer > 1 && song == options.songs_per_singer - 1;
      singer.files.push_back({path, validation ? Split::kValidation : Split::kTrain});
    }
    ids.push_back(p.name);
    manifest.singers.push_back(std::move(singer));
  }
  save_profiles(profiles, out_dir / "profiles.json");
  const auto manifest_path = out_dir / "manifest.json";
  save_manifest(manifest, SingerRegistry(ids), manifest_path);
  return manifest_path;
}

}  // namespace svc
