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

#include <cmath>
#include <set>

#include "svc/dataset.hpp"
#include "svc/error.hpp"
#include "svc/synthdata.hpp"
#include "test_util.hpp"

using namespace svc;
using svc::testing::TempDir;

namespace {

std::string ManifestJson(int singers, int files, int validation_per_singer) {
  std::string s = "{\"singers\": [";
  for (int i = 0; i < singers; ++i) {
    s += (i ? "," : "") + std::string("{\"id\": \"s") + std::to_string(i) + "\", \"files\": [";
    for (int f = 0; f < files; ++f) {
      const bool val = f >= files - validation_per_singer;
      s += (f ? "," : "") + std::string("{\"path\": \"s") + std::to_string(i) + "/" +
           std::to_string(f) + ".wav\", \"split\": \"" + (val ? "validation" : "train") + "\"}";
    }
    s += "]}";
  }
  return s + "]}";
}

ErrorKind KindOf(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

Corpus SmallCorpus(const TempDir& dir, int songs = 3, double seconds = 1.0) {
  SynthCorpusOptions o;
  o.songs_per_singer = songs;
  o.duration_s = seconds;
  o.sample_rate = 8000;
  const auto path = make_synthetic_manifest(default_profiles(), dir.path(), o);
  return Corpus(load_manifest(path), 8000);
}

}  // namespace

TEST_CASE("manifest: nine train files and one validation file per singer") {
  const auto m = parse_manifest(ManifestJson(5, 10, 1), "/data", false);
  CHECK(m.registry.k() == 5);
  std::size_t train = 0, val = 0;
  for (const auto& s : m.manifest.singers)
    for (const auto& f : s.files) (f.split == Split::kTrain ? train : val)++;
  CHECK(train == 45);
  CHECK(val == 5);
  CHECK(m.manifest.singers[2].files[0].path == std::filesystem::path("/data/s2/0.wav"));
}

TEST_CASE("manifest: twelve singers with four training songs") {
  const auto m = parse_manifest(ManifestJson(12, 4, 0), "/data", false);
  CHECK(m.registry.k() == 12);
  CHECK(m.registry.index_of("s11") == 11);
  CHECK(m.registry.id(3) == "s3");
}

TEST_CASE("manifest: validation errors name the problem") {
  std::string msg;
  const std::string dup =
      R"({"singers": [{"id": "amy", "files": [{"path": "a.wav"}]},
                      {"id": "amy", "files": [{"path": "b.wav"}]}]})";
  CHECK(KindOf([&] { parse_manifest(dup, "/d", false); }, &msg) == ErrorKind::kValidation);
  CHECK(msg.find("amy") != std::string::npos);

  const std::string no_train =
      R"({"singers": [{"id": "bo", "files": [{"path": "a.wav", "split": "validation"}]}]})";
  CHECK(KindOf([&] { parse_manifest(no_train, "/d", false); }, &msg) == ErrorKind::kValidation);
  CHECK(msg.find("bo") != std::string::npos);

  const std::string twice =
      R"({"singers": [{"id": "a", "files": [{"path": "x.wav"}]},
                      {"id": "b", "files": [{"path": "x.wav"}]}]})";
  CHECK(KindOf([&] { parse_manifest(twice, "/d", false); }) == ErrorKind::kValidation);

  const std::string missing = R"({"singers": [{"id": "cy", "files": [{"path": "nope.wav"}]}]})";
  CHECK(KindOf([&] { parse_manifest(missing, "/nonexistent", true); }, &msg) ==
        ErrorKind::kValidation);
  CHECK(msg.find("nope.wav") != std::string::npos);

  CHECK(KindOf([&] { parse_manifest("[1, 2]", "/d", false); }) == ErrorKind::kValidation);
  CHECK(KindOf([&] { parse_manifest("{", "/d", false); }) == ErrorKind::kValidation);
}

TEST_CASE("registry: unknown id lists the known ones") {
  SingerRegistry r({"alto", "bass"});
  std::string msg;
  CHECK(KindOf([&] { r.index_of("tenor"); }, &msg) == ErrorKind::kValidation);
  CHECK(msg.find("alto") != std::string::npos);
  CHECK(msg.find("bass") != std::string::npos);
}

TEST_CASE("manifest: save then load round-trips") {
  TempDir dir("manifest");
  const Corpus corpus = SmallCorpus(dir);
  save_manifest(corpus.manifest(), corpus.registry(), dir / "copy.json");
  const auto again = load_manifest(dir / "copy.json");
  CHECK(again.registry.ids() == corpus.registry().ids());
  REQUIRE(again.manifest.singers.size() == corpus.manifest().singers.size());
  for (std::size_t s = 0; s < again.manifest.singers.size(); ++s)
    for (std::size_t f = 0; f < again.manifest.singers[s].files.size(); ++f) {
      CHECK(again.manifest.singers[s].files[f].path == corpus.manifest().singers[s].files[f].path);
      CHECK(again.manifest.singers[s].files[f].split == corpus.manifest().singers[s].files[f].split);
    }
}

TEST_CASE("batches: deterministic, crop-aligned, consistent encodings") {
  TempDir dir("batch");
  const Corpus corpus = SmallCorpus(dir);
  const auto a = sample_batch(corpus, 1600, 6, 42, 400);
  const auto b = sample_batch(corpus, 1600, 6, 42, 400);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mulaw.indices == b[i].mulaw.indices);
    CHECK(a[i].companded == b[i].companded);
    CHECK(a[i].singer_index == b[i].singer_index);
    CHECK(a[i].mulaw.size() == 1600);
    CHECK(a[i].companded.size() == 1600);
    // mulaw is the quantized companded crop.
    for (std::size_t t = 0; t < 1600; ++t) REQUIRE(a[i].mulaw.indices[t] == quantize(a[i].companded[t]));
    // and the crop is the augmented source window.
    const AudioClip& src = corpus.train_clips(a[i].singer_index)[a[i].file_index];
    AudioClip window;
    window.samples.assign(src.samples.begin() + a[i].crop_start,
                          src.samples.begin() + a[i].crop_start + 1600);
    const AudioClip v = apply_variant(window, a[i].variant);
    CHECK(mu_law_encode(v).indices == a[i].mulaw.indices);
  }
  const auto c = sample_batch(corpus, 1600, 6, 43, 400);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].mulaw.indices != c[i].mulaw.indices;
  CHECK(differs);
}

TEST_CASE("batches: singer frequencies are balanced and validation audio never appears") {
  TempDir dir("balance");
  const Corpus corpus = SmallCorpus(dir, 3, 0.5);
  const int n = 10000;
  const auto batch = sample_batch(corpus, 400, n, 7, 400);
  int first = 0;
  std::array<int, 4> variants{};
  for (const auto& item : batch) {
    first += item.singer_index == 0;
    variants[static_cast<int>(item.variant)]++;
    CHECK(item.file_index < static_cast<int>(corpus.train_clips(item.singer_index).size()));
  }
  // Binomial(n, 1/2): standard deviation sqrt(n)/2.
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(first - n / 2.0) <= 5 * sigma);
  for (int v : variants) CHECK(std::abs(v - n / 4.0) <= 5 * std::sqrt(n * 0.25 * 0.75));
  // The validation file of each singer is its last song; train clips exclude it.
  for (int s = 0; s < corpus.k(); ++s) {
    CHECK(corpus.train_clips(s).size() == 2);
    CHECK(corpus.validation_clips(s).size() == 1);
    for (const auto& p : corpus.train_paths(s))
      for (const auto& vp : corpus.validation_paths(s)) CHECK(p != vp);
  }
}

TEST_CASE("batches: augmentation can be disabled") {
  TempDir dir("noaug");
  const Corpus corpus = SmallCorpus(dir, 2, 0.5);
  for (const auto& item : sample_batch(corpus, 400, 50, 1, 400, false))
    CHECK(item.variant == Variant::kIdentity);
}

TEST_CASE("batches: precondition errors") {
  TempDir dir("pre");
  const Corpus corpus = SmallCorpus(dir, 2, 0.5);
  std::string msg;
  CHECK(KindOf([&] { sample_batch(corpus, 500, 2, 1, 400); }, &msg) == ErrorKind::kValidation);
  CHECK(KindOf([&] { sample_batch(corpus, 8000, 2, 1, 400); }, &msg) == ErrorKind::kValidation);
  CHECK(msg.find("song_00.wav") != std::string::npos);

  TempDir solo_dir("solo");
  auto profiles = default_profiles();
  const auto path = make_synthetic_manifest(profiles, solo_dir.path(), {2, 0.5, 8000, 1});
  auto loaded = load_manifest(path);
  loaded.manifest.singers.resize(1);
  loaded.registry = SingerRegistry({loaded.manifest.singers[0].id});
  const Corpus solo(loaded, 8000);
  CHECK(KindOf([&] { sample_batch(solo, 400, 2, 1, 400); }, &msg) == ErrorKind::kValidation);
}

TEST_CASE("corpus: audio is resampled to the requested rate") {
  TempDir dir("rate");
  SynthCorpusOptions o;
  o.songs_per_singer = 2;
  o.duration_s = 0.5;
  o.sample_rate = 16000;
  const auto path = make_synthetic_manifest(default_profiles(), dir.path(), o);
  const Corpus corpus(load_manifest(path), 8000);
  CHECK(corpus.sample_rate() == 8000);
  CHECK(corpus.train_clips(0)[0].sample_rate == 8000);
  CHECK(corpus.train_clips(0)[0].size() == 4000);
  CHECK(corpus.num_train_clips() == 2);
}
