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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "svc/audio.hpp"
#include "svc/augment.hpp"
#include "svc/random.hpp"

namespace svc {

enum class Split { kTrain, kValidation };

struct ManifestFile {
  std::filesystem::path path;  // resolved against the manifest directory
  Split split = Split::kTrain;
};

struct ManifestSinger {
  std::string id;
  std::vector<ManifestFile> files;
};

struct DatasetManifest {
  std::vector<ManifestSinger> singers;
  std::filesystem::path directory;

  std::vector<ManifestFile> files_of(std::size_t singer, Split split) const;
};

/// Bijection between singer ids and indices [0, k) in manifest order.
class SingerRegistry {
 public:
  SingerRegistry() = default;
  explicit SingerRegistry(std::vector<std::string> ids);

  int k() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(int index) const { return ids_.at(index); }
  /// Throws kValidation listing the known ids when `id` is absent.
  int index_of(const std::string& id) const;
  bool contains(const std::string& id) const { return lookup_.count(id) > 0; }

 private:
  std::vector<std::string> ids_;
  std::map<std::string, int> lookup_;
};

struct LoadedManifest {
  DatasetManifest manifest;
  SingerRegistry registry;
};

LoadedManifest load_manifest(const std::filesystem::path& path);
/// Parses manifest JSON text; relative paths resolve against `directory`.
LoadedManifest parse_manifest(const std::string& json_text,
                              const std::filesystem::path& directory,
                              bool check_files_exist = true);
void save_manifest(const DatasetManifest& manifest, const SingerRegistry& registry,
                   const std::filesystem::path& path);

struct TrainingItem {
  MuLawClip mulaw;
  std::vector<float> companded;
  int singer_index = 0;
  // Where the clip came from; kept for inspection and tests.
  int file_index = 0;  // index into Corpus::train_clips(singer)
  std::size_t crop_start = 0;
  Variant variant = Variant::kIdentity;
};

/// Decoded audio for every file of a manifest, resampled to one rate.
class Corpus {
 public:
  Corpus(LoadedManifest loaded, int sample_rate);

  const DatasetManifest& manifest() const { return loaded_.manifest; }
  const SingerRegistry& registry() const { return loaded_.registry; }
  int sample_rate() const { return sample_rate_; }
  int k() const { return loaded_.registry.k(); }

  const std::vector<AudioClip>& train_clips(int singer) const { return train_.at(singer); }
  const std::vector<AudioClip>& validation_clips(int singer) const {
    return validation_.at(singer);
  }
  const std::vector<std::filesystem::path>& train_paths(int singer) const {
    return train_paths_.at(singer);
  }
  const std::vector<std::filesystem::path>& validation_paths(int singer) const {
    return validation_paths_.at(singer);
  }
  std::size_t num_train_clips() const;

 private:
  LoadedManifest loaded_;
  int sample_rate_;
  std::vector<std::vector<AudioClip>> train_;
  std::vector<std::vector<AudioClip>> validation_;
  std::vector<std::vector<std::filesystem::path>> train_paths_;
  std::vector<std::vector<std::filesystem::path>> validation_paths_;
};

/// Builds the training item for one explicit draw.
TrainingItem make_training_item(const AudioClip& source, std::size_t crop_start,
                                std::size_t crop_len, Variant variant, int singer);

/// One random draw: uniform singer, uniform train file, uniform crop start,
/// then a uniform augmentation variant (identity only when `augment` is off).
TrainingItem draw_training_item(const Corpus& corpus, std::size_t crop_len, Rng& rng,
                                bool augment = true);

/// Requires k >= 2, crop_len a positive multiple of `crop_multiple`, and every
/// train file at least crop_len long.
std::vector<TrainingItem> sample_batch(const Corpus& corpus, std::size_t crop_len,
                                       std::size_t batch_size, std::uint64_t rng_seed,
                                       std::size_t crop_multiple = 800, bool augment = true);
/// The precondition checks of sample_batch on their own.
void check_batch_preconditions(const Corpus& corpus, std::size_t crop_len,
                               std::size_t crop_multiple);

}  // namespace svc
