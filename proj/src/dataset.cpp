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

#include "svc/dataset.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "svc/error.hpp"
#include "svc/random.hpp"

namespace svc {

using nlohmann::json;

std::vector<ManifestFile> DatasetManifest::files_of(std::size_t singer, Split split) const {
  std::vector<ManifestFile> out;
  for (const auto& f : singers.at(singer).files)
    if (f.split == split) out.push_back(f);
  return out;
}

SingerRegistry::SingerRegistry(std::vector<std::string> ids) : ids_(std::move(ids)) {
  for (int i = 0; i < static_cast<int>(ids_.size()); ++i) {
    if (!lookup_.emplace(ids_[i], i).second)
      Fail(ErrorKind::kValidation, "duplicate singer id '" + ids_[i] + "'");
  }
}

int SingerRegistry::index_of(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) {
    std::string known;
    for (const auto& s : ids_) known += (known.empty() ? "" : ", ") + s;
    Fail(ErrorKind::kValidation, "unknown singer '" + id + "'; known singers: " + known);
  }
  return it->second;
}

LoadedManifest parse_manifest(const std::string& json_text,
                              const std::filesystem::path& directory,
                              bool check_files_exist) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("singers") || !doc["singers"].is_array())
    Fail(ErrorKind::kValidation, "manifest needs a top-level 'singers' array");

  LoadedManifest out;
  out.manifest.directory = directory;
  std::vector<std::string> ids;
  std::set<std::string> seen_ids;
  std::set<std::filesystem::path> seen_paths;
  for (const auto& entry : doc["singers"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string())
      Fail(ErrorKind::kValidation, "every singer entry needs a string 'id'");
    ManifestSinger singer;
    singer.id = entry["id"].get<std::string>();
    if (!seen_ids.insert(singer.id).second)
      Fail(ErrorKind::kValidation, "duplicate singer id '" + singer.id + "'");
    if (!entry.contains("files") || !entry["files"].is_array())
      Fail(ErrorKind::kValidation, "singer '" + singer.id + "' has no 'files' array");
    int train_count = 0;
    for (const auto& f : entry["files"]) {
      if (!f.is_object() || !f.contains("path") || !f["path"].is_string())
        Fail(ErrorKind::kValidation, "singer '" + singer.id + "': file entry needs a 'path'");
      ManifestFile mf;
      std::filesystem::path p = f["path"].get<std::string>();
      mf.path = p.is_absolute() ? p : (directory / p).lexically_normal();
      const std::string split = f.value("split", std::string("train"));
      if (split == "train") {
        mf.split = Split::kTrain;
        ++train_count;
      } else if (split == "validation") {
        mf.split = Split::kValidation;
      } else {
        Fail(ErrorKind::kValidation, "singer '" + singer.id + "': unknown split '" + split +
                                         "' (expected train or validation)");
      }
      if (!seen_paths.insert(mf.path).second)
        Fail(ErrorKind::kValidation, "path listed twice: " + mf.path.string());
      if (check_files_exist && !std::filesystem::exists(mf.path))
        Fail(ErrorKind::kValidation, "singer '" + singer.id + "': missing file " +
                                         mf.path.string());
      singer.files.push_back(std::move(mf));
    }
    if (train_count == 0)
      Fail(ErrorKind::kValidation, "singer '" + singer.id + "' has no train files");
    ids.push_back(singer.id);
    out.manifest.singers.push_back(std::move(singer));
  }
  out.registry = SingerRegistry(std::move(ids));
  return out;
}

LoadedManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kValidation, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const SingerRegistry& registry,
                   const std::filesystem::path& path) {
  json doc;
  doc["singers"] = json::array();
  const auto dir = path.parent_path();
  for (std::size_t s = 0; s < manifest.singers.size(); ++s) {
    json entry;
    entry["id"] = registry.id(static_cast<int>(s));
    entry["files"] = json::array();
    for (const auto& f : manifest.singers[s].files) {
      std::filesystem::path rel = f.path.lexically_relative(dir);
      if (rel.empty() || *rel.begin() == "..") rel = f.path;
      entry["files"].push_back(
          {{"path", rel.generic_string()},
           {"split", f.split == Split::kTrain ? "train" : "validation"}});
    }
    doc["singers"].push_back(entry);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write manifest " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) Fail(ErrorKind::kIo, "failed writing manifest " + path.string());
}

Corpus::Corpus(LoadedManifest loaded, int sample_rate)
    : loaded_(std::move(loaded)), sample_rate_(sample_rate) {
  const auto& singers = loaded_.manifest.singers;
  train_.resize(singers.size());
  validation_.resize(singers.size());
  train_paths_.resize(singers.size());
  validation_paths_.resize(singers.size());
  for (std::size_t s = 0; s < singers.size(); ++s) {
    for (const auto& f : singers[s].files) {
      AudioClip clip = resample(read_wav(f.path), sample_rate_);
      if (f.split == Split::kTrain) {
        train_[s].push_back(std::move(clip));
        train_paths_[s].push_back(f.path);
      } else {
        validation_[s].push_back(std::move(clip));
        validation_paths_[s].push_back(f.path);
      }
    }
  }
}

std::size_t Corpus::num_train_clips() const {
  std::size_t n = 0;
  for (const auto& v : train_) n += v.size();
  return n;
}

TrainingItem make_training_item(const AudioClip& source, std::size_t crop_start,
                                std::size_t crop_len, Variant variant, int singer) {
  AudioClip crop;
  crop.sample_rate = source.sample_rate;
  crop.samples.assign(source.samples.begin() + static_cast<std::ptrdiff_t>(crop_start),
                      source.samples.begin() +
                          static_cast<std::ptrdiff_t>(crop_start + crop_len));
  crop = apply_variant(crop, variant);
  TrainingItem item;
  item.companded = compand_clip(crop);
  item.mulaw = mu_law_encode(crop);
  item.singer_index = singer;
  item.crop_start = crop_start;
  item.variant = variant;
  return item;
}

void check_batch_preconditions(const Corpus& corpus, std::size_t crop_len,
                               std::size_t crop_multiple) {
  if (corpus.k() < 2)
    Fail(ErrorKind::kValidation, "training needs at least 2 singers (manifest has " +
                                     std::to_string(corpus.k()) + ")");
  if (crop_len == 0 || crop_multiple == 0 || crop_len % crop_multiple != 0)
    Fail(ErrorKind::kValidation, "crop length " + std::to_string(crop_len) +
                                     " is not a positive multiple of " +
                                     std::to_string(crop_multiple));
  for (int s = 0; s < corpus.k(); ++s) {
    const auto& clips = corpus.train_clips(s);
    for (std::size_t f = 0; f < clips.size(); ++f)
      if (clips[f].size() < crop_len)
        Fail(ErrorKind::kValidation,
             "train file " + corpus.train_paths(s)[f].string() + " has " +
                 std::to_string(clips[f].size()) + " samples, shorter than the crop length " +
                 std::to_string(crop_len));
  }
}

TrainingItem draw_training_item(const Corpus& corpus, std::size_t crop_len, Rng& rng,
                                bool augment) {
  const int singer = static_cast<int>(uniform_index(rng, corpus.k()));
  const auto& clips = corpus.train_clips(singer);
  const int file = static_cast<int>(uniform_index(rng, clips.size()));
  const std::size_t start = uniform_index(rng, clips[file].size() - crop_len + 1);
  const auto variant =
      augment ? static_cast<Variant>(uniform_index(rng, kNumVariants)) : Variant::kIdentity;
  TrainingItem item = make_training_item(clips[file], start, crop_len, variant, singer);
  item.file_index = file;
  return item;
}

std::vector<TrainingItem> sample_batch(const Corpus& corpus, std::size_t crop_len,
                                       std::size_t batch_size, std::uint64_t rng_seed,
                                       std::size_t crop_multiple, bool augment) {
  check_batch_preconditions(corpus, crop_len, crop_multiple);
  Rng rng(rng_seed);
  std::vector<TrainingItem> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b)
    batch.push_back(draw_training_item(corpus, crop_len, rng, augment));
  return batch;
}

}  // namespace svc
