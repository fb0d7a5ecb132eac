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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svc/model.hpp"

namespace svc {

/// A trained model plus the metadata needed to use it.
struct Checkpoint {
  Model<float> model;
  std::vector<std::string> singer_ids;
  int phase = 1;  // 1 = reconstruction + confusion, 2 = adds backtranslation
  int epoch = 0;
  std::map<std::string, std::string> extra;  // free-form metadata

  int singer_index(const std::string& id) const;
};

// A checkpoint is two files sharing a stem: `<stem>.svc` (SVC1 tensor
// container) and `<stem>.meta` (key=value lines).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem);
/// Accepts the stem or either of the two file paths.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Latest `checkpoint-NNNN` stem in `dir`, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);
std::filesystem::path checkpoint_stem(const std::filesystem::path& dir, int epoch);

/// key=value text with '#' comments; used by checkpoints and config files.
std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& origin);
void write_kv_file(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& kv);

}  // namespace svc
