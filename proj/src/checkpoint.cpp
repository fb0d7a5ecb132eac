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

#include "svc/checkpoint.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "svc/dataset.hpp"
#include "svc/error.hpp"
#include "svc/nn/serialize.hpp"

namespace svc {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::filesystem::path StemOf(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".svc" || ext == ".meta") return path.parent_path() / path.stem();
  return path;
}

std::filesystem::path WithExt(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

}  // namespace

int Checkpoint::singer_index(const std::string& id) const {
  return SingerRegistry(singer_ids).index_of(id);
}

std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      Fail(ErrorKind::kValidation, origin + ":" + std::to_string(lineno) + ": expected key=value");
    kv[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kFileNotFound, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str(), path.string());
}

void write_kv_file(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  if (!out) Fail(ErrorKind::kIo, "failed writing " + path.string());
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& stem_in) {
  const auto stem = StemOf(stem_in);
  const auto& params = ckpt.model.params();
  std::vector<nn::Tensor> tensors;
  tensors.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    tensors.push_back(nn::to_tensor(params.name(static_cast<int>(i)), params[static_cast<int>(i)]));
  nn::write_tensors(WithExt(stem, ".svc"), tensors);

  auto kv = ckpt.model.spec().to_kv();
  for (const auto& [k, v] : ckpt.extra) kv["extra." + k] = v;
  std::string ids;
  for (const auto& id : ckpt.singer_ids) ids += (ids.empty() ? "" : ",") + id;
  kv["format"] = "SVC1";
  kv["singer_ids"] = ids;
  kv["phase"] = std::to_string(ckpt.phase);
  kv["epoch"] = std::to_string(ckpt.epoch);
  write_kv_file(WithExt(stem, ".meta"), kv);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto stem = StemOf(path);
  const auto meta_path = WithExt(stem, ".meta");
  if (!std::filesystem::exists(meta_path))
    Fail(ErrorKind::kFileNotFound, "checkpoint metadata not found: " + meta_path.string());
  const auto kv = read_kv_file(meta_path);
  const ModelSpec spec = ModelSpec::from_kv(kv);
  Checkpoint ckpt{Model<float>(spec), {}, 1, 0, {}};
  if (auto it = kv.find("singer_ids"); it != kv.end()) {
    std::stringstream ss(it->second);
    std::string id;
    while (std::getline(ss, id, ',')) ckpt.singer_ids.push_back(id);
  }
  if (static_cast<int>(ckpt.singer_ids.size()) != spec.num_singers)
    Fail(ErrorKind::kMalformedFile, meta_path.string() + ": singer_ids does not list " +
                                        std::to_string(spec.num_singers) + " singers");
  try {
    if (auto it = kv.find("phase"); it != kv.end()) ckpt.phase = std::stoi(it->second);
    if (auto it = kv.find("epoch"); it != kv.end()) ckpt.epoch = std::stoi(it->second);
  } catch (const std::exception&) {
    Fail(ErrorKind::kMalformedFile, meta_path.string() + ": bad phase/epoch");
  }
  for (const auto& [k, v] : kv)
    if (k.rfind("extra.", 0) == 0) ckpt.extra[k.substr(6)] = v;

  const auto tensors = nn::read_tensors(WithExt(stem, ".svc"));
  auto& params = ckpt.model.params();
  std::map<std::string, const nn::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.name(static_cast<int>(i));
    auto it = by_name.find(name);
    if (it == by_name.end())
      Fail(ErrorKind::kMalformedFile, "checkpoint is missing tensor '" + name + "'");
    nn::assign_from(*it->second, params[static_cast<int>(i)]);
  }
  return ckpt;
}

std::filesystem::path checkpoint_stem(const std::filesystem::path& dir, int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "checkpoint-%04d", epoch);
  return dir / buf;
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  static const std::regex pattern(R"(checkpoint-(\d+)\.meta)");
  int best = -1;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) best = std::max(best, std::stoi(m[1].str()));
  }
  if (best < 0) return std::nullopt;
  return checkpoint_stem(dir, best);
}

}  // namespace svc
