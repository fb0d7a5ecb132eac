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

#include "svc/nn/serialize.hpp"

#include <cstring>
#include <fstream>

#include "svc/error.hpp"

namespace svc::nn {
namespace {

void PutU32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t GetU32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    Fail(ErrorKind::kMalformedFile, path.string() + ": truncated tensor container");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

template <typename S>
void AssignImpl(const Tensor& t, Mat<S>& m) {
  if (t.shape.size() != 2 || t.shape[0] != m.rows() || t.shape[1] != m.cols())
    Fail(ErrorKind::kShape, "tensor '" + t.name + "' has a shape that does not match the model");
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(t.values[i]);
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(kContainerMagic, 4);
  PutU32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.values.size() != t.numel())
      Fail(ErrorKind::kShape, "tensor '" + t.name + "' value count does not match its shape");
    PutU32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    PutU32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) PutU32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      PutU32(out, bits);
    }
  }
  if (!out) Fail(ErrorKind::kIo, "failed writing " + path.string());
}

std::vector<Tensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kFileNotFound, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kContainerMagic, 4) != 0)
    Fail(ErrorKind::kMalformedFile, path.string() + ": not an SVC1 tensor container");
  const std::uint32_t count = GetU32(in, path);
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name.resize(GetU32(in, path));
    if (!in.read(t.name.data(), static_cast<std::streamsize>(t.name.size())))
      Fail(ErrorKind::kMalformedFile, path.string() + ": truncated tensor name");
    const std::uint32_t ndim = GetU32(in, path);
    if (ndim > 8) Fail(ErrorKind::kMalformedFile, path.string() + ": implausible rank");
    for (std::uint32_t d = 0; d < ndim; ++d) t.shape.push_back(static_cast<int>(GetU32(in, path)));
    t.values.resize(t.numel());
    for (auto& v : t.values) {
      const std::uint32_t bits = GetU32(in, path);
      std::memcpy(&v, &bits, 4);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void assign_from(const Tensor& t, Mat<float>& m) { AssignImpl(t, m); }
void assign_from(const Tensor& t, Mat<double>& m) { AssignImpl(t, m); }

}  // namespace svc::nn
