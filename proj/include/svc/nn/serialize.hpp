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
#include <vector>

#include "svc/nn/tensor.hpp"

namespace svc::nn {

// Container layout (all integers little-endian uint32):
//   "SVC1" | count | count x { name_len | name | ndim | dims[ndim] | float32[numel] }
inline constexpr char kContainerMagic[4] = {'S', 'V', 'C', '1'};

void write_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(const std::filesystem::path& path);

template <typename S>
Tensor to_tensor(const std::string& name, const Mat<S>& m) {
  Tensor t;
  t.name = name;
  t.shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  t.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) t.values[i] = static_cast<float>(m.data()[i]);
  return t;
}

/// Copies `t` into `m`, which must already have the matching shape.
void assign_from(const Tensor& t, Mat<float>& m);
void assign_from(const Tensor& t, Mat<double>& m);

}  // namespace svc::nn
