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

#include <Eigen/Core>
#include <string>
#include <vector>

namespace svc::nn {

// Activations are channels x time, column-major: one column per time step.
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Serialization carrier: a named, shaped block of 32-bit values.
struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

/// Named learnable matrices; layers refer to entries by index.
template <typename S>
class ParamStore {
 public:
  int add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    names_.push_back(std::move(name));
    values_.push_back(Mat<S>::Zero(rows, cols));
    return static_cast<int>(values_.size()) - 1;
  }

  std::size_t size() const { return values_.size(); }
  Mat<S>& operator[](int id) { return values_[id]; }
  const Mat<S>& operator[](int id) const { return values_[id]; }
  const std::string& name(int id) const { return names_[id]; }
  const std::vector<std::string>& names() const { return names_; }

  /// Zero-filled gradient buffers shaped like every parameter.
  std::vector<Mat<S>> zeros_like() const {
    std::vector<Mat<S>> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(Mat<S>::Zero(v.rows(), v.cols()));
    return out;
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const int id = out.add(names_[i], values_[i].rows(), values_[i].cols());
      out[id] = values_[i].template cast<T>();
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat<S>> values_;
};

template <typename S>
using Grads = std::vector<Mat<S>>;

template <typename S>
void zero_grads(Grads<S>& g) {
  for (auto& m : g) m.setZero();
}

}  // namespace svc::nn
