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

#include <cmath>
#include <vector>

#include "svc/nn/tensor.hpp"

namespace svc::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double epoch_decay = 0.98;  // learning rate multiplier per epoch
};

/// Adam over a subset of a ParamStore, identified by parameter ids.
template <typename S>
class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore<S>& store, std::vector<int> ids, AdamConfig config)
      : ids_(std::move(ids)), config_(config) {
    for (int id : ids_) {
      m_.push_back(Mat<S>::Zero(store[id].rows(), store[id].cols()));
      v_.push_back(Mat<S>::Zero(store[id].rows(), store[id].cols()));
    }
  }

  void set_epoch(int epoch) { epoch_ = epoch; }
  double current_learning_rate() const {
    return config_.learning_rate * std::pow(config_.epoch_decay, epoch_);
  }

  void step(ParamStore<S>& store, const Grads<S>& grads) {
    ++t_;
    const double lr = current_learning_rate();
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const S step_size = static_cast<S>(lr * std::sqrt(c2) / c1);
    const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
    const S eps = static_cast<S>(config_.epsilon * std::sqrt(c2));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const auto& g = grads[ids_[i]].array();
      m_[i].array() = b1 * m_[i].array() + (S(1) - b1) * g;
      v_[i].array() = b2 * v_[i].array() + (S(1) - b2) * g.square();
      store[ids_[i]].array() -= step_size * m_[i].array() / (v_[i].array().sqrt() + eps);
    }
  }

  const std::vector<int>& ids() const { return ids_; }
  long long steps() const { return t_; }
  std::vector<Mat<S>>& first_moments() { return m_; }
  std::vector<Mat<S>>& second_moments() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  std::vector<int> ids_;
  AdamConfig config_;
  std::vector<Mat<S>> m_, v_;
  long long t_ = 0;
  int epoch_ = 0;
};

}  // namespace svc::nn
