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

// Shared helpers and reference implementations for the test binaries.

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "svc/audio.hpp"
#include "svc/nn/tensor.hpp"

namespace svc::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("svc_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline AudioClip random_clip(std::mt19937_64& rng, std::size_t n, int rate = 16000,
                             double amplitude = 0.9) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  AudioClip c;
  c.sample_rate = rate;
  c.samples.resize(n);
  for (auto& s : c.samples) s = static_cast<float>(u(rng));
  return c;
}

inline AudioClip sine(double hz, double seconds, int rate, double amplitude = 0.5) {
  AudioClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    c.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * M_PI * hz * i / rate));
  return c;
}

/// Direct O(N^2) DFT power, full length.
inline std::vector<double> naive_power_spectrum(const std::vector<float>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double a = -2.0L * M_PIl * static_cast<long double>((k * t) % n) / n;
      acc += static_cast<long double>(x[t]) * std::complex<long double>(std::cos(a), std::sin(a));
    }
    out[k] = static_cast<double>(std::norm(acc));
  }
  return out;
}

/// Independent long-double mu-law index computation.
inline int reference_mu_law_index(long double x) {
  const long double y = (x < 0 ? -1.0L : 1.0L) * std::log1p(255.0L * std::fabs(x)) / std::log(256.0L);
  const long double idx = std::floor((y + 1.0L) / 2.0L * 256.0L);
  return static_cast<int>(std::min(255.0L, std::max(0.0L, idx)));
}

template <typename S>
nn::Mat<S> random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  nn::Mat<S> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(n(rng));
  return m;
}

}  // namespace svc::testing
