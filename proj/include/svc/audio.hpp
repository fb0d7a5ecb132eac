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
#include <span>
#include <vector>

namespace svc {

inline constexpr int kDefaultSampleRate = 16000;
inline constexpr int kMuLawLevels = 256;

/// Mono waveform with samples nominally in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// 8-bit mu-law quantized waveform; every index lies in [0, 255].
struct MuLawClip {
  std::vector<std::uint8_t> indices;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return indices.size(); }
};

// Scalar pieces of the codec. compand() maps [-1,1] onto the companded axis
// [-1,1]; quantize() bins a companded value; bin_center() is the companded
// value a decoded index represents.
double compand(double x);
double expand(double y);
std::uint8_t quantize(double companded);
double bin_center(std::uint8_t index);
std::uint8_t mu_law_encode_sample(double x);
double mu_law_decode_sample(std::uint8_t index);

/// Throws ErrorKind::kDomain naming the first sample outside [-1, 1].
MuLawClip mu_law_encode(const AudioClip& clip);
AudioClip mu_law_decode(const MuLawClip& mlc);

/// Continuous companded signal (the encoder's real-valued input).
std::vector<float> compand_clip(const AudioClip& clip);
/// Companded bin centers of a quantized clip.
std::vector<float> companded_bin_centers(const MuLawClip& mlc);

/// Reads 16-bit PCM RIFF/WAVE. Multichannel input is averaged to mono.
AudioClip read_wav(const std::filesystem::path& path);
/// Writes 16-bit PCM mono.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Endpoint-preserving linear interpolation to `target_rate`.
AudioClip resample(const AudioClip& clip, int target_rate);

/// |X_k|^2 for every bin k of the length-N DFT of the samples.
std::vector<double> power_spectrum(std::span<const float> samples);
inline std::vector<double> power_spectrum(const AudioClip& clip) {
  return power_spectrum(std::span<const float>(clip.samples));
}

/// Reusable one-sided power spectrum of fixed-length real frames. Not
/// thread-safe; use one instance per thread.
class FramePowerSpectrum {
 public:
  explicit FramePowerSpectrum(int n);
  ~FramePowerSpectrum();
  FramePowerSpectrum(const FramePowerSpectrum&) = delete;
  FramePowerSpectrum& operator=(const FramePowerSpectrum&) = delete;

  int size() const { return n_; }
  /// Writes n/2 + 1 values |X_k|^2, k = 0..n/2.
  void compute(std::span<const double> frame, std::span<double> power);

 private:
  int n_;
  void* impl_;
};

}  // namespace svc
