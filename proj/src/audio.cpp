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

#include "svc/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "svc/error.hpp"

namespace svc {
namespace {

constexpr double kMu = 255.0;
const double kLogMuPlusOne = std::log(256.0);

std::mutex& FftwPlannerMutex() {
  static std::mutex mu;
  return mu;
}

std::uint32_t ReadU32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}

}  // namespace

double compand(double x) {
  const double mag = std::log1p(kMu * std::abs(x)) / kLogMuPlusOne;
  return x < 0 ? -mag : mag;
}

double expand(double y) {
  const double mag = (std::pow(256.0, std::abs(y)) - 1.0) / kMu;
  return y < 0 ? -mag : mag;
}

std::uint8_t quantize(double companded) {
  const double bin = std::floor((companded + 1.0) / 2.0 * 256.0);
  return static_cast<std::uint8_t>(std::clamp(bin, 0.0, 255.0));
}

double bin_center(std::uint8_t index) {
  return (2.0 * index + 1.0) / 256.0 - 1.0;
}

std::uint8_t mu_law_encode_sample(double x) { return quantize(compand(x)); }

double mu_law_decode_sample(std::uint8_t index) {
  return expand(bin_center(index));
}

MuLawClip mu_law_encode(const AudioClip& clip) {
  MuLawClip out;
  out.sample_rate = clip.sample_rate;
  out.indices.resize(clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double x = clip.samples[i];
    if (!(x >= -1.0 && x <= 1.0)) {
      std::ostringstream msg;
      msg << "mu_law_encode: sample " << i << " = " << x
          << " lies outside [-1, 1]";
      Fail(ErrorKind::kDomain, msg.str());
    }
    out.indices[i] = mu_law_encode_sample(x);
  }
  return out;
}

AudioClip mu_law_decode(const MuLawClip& mlc) {
  AudioClip out;
  out.sample_rate = mlc.sample_rate;
  out.samples.resize(mlc.indices.size());
  for (std::size_t i = 0; i < mlc.indices.size(); ++i)
    out.samples[i] = static_cast<float>(mu_law_decode_sample(mlc.indices[i]));
  return out;
}

std::vector<float> compand_clip(const AudioClip& clip) {
  std::vector<float> out(clip.samples.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(compand(clip.samples[i]));
  return out;
}

std::vector<float> companded_bin_centers(const MuLawClip& mlc) {
  std::vector<float> out(mlc.indices.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(bin_center(mlc.indices[i]));
  return out;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kFileNotFound, "cannot open WAV file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  auto malformed = [&](const std::string& why) {
    Fail(ErrorKind::kMalformedFile, path.string() + ": " + why);
  };
  if (n < 12 || std::memcmp(data, "RIFF", 4) != 0 ||
      std::memcmp(data + 8, "WAVE", 4) != 0)
    malformed("missing RIFF/WAVE header");

  int channels = 0, rate = 0, bits = 0;
  bool have_fmt = false;
  const unsigned char* pcm = nullptr;
  std::size_t pcm_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = ReadU32(data + pos + 4);
    const unsigned char* body = data + pos + 8;
    const std::size_t avail = n - (pos + 8);
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) malformed("truncated fmt chunk");
      std::uint16_t format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = static_cast<int>(ReadU32(body + 4));
      bits = ReadU16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format tag in its sub-GUID.
      if (format == 0xFFFE && size >= 40 && avail >= 40)
        format = ReadU16(body + 24);
      if (format != 1)
        Fail(ErrorKind::kUnsupported,
             path.string() + ": only PCM WAV is supported (format tag " +
                 std::to_string(format) + ")");
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      pcm = body;
      pcm_bytes = std::min<std::size_t>(size, avail);
    }
    pos += 8 + size + (size & 1u);
  }
  if (!have_fmt) malformed("no fmt chunk");
  if (pcm == nullptr) malformed("no data chunk");
  if (bits != 16)
    Fail(ErrorKind::kUnsupported, path.string() + ": only 16-bit PCM is supported (got " +
                                      std::to_string(bits) + " bits)");
  if (channels < 1 || rate <= 0) malformed("invalid channel count or sample rate");

  const std::size_t frames = pcm_bytes / (2u * channels);
  if (frames == 0) malformed("empty data chunk");
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const auto v = static_cast<std::int16_t>(ReadU16(pcm + 2 * (f * channels + c)));
      acc += v / 32768.0;
    }
    clip.samples[f] = static_cast<float>(acc / channels);
  }
  return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  if (clip.samples.empty())
    Fail(ErrorKind::kDomain, "write_wav: refusing to write an empty clip");
  if (clip.sample_rate <= 0)
    Fail(ErrorKind::kDomain, "write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double x = clip.samples[i];
    if (!(x >= -1.0 && x <= 1.0))
      Fail(ErrorKind::kDomain, "write_wav: sample " + std::to_string(i) +
                                   " lies outside [-1, 1]");
    const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) Fail(ErrorKind::kIo, "failed writing " + path.string());
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) Fail(ErrorKind::kDomain, "resample: target rate must be positive");
  if (target_rate == clip.sample_rate || clip.samples.empty()) {
    AudioClip same = clip;
    same.sample_rate = target_rate;
    return same;
  }
  const std::size_t n = clip.samples.size();
  const auto m = static_cast<std::size_t>(std::max<double>(
      1.0, std::round(static_cast<double>(n) * target_rate / clip.sample_rate)));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(m);
  if (n == 1 || m == 1) {
    std::fill(out.samples.begin(), out.samples.end(), clip.samples.front());
    return out;
  }
  const double step = static_cast<double>(n - 1) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const double p = i * step;
    const auto lo = std::min(static_cast<std::size_t>(p), n - 1);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = p - static_cast<double>(lo);
    out.samples[i] = static_cast<float>(clip.samples[lo] * (1.0 - frac) +
                                        clip.samples[hi] * frac);
  }
  return out;
}

std::vector<double> power_spectrum(std::span<const float> samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 1) Fail(ErrorKind::kDomain, "power_spectrum: empty input");
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  for (int i = 0; i < n; ++i) in[i] = samples[i];
  fftw_execute(plan);
  std::vector<double> power(n);
  for (int k = 0; k <= n / 2; ++k) {
    const double p = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    power[k] = p;
    if (k > 0) power[n - k] = p;
  }
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return power;
}

namespace {
struct FftPlan {
  double* in;
  fftw_complex* out;
  fftw_plan plan;
};
}  // namespace

FramePowerSpectrum::FramePowerSpectrum(int n) : n_(n) {
  if (n < 1) Fail(ErrorKind::kDomain, "FramePowerSpectrum: size must be positive");
  auto* p = new FftPlan;
  p->in = fftw_alloc_real(n);
  p->out = fftw_alloc_complex(n / 2 + 1);
  std::lock_guard<std::mutex> lock(FftwPlannerMutex());
  p->plan = fftw_plan_dft_r2c_1d(n, p->in, p->out, FFTW_ESTIMATE);
  impl_ = p;
}

FramePowerSpectrum::~FramePowerSpectrum() {
  auto* p = static_cast<FftPlan*>(impl_);
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(p->plan);
  }
  fftw_free(p->in);
  fftw_free(p->out);
  delete p;
}

void FramePowerSpectrum::compute(std::span<const double> frame, std::span<double> power) {
  auto* p = static_cast<FftPlan*>(impl_);
  if (static_cast<int>(frame.size()) != n_ || static_cast<int>(power.size()) != n_ / 2 + 1)
    Fail(ErrorKind::kShape, "FramePowerSpectrum: frame or output size mismatch");
  std::copy(frame.begin(), frame.end(), p->in);
  fftw_execute(p->plan);
  for (int k = 0; k <= n_ / 2; ++k)
    power[k] = p->out[k][0] * p->out[k][0] + p->out[k][1] * p->out[k][1];
}

}  // namespace svc
