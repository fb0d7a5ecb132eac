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

#include "svc/inference.hpp"

#include <cmath>

#include "svc/error.hpp"

namespace svc {

using nn::Mat;
using nn::Vec;

template <typename S>
int sample_index(const Vec<S>& logits, double temperature, double u) {
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  if (temperature <= 0.0) return static_cast<int>(best);
  const double m = static_cast<double>(logits(best));
  thread_local std::vector<double> cdf;
  cdf.resize(static_cast<std::size_t>(logits.size()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    total += std::exp((static_cast<double>(logits(i)) - m) / temperature);
    cdf[i] = total;
  }
  const double target = u * total;
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    if (cdf[i] > target) return static_cast<int>(i);
  return static_cast<int>(logits.size() - 1);
}

template <typename S>
MuLawClip generate_naive(const Model<S>& model, const Conditioning<S>& cond,
                         std::uint64_t rng_seed, double temperature, GenerationTrace<S>* trace,
                         Eigen::Index length) {
  if (temperature < 0) Fail(ErrorKind::kDomain, "temperature must be >= 0");
  const Eigen::Index T = length < 0 ? cond.length() : std::min(length, cond.length());
  Rng rng(rng_seed);
  MuLawClip out;
  out.sample_rate = model.spec().sample_rate;
  out.indices.reserve(static_cast<std::size_t>(T));
  std::vector<int> inputs{kStartIndex};
  for (Eigen::Index t = 0; t < T; ++t) {
    const Mat<S> logits = model.decoder_forward(inputs, cond);
    const Vec<S> last = logits.col(t);
    const double u = uniform01(rng);
    const int index = sample_index<S>(last, temperature, u);
    if (trace) trace->logits.push_back(last);
    out.indices.push_back(static_cast<std::uint8_t>(index));
    inputs.push_back(index);
  }
  return out;
}

template <typename S>
IncrementalDecoder<S>::IncrementalDecoder(const Model<S>& model, const Conditioning<S>& cond)
    : model_(model), cond_(cond) {
  const auto& d = model.spec().decoder;
  const auto& p = model.params();
  for (const auto& layer : model.decoder_layers()) {
    cond_proj_.push_back(p[layer.cond_w] * cond.frames);
    const int span = (layer.geometry.kernel - 1) * layer.geometry.dilation;
    buffers_.push_back(Mat<S>::Zero(d.residual_channels, span));
    heads_.push_back(0);
  }
  head_cond_proj_ = p[model.head_cond().w] * cond.frames;
  head_cond_proj_.colwise() += p[model.head_cond().b].col(0);
  h_.resize(d.residual_channels);
  z_.resize(2 * d.gate_channels);
  gate_.resize(d.gate_channels);
  skip_.resize(d.skip_channels);
  f1_.resize(d.skip_channels);
  logits_.resize(d.quant_levels);
}

template <typename S>
const Vec<S>& IncrementalDecoder<S>::step(int previous_index) {
  if (t_ >= cond_.length()) Fail(ErrorKind::kDomain, "generation ran past the conditioning");
  const auto& d = model_.spec().decoder;
  const auto& p = model_.params();
  const Eigen::Index frame = t_ / cond_.hop;
  const int G = d.gate_channels;
  const Eigen::Index R = d.residual_channels;
  h_ = p[model_.input_embedding_id()].col(previous_index);
  skip_ = head_cond_proj_.col(frame);
  const auto& layers = model_.decoder_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const int K = layer.geometry.kernel;
    const int dil = layer.geometry.dilation;
    const Mat<S>& w = p[layer.dilated.w];
    z_ = p[layer.dilated.b].col(0) + cond_proj_[l].col(frame);
    z_.noalias() += w.middleCols((K - 1) * R, R) * h_;
    Mat<S>& ring = buffers_[l];
    const Eigen::Index cap = ring.cols();
    for (int k = 0; k < K - 1; ++k) {
      // Tap k reads the input from (K - 1 - k) * dilation steps ago.
      const Eigen::Index back = static_cast<Eigen::Index>(K - 1 - k) * dil;
      const Eigen::Index slot = ((heads_[l] - back) % cap + cap) % cap;
      z_.noalias() += w.middleCols(k * R, R) * ring.col(slot);
    }
    gate_.array() = z_.head(G).array().tanh() *
                    (S(1) / (S(1) + (-z_.tail(G).array()).exp()));
    if (cap > 0) {
      ring.col(heads_[l]) = h_;
      heads_[l] = (heads_[l] + 1) % cap;
    }
    skip_.noalias() += p[layer.skip.w] * gate_;
    skip_ += p[layer.skip.b].col(0);
    h_.noalias() += p[layer.residual.w] * gate_;
    h_ += p[layer.residual.b].col(0);
  }
  f1_ = p[model_.head_fc1().b].col(0);
  f1_.noalias() += p[model_.head_fc1().w] * skip_.cwiseMax(S(0));
  logits_ = p[model_.head_fc2().b].col(0);
  logits_.noalias() += p[model_.head_fc2().w] * f1_.cwiseMax(S(0));
  ++t_;
  return logits_;
}

template <typename S>
MuLawClip generate_incremental(const Model<S>& model, const Conditioning<S>& cond,
                               std::uint64_t rng_seed, double temperature,
                               GenerationTrace<S>* trace, Eigen::Index length) {
  if (temperature < 0) Fail(ErrorKind::kDomain, "temperature must be >= 0");
  const Eigen::Index T = length < 0 ? cond.length() : std::min(length, cond.length());
  Rng rng(rng_seed);
  IncrementalDecoder<S> decoder(model, cond);
  MuLawClip out;
  out.sample_rate = model.spec().sample_rate;
  out.indices.reserve(static_cast<std::size_t>(T));
  int previous = kStartIndex;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Vec<S>& logits = decoder.step(previous);
    const double u = uniform01(rng);
    previous = sample_index<S>(logits, temperature, u);
    if (trace) trace->logits.push_back(logits);
    out.indices.push_back(static_cast<std::uint8_t>(previous));
  }
  return out;
}

MuLawClip convert_with_embedding(const Model<float>& model, const std::vector<float>& companded,
                                 const nn::Vec<float>& v, double temperature,
                                 std::uint64_t rng_seed) {
  const Mat<float> x = Eigen::Map<const Mat<float>>(companded.data(), 1,
                                                    static_cast<Eigen::Index>(companded.size()));
  const Mat<float> latent = model.encode(x);
  const auto cond = model.build_conditioning(latent, v);
  return generate_incremental(model, cond, rng_seed, temperature);
}

AudioClip convert(const AudioClip& clip, int target_singer, const Model<float>& model,
                  double temperature, std::uint64_t rng_seed) {
  const int rate = model.spec().sample_rate;
  const int hop = model.spec().hop();
  AudioClip work = resample(clip, rate);
  const std::size_t n = work.samples.size();
  if (n < static_cast<std::size_t>(hop))
    Fail(ErrorKind::kDomain, "convert: clip has " + std::to_string(n) +
                                 " samples at the model rate; at least " + std::to_string(hop) +
                                 " are needed");
  for (float& s : work.samples) s = std::clamp(s, -1.0f, 1.0f);
  const std::size_t padded = (n + hop - 1) / hop * hop;
  work.samples.resize(padded, 0.0f);
  const MuLawClip generated = convert_with_embedding(model, compand_clip(work),
                                                     model.embedding(target_singer), temperature,
                                                     rng_seed);
  AudioClip out = mu_law_decode(generated);
  out.samples.resize(n);
  if (clip.sample_rate != rate) {
    out = resample(out, clip.sample_rate);
    out.samples.resize(clip.samples.size(), out.samples.empty() ? 0.0f : out.samples.back());
  }
  return out;
}

AudioClip convert(const AudioClip& clip, const std::string& target_singer_id,
                  const Checkpoint& checkpoint, double temperature, std::uint64_t rng_seed) {
  return convert(clip, checkpoint.singer_index(target_singer_id), checkpoint.model, temperature,
                 rng_seed);
}

template int sample_index<float>(const Vec<float>&, double, double);
template int sample_index<double>(const Vec<double>&, double, double);
template MuLawClip generate_naive<float>(const Model<float>&, const Conditioning<float>&,
                                         std::uint64_t, double, GenerationTrace<float>*,
                                         Eigen::Index);
template MuLawClip generate_naive<double>(const Model<double>&, const Conditioning<double>&,
                                          std::uint64_t, double, GenerationTrace<double>*,
                                          Eigen::Index);
template MuLawClip generate_incremental<float>(const Model<float>&, const Conditioning<float>&,
                                               std::uint64_t, double, GenerationTrace<float>*,
                                               Eigen::Index);
template MuLawClip generate_incremental<double>(const Model<double>&,
                                                const Conditioning<double>&, std::uint64_t,
                                                double, GenerationTrace<double>*, Eigen::Index);
template class IncrementalDecoder<float>;
template class IncrementalDecoder<double>;

}  // namespace svc
