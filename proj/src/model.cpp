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

#include "svc/model.hpp"

#include <cmath>

#include "svc/audio.hpp"
#include "svc/error.hpp"
#include "svc/random.hpp"

namespace svc {

using nn::Grads;
using nn::Mat;
using nn::Vec;

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) Fail(ErrorKind::kValidation, "model spec: " + what);
}

int GetInt(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    Fail(ErrorKind::kValidation, "model spec: key '" + key + "' is not an integer");
  }
}

// Adds the frame-rate projection `proj` (rows x F) to `out` (rows x T),
// repeating frame f over samples [f*hop, (f+1)*hop).
template <typename S>
void AddRepeated(const Mat<S>& proj, int hop, Mat<S>& out) {
  const Eigen::Index T = out.cols();
  for (Eigen::Index f = 0; f < proj.cols() && f * hop < T; ++f) {
    const Eigen::Index n = std::min<Eigen::Index>(hop, T - f * hop);
    out.middleCols(f * hop, n).colwise() += proj.col(f);
  }
}

// Inverse of AddRepeated: sums each hop-sized block of `grad` into a frame.
template <typename S>
Mat<S> SumRepeated(const Mat<S>& grad, int hop, Eigen::Index frames) {
  Mat<S> out = Mat<S>::Zero(grad.rows(), frames);
  const Eigen::Index T = grad.cols();
  for (Eigen::Index f = 0; f < frames && f * hop < T; ++f) {
    const Eigen::Index n = std::min<Eigen::Index>(hop, T - f * hop);
    out.col(f) = grad.middleCols(f * hop, n).rowwise().sum();
  }
  return out;
}

template <typename S>
const Mat<S>& NoBias() {
  static const Mat<S> empty;
  return empty;
}

}  // namespace

void ModelSpec::validate() const {
  Require(encoder.blocks >= 1 && encoder.layers_per_block >= 1, "encoder needs >= 1 layer");
  Require(encoder.channels >= 1 && encoder.latent_dim >= 1, "encoder widths must be positive");
  Require(encoder.kernel_size >= 1, "encoder kernel must be >= 1");
  Require(encoder.pool_kernel >= 1 && encoder.pool_stride == encoder.pool_kernel,
          "pool kernel and stride must be equal and positive");
  Require(decoder.blocks >= 1 && decoder.layers_per_block >= 1, "decoder needs >= 1 layer");
  Require(decoder.kernel_size >= 1, "decoder kernel must be >= 1");
  Require(decoder.quant_levels == kMuLawLevels, "decoder must emit 256 levels");
  Require(decoder.residual_channels >= 1 && decoder.gate_channels >= 1 &&
              decoder.skip_channels >= 1,
          "decoder widths must be positive");
  Require(decoder.conditioning_dim == encoder.latent_dim + embedding_dim,
          "conditioning_dim must equal latent_dim + embedding_dim");
  Require(confusion.layers >= 1 && confusion.channels >= 1 && confusion.kernel_size >= 1,
          "confusion network extents must be positive");
  Require(num_singers >= 1, "need at least one singer");
  Require(sample_rate > 0, "sample rate must be positive");
}

std::map<std::string, std::string> ModelSpec::to_kv() const {
  auto s = [](int v) { return std::to_string(v); };
  return {
      {"encoder.blocks", s(encoder.blocks)},
      {"encoder.layers_per_block", s(encoder.layers_per_block)},
      {"encoder.channels", s(encoder.channels)},
      {"encoder.kernel_size", s(encoder.kernel_size)},
      {"encoder.latent_dim", s(encoder.latent_dim)},
      {"encoder.pool_kernel", s(encoder.pool_kernel)},
      {"encoder.pool_stride", s(encoder.pool_stride)},
      {"decoder.blocks", s(decoder.blocks)},
      {"decoder.layers_per_block", s(decoder.layers_per_block)},
      {"decoder.kernel_size", s(decoder.kernel_size)},
      {"decoder.quant_levels", s(decoder.quant_levels)},
      {"decoder.conditioning_dim", s(decoder.conditioning_dim)},
      {"decoder.residual_channels", s(decoder.residual_channels)},
      {"decoder.gate_channels", s(decoder.gate_channels)},
      {"decoder.skip_channels", s(decoder.skip_channels)},
      {"confusion.layers", s(confusion.layers)},
      {"confusion.channels", s(confusion.channels)},
      {"confusion.kernel_size", s(confusion.kernel_size)},
      {"embedding_dim", s(embedding_dim)},
      {"num_singers", s(num_singers)},
      {"sample_rate", s(sample_rate)},
  };
}

ModelSpec ModelSpec::from_kv(const std::map<std::string, std::string>& kv) {
  ModelSpec m;
  m.encoder.blocks = GetInt(kv, "encoder.blocks", m.encoder.blocks);
  m.encoder.layers_per_block = GetInt(kv, "encoder.layers_per_block", m.encoder.layers_per_block);
  m.encoder.channels = GetInt(kv, "encoder.channels", m.encoder.channels);
  m.encoder.kernel_size = GetInt(kv, "encoder.kernel_size", m.encoder.kernel_size);
  m.encoder.latent_dim = GetInt(kv, "encoder.latent_dim", m.encoder.latent_dim);
  m.encoder.pool_kernel = GetInt(kv, "encoder.pool_kernel", m.encoder.pool_kernel);
  m.encoder.pool_stride = GetInt(kv, "encoder.pool_stride", m.encoder.pool_stride);
  m.decoder.blocks = GetInt(kv, "decoder.blocks", m.decoder.blocks);
  m.decoder.layers_per_block = GetInt(kv, "decoder.layers_per_block", m.decoder.layers_per_block);
  m.decoder.kernel_size = GetInt(kv, "decoder.kernel_size", m.decoder.kernel_size);
  m.decoder.quant_levels = GetInt(kv, "decoder.quant_levels", m.decoder.quant_levels);
  m.decoder.conditioning_dim = GetInt(kv, "decoder.conditioning_dim", m.decoder.conditioning_dim);
  m.decoder.residual_channels =
      GetInt(kv, "decoder.residual_channels", m.decoder.residual_channels);
  m.decoder.gate_channels = GetInt(kv, "decoder.gate_channels", m.decoder.gate_channels);
  m.decoder.skip_channels = GetInt(kv, "decoder.skip_channels", m.decoder.skip_channels);
  m.confusion.layers = GetInt(kv, "confusion.layers", m.confusion.layers);
  m.confusion.channels = GetInt(kv, "confusion.channels", m.confusion.channels);
  m.confusion.kernel_size = GetInt(kv, "confusion.kernel_size", m.confusion.kernel_size);
  m.embedding_dim = GetInt(kv, "embedding_dim", m.embedding_dim);
  m.num_singers = GetInt(kv, "num_singers", m.num_singers);
  m.sample_rate = GetInt(kv, "sample_rate", m.sample_rate);
  return m;
}

long receptive_field(const DecoderSpec& spec) {
  const long per_block = (1L << spec.layers_per_block) - 1;
  return static_cast<long>(spec.blocks) * (spec.kernel_size - 1) * per_block + 1;
}

std::vector<int> teacher_forcing_inputs(std::span<const std::uint8_t> targets) {
  std::vector<int> inputs(targets.size());
  if (!targets.empty()) inputs[0] = kStartIndex;
  for (std::size_t t = 1; t < targets.size(); ++t) inputs[t] = targets[t - 1];
  return inputs;
}

template <typename S>
ConvIds Model<S>::AddConv(std::vector<int>& group, const std::string& name, int out, int in,
                          int kernel, bool bias) {
  ConvIds ids;
  ids.w = params_.add(name + ".w", out, in * kernel);
  group.push_back(ids.w);
  if (bias) {
    ids.b = params_.add(name + ".b", out, 1);
    group.push_back(ids.b);
  }
  return ids;
}

template <typename S>
Model<S>::Model(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto& e = spec_.encoder;
  enc_in_ = AddConv(encoder_ids_, "encoder.input", e.channels, 1, 1, true);
  for (int b = 0; b < e.blocks; ++b) {
    for (int i = 0; i < e.layers_per_block; ++i) {
      const std::string name = "encoder.b" + std::to_string(b) + ".l" + std::to_string(i);
      EncoderLayer layer;
      layer.geometry = {e.kernel_size, 1 << i, false};
      layer.dilated = AddConv(encoder_ids_, name + ".dilated", e.channels, e.channels,
                              e.kernel_size, true);
      layer.proj = AddConv(encoder_ids_, name + ".proj", e.channels, e.channels, 1, true);
      enc_layers_.push_back(layer);
    }
  }
  enc_out_ = AddConv(encoder_ids_, "encoder.output", e.latent_dim, e.channels, 1, true);

  const auto& d = spec_.decoder;
  dec_embed_ = params_.add("decoder.input_embedding", d.residual_channels, d.quant_levels);
  decoder_ids_.push_back(dec_embed_);
  for (int b = 0; b < d.blocks; ++b) {
    for (int i = 0; i < d.layers_per_block; ++i) {
      const std::string name = "decoder.b" + std::to_string(b) + ".l" + std::to_string(i);
      DecoderLayer layer;
      layer.geometry = {d.kernel_size, 1 << i, true};
      layer.dilated = AddConv(decoder_ids_, name + ".dilated", 2 * d.gate_channels,
                              d.residual_channels, d.kernel_size, true);
      layer.cond_w = params_.add(name + ".cond.w", 2 * d.gate_channels, d.conditioning_dim);
      decoder_ids_.push_back(layer.cond_w);
      layer.residual =
          AddConv(decoder_ids_, name + ".residual", d.residual_channels, d.gate_channels, 1, true);
      layer.skip = AddConv(decoder_ids_, name + ".skip", d.skip_channels, d.gate_channels, 1, true);
      dec_layers_.push_back(layer);
    }
  }
  head_cond_ = AddConv(decoder_ids_, "decoder.head.cond", d.skip_channels, d.conditioning_dim, 1,
                       true);
  head_fc1_ = AddConv(decoder_ids_, "decoder.head.fc1", d.skip_channels, d.skip_channels, 1, true);
  head_fc2_ = AddConv(decoder_ids_, "decoder.head.fc2", d.quant_levels, d.skip_channels, 1, true);

  const auto& c = spec_.confusion;
  int in = e.latent_dim;
  for (int l = 0; l < c.layers; ++l) {
    conf_layers_.push_back(AddConv(confusion_ids_, "confusion.conv" + std::to_string(l),
                                   c.channels, in, c.kernel_size, true));
    conf_geometry_.push_back({c.kernel_size, 1, false});
    in = c.channels;
  }
  conf_proj_ = AddConv(confusion_ids_, "confusion.proj", spec_.num_singers, c.channels, 1, true);

  table_id_ = params_.add("embedding_table", spec_.embedding_dim, spec_.num_singers);
}

template <typename S>
std::vector<int> Model<S>::autoencoder_ids() const {
  std::vector<int> ids = encoder_ids_;
  ids.insert(ids.end(), decoder_ids_.begin(), decoder_ids_.end());
  ids.push_back(table_id_);
  return ids;
}

template <typename S>
void Model<S>::init(std::uint64_t seed) {
  Rng rng(seed);
  auto normal = [&](Mat<S>& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(stddev * normal01(rng));
  };
  auto init_conv = [&](const ConvIds& ids, double gain = 1.0) {
    Mat<S>& w = params_[ids.w];
    normal(w, gain / std::sqrt(static_cast<double>(w.cols())));
    if (ids.b >= 0) params_[ids.b].setZero();
  };

  const double enc_res_gain = 1.0 / std::sqrt(static_cast<double>(enc_layers_.size()));
  init_conv(enc_in_);
  for (const auto& layer : enc_layers_) {
    init_conv(layer.dilated, std::sqrt(2.0));
    init_conv(layer.proj, enc_res_gain);
  }
  init_conv(enc_out_);

  // Input embedding starts as a smooth function of the companded amplitude
  // plus noise, so nearby levels begin with nearby codes.
  {
    Mat<S>& emb = params_[dec_embed_];
    Vec<S> slope(emb.rows()), offset(emb.rows());
    for (Eigen::Index r = 0; r < emb.rows(); ++r) {
      slope(r) = static_cast<S>(normal01(rng));
      offset(r) = static_cast<S>(0.1 * normal01(rng));
    }
    for (Eigen::Index i = 0; i < emb.cols(); ++i) {
      const double y = bin_center(static_cast<std::uint8_t>(i));
      for (Eigen::Index r = 0; r < emb.rows(); ++r)
        emb(r, i) = static_cast<S>(slope(r) * y + offset(r) + 0.05 * normal01(rng));
    }
  }
  const double dec_res_gain = 1.0 / std::sqrt(static_cast<double>(dec_layers_.size()));
  for (const auto& layer : dec_layers_) {
    init_conv(layer.dilated);
    normal(params_[layer.cond_w], 1.0 / std::sqrt(static_cast<double>(spec_.decoder.conditioning_dim)));
    init_conv(layer.residual, dec_res_gain);
    init_conv(layer.skip, dec_res_gain);
  }
  init_conv(head_cond_);
  init_conv(head_fc1_, std::sqrt(2.0));
  params_[head_fc2_.w].setZero();
  params_[head_fc2_.b].setZero();

  for (const auto& ids : conf_layers_) init_conv(ids);
  init_conv(conf_proj_);

  Mat<S>& table = params_[table_id_];
  for (Eigen::Index i = 0; i < table.size(); ++i)
    table.data()[i] = static_cast<S>(-0.1 + 0.2 * uniform01(rng));
}

// ---- encoder -------------------------------------------------------------------

template <typename S>
Mat<S> Model<S>::encode(const Mat<S>& companded, EncoderCache<S>* cache) const {
  const auto& e = spec_.encoder;
  const Eigen::Index T = companded.cols();
  if (companded.rows() != 1)
    Fail(ErrorKind::kShape, "encode: input must be a single channel");
  if (T == 0 || T % e.pool_stride != 0)
    Fail(ErrorKind::kShape, "encode: input length " + std::to_string(T) +
                                " is not a positive multiple of " + std::to_string(e.pool_stride));
  const nn::ConvGeometry pointwise{1, 1, false};
  Mat<S> h = nn::conv1d(companded, params_[enc_in_.w], params_[enc_in_.b], pointwise);
  if (cache) {
    cache->input = companded;
    cache->h.clear();
    cache->c.clear();
  }
  for (const auto& layer : enc_layers_) {
    Mat<S> c = nn::conv1d(nn::relu(h), params_[layer.dilated.w], params_[layer.dilated.b],
                          layer.geometry);
    Mat<S> o = nn::conv1d(nn::relu(c), params_[layer.proj.w], params_[layer.proj.b], pointwise);
    if (cache) {
      cache->h.push_back(h);
      cache->c.push_back(std::move(c));
    }
    h += o;
  }
  Mat<S> z = nn::conv1d(h, params_[enc_out_.w], params_[enc_out_.b], pointwise);
  Mat<S> latent = nn::avg_pool(z, e.pool_kernel, e.pool_stride);
  if (cache) {
    cache->h_final = std::move(h);
    cache->z = std::move(z);
  }
  return latent;
}

template <typename S>
void Model<S>::encode_backward(const EncoderCache<S>& cache, const Mat<S>& dlatent,
                               Grads<S>* grads, Mat<S>* dinput) const {
  const auto& e = spec_.encoder;
  const nn::ConvGeometry pointwise{1, 1, false};
  auto g = [&](int id) -> Mat<S>* { return grads ? &(*grads)[id] : nullptr; };

  Mat<S> dz = Mat<S>::Zero(cache.z.rows(), cache.z.cols());
  nn::avg_pool_backward(cache.z.cols(), e.pool_kernel, e.pool_stride, dlatent, &dz);
  Mat<S> dh = Mat<S>::Zero(cache.h_final.rows(), cache.h_final.cols());
  nn::conv1d_backward(cache.h_final, params_[enc_out_.w], pointwise, dz, &dh, g(enc_out_.w),
                      g(enc_out_.b));
  for (std::size_t l = enc_layers_.size(); l-- > 0;) {
    const auto& layer = enc_layers_[l];
    const Mat<S>& h = cache.h[l];
    const Mat<S>& c = cache.c[l];
    // h_out = h + proj(relu(dilated(relu(h))))
    Mat<S> drc = Mat<S>::Zero(c.rows(), c.cols());
    nn::conv1d_backward(nn::relu(c), params_[layer.proj.w], pointwise, dh, &drc, g(layer.proj.w),
                        g(layer.proj.b));
    Mat<S> dc = Mat<S>::Zero(c.rows(), c.cols());
    nn::relu_backward(c, drc, &dc);
    Mat<S> drh = Mat<S>::Zero(h.rows(), h.cols());
    nn::conv1d_backward(nn::relu(h), params_[layer.dilated.w], layer.geometry, dc, &drh,
                        g(layer.dilated.w), g(layer.dilated.b));
    nn::relu_backward(h, drh, &dh);
  }
  Mat<S> dx = Mat<S>::Zero(1, cache.input.cols());
  nn::conv1d_backward(cache.input, params_[enc_in_.w], pointwise, dh, &dx, g(enc_in_.w),
                      g(enc_in_.b));
  if (dinput) *dinput += dx;
}

// ---- conditioning ---------------------------------------------------------------

template <typename S>
Vec<S> Model<S>::embedding(int singer) const {
  if (singer < 0 || singer >= spec_.num_singers)
    Fail(ErrorKind::kDomain, "singer index " + std::to_string(singer) + " out of range");
  return params_[table_id_].col(singer);
}

template <typename S>
Conditioning<S> Model<S>::build_conditioning(const Mat<S>& latent, const Vec<S>& v) const {
  if (latent.rows() != spec_.encoder.latent_dim || v.size() != spec_.embedding_dim)
    Fail(ErrorKind::kShape, "build_conditioning: latent or embedding has the wrong width");
  Conditioning<S> cond;
  cond.hop = spec_.hop();
  cond.frames.resize(spec_.decoder.conditioning_dim, latent.cols());
  cond.frames.topRows(latent.rows()) = latent;
  cond.frames.bottomRows(v.size()).colwise() = v;
  return cond;
}

// ---- decoder -------------------------------------------------------------------

template <typename S>
Mat<S> Model<S>::decoder_forward(std::span<const int> inputs, const Conditioning<S>& cond,
                                 DecoderCache<S>* cache) const {
  const auto& d = spec_.decoder;
  const auto T = static_cast<Eigen::Index>(inputs.size());
  if (T == 0 || T > cond.length())
    Fail(ErrorKind::kShape, "decoder: " + std::to_string(T) +
                                " input samples do not fit a conditioning of length " +
                                std::to_string(cond.length()));
  if (cond.frames.rows() != d.conditioning_dim)
    Fail(ErrorKind::kShape, "decoder: conditioning has the wrong width");
  const nn::ConvGeometry pointwise{1, 1, false};
  const Mat<S>& emb = params_[dec_embed_];
  Mat<S> h(d.residual_channels, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int x = inputs[t];
    if (x < 0 || x >= d.quant_levels)
      Fail(ErrorKind::kDomain, "decoder: input index out of range at position " +
                                   std::to_string(t));
    h.col(t) = emb.col(x);
  }
  if (cache) {
    cache->inputs.assign(inputs.begin(), inputs.end());
    cache->cond = cond;
    cache->h.clear();
    cache->z.clear();
    cache->g.clear();
  }
  const int G = d.gate_channels;
  Mat<S> skip_sum = Mat<S>::Zero(d.skip_channels, T);
  for (const auto& layer : dec_layers_) {
    Mat<S> z = nn::conv1d(h, params_[layer.dilated.w], params_[layer.dilated.b], layer.geometry);
    AddRepeated<S>(params_[layer.cond_w] * cond.frames, cond.hop, z);
    Mat<S> gate = (z.topRows(G).array().tanh() *
                   (S(1) / (S(1) + (-z.bottomRows(G).array()).exp())))
                      .matrix();
    Mat<S> res = nn::conv1d(gate, params_[layer.residual.w], params_[layer.residual.b], pointwise);
    skip_sum.noalias() += params_[layer.skip.w] * gate;
    skip_sum.colwise() += params_[layer.skip.b].col(0);
    if (cache) {
      cache->h.push_back(h);
      cache->z.push_back(std::move(z));
      cache->g.push_back(std::move(gate));
    }
    h += res;
  }
  Mat<S> head_cond_frames = params_[head_cond_.w] * cond.frames;
  head_cond_frames.colwise() += params_[head_cond_.b].col(0);
  AddRepeated<S>(head_cond_frames, cond.hop, skip_sum);
  Mat<S> f1 = nn::conv1d(nn::relu(skip_sum), params_[head_fc1_.w], params_[head_fc1_.b], pointwise);
  Mat<S> logits = nn::conv1d(nn::relu(f1), params_[head_fc2_.w], params_[head_fc2_.b], pointwise);
  if (cache) {
    cache->head_in = std::move(skip_sum);
    cache->f1 = std::move(f1);
  }
  return logits;
}

template <typename S>
Mat<S> Model<S>::decoder_logits(std::span<const std::uint8_t> targets, const Conditioning<S>& cond,
                                DecoderCache<S>* cache) const {
  if (static_cast<Eigen::Index>(targets.size()) != cond.length())
    Fail(ErrorKind::kShape, "decoder_logits: " + std::to_string(targets.size()) +
                                " samples vs conditioning length " +
                                std::to_string(cond.length()));
  const auto inputs = teacher_forcing_inputs(targets);
  return decoder_forward(inputs, cond, cache);
}

template <typename S>
void Model<S>::decoder_backward(const DecoderCache<S>& cache, const Mat<S>& dlogits,
                                Grads<S>* grads, Mat<S>* dcond_frames) const {
  const auto& d = spec_.decoder;
  const nn::ConvGeometry pointwise{1, 1, false};
  auto g = [&](int id) -> Mat<S>* { return grads ? &(*grads)[id] : nullptr; };
  const Eigen::Index T = cache.head_in.cols();
  const Eigen::Index F = cache.cond.frames.cols();
  const int hop = cache.cond.hop;
  Mat<S> dcond = Mat<S>::Zero(d.conditioning_dim, F);

  Mat<S> r2 = nn::relu(cache.f1);
  Mat<S> dr2 = Mat<S>::Zero(r2.rows(), T);
  nn::conv1d_backward(r2, params_[head_fc2_.w], pointwise, dlogits, &dr2, g(head_fc2_.w),
                      g(head_fc2_.b));
  Mat<S> df1 = Mat<S>::Zero(r2.rows(), T);
  nn::relu_backward(cache.f1, dr2, &df1);
  Mat<S> r1 = nn::relu(cache.head_in);
  Mat<S> dr1 = Mat<S>::Zero(r1.rows(), T);
  nn::conv1d_backward(r1, params_[head_fc1_.w], pointwise, df1, &dr1, g(head_fc1_.w),
                      g(head_fc1_.b));
  Mat<S> dskip = Mat<S>::Zero(r1.rows(), T);
  nn::relu_backward(cache.head_in, dr1, &dskip);
  {
    const Mat<S> dframes = SumRepeated<S>(dskip, hop, F);
    if (grads) {
      (*grads)[head_cond_.w].noalias() += dframes * cache.cond.frames.transpose();
      (*grads)[head_cond_.b].col(0) += dframes.rowwise().sum();
    }
    dcond.noalias() += params_[head_cond_.w].transpose() * dframes;
  }

  const int G = d.gate_channels;
  Mat<S> dh = Mat<S>::Zero(d.residual_channels, T);
  for (std::size_t l = dec_layers_.size(); l-- > 0;) {
    const auto& layer = dec_layers_[l];
    const Mat<S>& z = cache.z[l];
    const Mat<S>& gate = cache.g[l];
    Mat<S> dgate = params_[layer.skip.w].transpose() * dskip;
    if (grads) {
      (*grads)[layer.skip.w].noalias() += dskip * gate.transpose();
      (*grads)[layer.skip.b].col(0) += dskip.rowwise().sum();
    }
    nn::conv1d_backward(gate, params_[layer.residual.w], pointwise, dh, &dgate,
                        g(layer.residual.w), g(layer.residual.b));
    Mat<S> dz(2 * G, T);
    {
      const auto ta = z.topRows(G).array().tanh().eval();
      const auto sb = (S(1) / (S(1) + (-z.bottomRows(G).array()).exp())).eval();
      dz.topRows(G).array() = dgate.array() * (S(1) - ta.square()) * sb;
      dz.bottomRows(G).array() = dgate.array() * ta * sb * (S(1) - sb);
    }
    const Mat<S> dframes = SumRepeated<S>(dz, hop, F);
    if (grads) (*grads)[layer.cond_w].noalias() += dframes * cache.cond.frames.transpose();
    dcond.noalias() += params_[layer.cond_w].transpose() * dframes;
    nn::conv1d_backward(cache.h[l], params_[layer.dilated.w], layer.geometry, dz, &dh,
                        g(layer.dilated.w), g(layer.dilated.b));
  }
  if (grads) {
    Mat<S>& demb = (*grads)[dec_embed_];
    for (Eigen::Index t = 0; t < T; ++t) demb.col(cache.inputs[t]) += dh.col(t);
  }
  if (dcond_frames) *dcond_frames += dcond;
}

// ---- confusion network ---------------------------------------------------------------

template <typename S>
Vec<S> Model<S>::classify_singer(const Mat<S>& latent, ConfusionCache<S>* cache) const {
  if (latent.rows() != spec_.encoder.latent_dim || latent.cols() == 0)
    Fail(ErrorKind::kShape, "classify_singer: latent has the wrong shape");
  Mat<S> x = latent;
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->frames = latent.cols();
  }
  for (std::size_t l = 0; l < conf_layers_.size(); ++l) {
    Mat<S> pre = nn::conv1d(x, params_[conf_layers_[l].w], params_[conf_layers_[l].b],
                            conf_geometry_[l]);
    Mat<S> y = nn::elu(pre);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(std::move(pre));
    }
    x = std::move(y);
  }
  const Mat<S> per_frame =
      nn::conv1d(x, params_[conf_proj_.w], params_[conf_proj_.b], nn::ConvGeometry{1, 1, false});
  if (cache) cache->last = std::move(x);
  return per_frame.rowwise().mean();
}

template <typename S>
void Model<S>::classify_backward(const ConfusionCache<S>& cache, const Vec<S>& dlogits,
                                 Grads<S>* grads, Mat<S>* dlatent) const {
  auto g = [&](int id) -> Mat<S>* { return grads ? &(*grads)[id] : nullptr; };
  const Eigen::Index F = cache.frames;
  Mat<S> dper_frame(dlogits.size(), F);
  dper_frame.colwise() = dlogits / S(F);
  Mat<S> dx = Mat<S>::Zero(cache.last.rows(), F);
  nn::conv1d_backward(cache.last, params_[conf_proj_.w], nn::ConvGeometry{1, 1, false}, dper_frame,
                      &dx, g(conf_proj_.w), g(conf_proj_.b));
  for (std::size_t l = conf_layers_.size(); l-- > 0;) {
    Mat<S> dpre = Mat<S>::Zero(cache.pre[l].rows(), F);
    nn::elu_backward(cache.pre[l], dx, &dpre);
    Mat<S> din = Mat<S>::Zero(cache.inputs[l].rows(), F);
    nn::conv1d_backward(cache.inputs[l], params_[conf_layers_[l].w], conf_geometry_[l], dpre, &din,
                        g(conf_layers_[l].w), g(conf_layers_[l].b));
    dx = std::move(din);
  }
  if (dlatent) *dlatent += dx;
}

template <typename S>
void Model<S>::project_embeddings() {
  svc::project_embeddings(params_[table_id_]);
}

template <typename S>
S Model<S>::max_embedding_norm() const {
  return params_[table_id_].colwise().norm().maxCoeff();
}

template class Model<float>;
template class Model<double>;

}  // namespace svc
