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

// The conversion network: a singer-blind dilated-convolution encoder, a
// WaveNet decoder conditioned on (latent frame ++ singer embedding), a
// domain-confusion classifier over latent frames, and the embedding table.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "svc/nn/ops.hpp"
#include "svc/nn/tensor.hpp"

namespace svc {

struct EncoderSpec {
  int blocks = 3;
  int layers_per_block = 10;  // dilation of layer i within a block is 2^i
  int channels = 128;
  int kernel_size = 3;
  int latent_dim = 64;
  int pool_kernel = 800;
  int pool_stride = 800;
};

struct DecoderSpec {
  int blocks = 4;
  int layers_per_block = 10;
  int kernel_size = 2;
  int quant_levels = 256;
  int conditioning_dim = 128;
  int residual_channels = 128;
  int gate_channels = 128;
  int skip_channels = 128;
};

struct ConfusionSpec {
  int layers = 3;
  int channels = 128;
  int kernel_size = 3;
};

struct ModelSpec {
  EncoderSpec encoder;
  DecoderSpec decoder;
  ConfusionSpec confusion;
  int embedding_dim = 64;
  int num_singers = 2;
  int sample_rate = 16000;

  /// Throws kValidation on inconsistent extents.
  void validate() const;
  int hop() const { return encoder.pool_stride; }

  std::map<std::string, std::string> to_kv() const;
  static ModelSpec from_kv(const std::map<std::string, std::string>& kv);
};

/// Samples of past input that can influence one decoder output.
long receptive_field(const DecoderSpec& spec);

/// Start-of-sequence autoregressive input: index 128, companded zero.
inline constexpr int kStartIndex = 128;

/// Shifts targets right by one, feeding kStartIndex at position 0.
std::vector<int> teacher_forcing_inputs(std::span<const std::uint8_t> targets);

/// Frame-rate conditioning; its audio-rate form repeats each frame `hop` times.
template <typename S>
struct Conditioning {
  nn::Mat<S> frames;  // conditioning_dim x F
  int hop = 1;

  Eigen::Index length() const { return frames.cols() * hop; }
  nn::Mat<S> at_audio_rate() const { return nn::upsample_repeat(frames, hop); }
};

struct ConvIds {
  int w = -1;
  int b = -1;
};

template <typename S>
struct EncoderCache {
  nn::Mat<S> input;
  nn::Mat<S> h0;
  std::vector<nn::Mat<S>> h;  // residual stream entering each layer
  std::vector<nn::Mat<S>> c;  // dilated conv outputs (pre second ReLU)
  nn::Mat<S> h_final;
  nn::Mat<S> z;
};

template <typename S>
struct DecoderCache {
  std::vector<int> inputs;
  Conditioning<S> cond;
  std::vector<nn::Mat<S>> h;  // residual stream entering each layer
  std::vector<nn::Mat<S>> z;  // pre-gate activations
  std::vector<nn::Mat<S>> g;  // gate outputs
  nn::Mat<S> head_in;         // skip sum + conditioning projection
  nn::Mat<S> f1;
};

template <typename S>
struct ConfusionCache {
  std::vector<nn::Mat<S>> inputs;  // input to each conv layer
  std::vector<nn::Mat<S>> pre;     // conv outputs before ELU
  nn::Mat<S> last;                 // ELU output feeding the projection
  Eigen::Index frames = 0;
};

template <typename S>
class Model {
 public:
  struct EncoderLayer {
    ConvIds dilated;
    ConvIds proj;
    nn::ConvGeometry geometry;
  };
  struct DecoderLayer {
    ConvIds dilated;
    int cond_w = -1;
    ConvIds residual;
    ConvIds skip;
    nn::ConvGeometry geometry;
  };

  explicit Model(const ModelSpec& spec);

  /// Random initialization; the final logits layer starts at zero.
  void init(std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  nn::ParamStore<S>& params() { return params_; }
  const nn::ParamStore<S>& params() const { return params_; }

  const std::vector<int>& encoder_ids() const { return encoder_ids_; }
  const std::vector<int>& decoder_ids() const { return decoder_ids_; }
  const std::vector<int>& confusion_ids() const { return confusion_ids_; }
  int table_id() const { return table_id_; }
  /// Encoder, decoder, and embedding table: everything the E/D steps train.
  std::vector<int> autoencoder_ids() const;

  // ---- encoder -------------------------------------------------------------
  /// companded: 1 x T with T a positive multiple of the pool stride.
  nn::Mat<S> encode(const nn::Mat<S>& companded, EncoderCache<S>* cache = nullptr) const;
  void encode_backward(const EncoderCache<S>& cache, const nn::Mat<S>& dlatent,
                       nn::Grads<S>* grads, nn::Mat<S>* dinput = nullptr) const;

  // ---- conditioning ----------------------------------------------------------
  nn::Vec<S> embedding(int singer) const;
  Conditioning<S> build_conditioning(const nn::Mat<S>& latent, const nn::Vec<S>& v) const;

  // ---- decoder ---------------------------------------------------------------
  /// Logits (quant_levels x T) for autoregressive inputs already shifted by
  /// one step. T may be shorter than the conditioning (a prefix).
  nn::Mat<S> decoder_forward(std::span<const int> inputs, const Conditioning<S>& cond,
                             DecoderCache<S>* cache = nullptr) const;
  /// Teacher-forced logits predicting `targets` (shifted internally).
  nn::Mat<S> decoder_logits(std::span<const std::uint8_t> targets, const Conditioning<S>& cond,
                            DecoderCache<S>* cache = nullptr) const;
  void decoder_backward(const DecoderCache<S>& cache, const nn::Mat<S>& dlogits,
                        nn::Grads<S>* grads, nn::Mat<S>* dcond_frames) const;

  // ---- confusion network -------------------------------------------------
  nn::Vec<S> classify_singer(const nn::Mat<S>& latent, ConfusionCache<S>* cache = nullptr) const;
  /// `grads` may be null when the classifier is frozen; `dlatent` may be null
  /// when only classifier gradients are wanted.
  void classify_backward(const ConfusionCache<S>& cache, const nn::Vec<S>& dlogits,
                         nn::Grads<S>* grads, nn::Mat<S>* dlatent) const;

  /// Rescales embeddings with norm > 1 onto the unit sphere.
  void project_embeddings();
  S max_embedding_norm() const;

  const std::vector<EncoderLayer>& encoder_layers() const { return enc_layers_; }
  const std::vector<DecoderLayer>& decoder_layers() const { return dec_layers_; }
  int input_embedding_id() const { return dec_embed_; }
  ConvIds head_cond() const { return head_cond_; }
  ConvIds head_fc1() const { return head_fc1_; }
  ConvIds head_fc2() const { return head_fc2_; }

  template <typename T>
  Model<T> cast() const {
    Model<T> out(spec_);
    out.params() = params_.template cast<T>();
    return out;
  }

 private:
  ModelSpec spec_;
  nn::ParamStore<S> params_;
  std::vector<int> encoder_ids_, decoder_ids_, confusion_ids_;
  int table_id_ = -1;

  ConvIds enc_in_, enc_out_;
  std::vector<EncoderLayer> enc_layers_;

  int dec_embed_ = -1;
  std::vector<DecoderLayer> dec_layers_;
  ConvIds head_cond_, head_fc1_, head_fc2_;

  std::vector<ConvIds> conf_layers_;
  std::vector<nn::ConvGeometry> conf_geometry_;
  ConvIds conf_proj_;

  ConvIds AddConv(std::vector<int>& group, const std::string& name, int out, int in,
                  int kernel, bool bias);
};

/// Free-function form of the embedding-ball projection on a raw table (dim x k).
template <typename S>
void project_embeddings(nn::Mat<S>& table) {
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const S norm = table.col(j).norm();
    if (norm > S(1)) table.col(j) /= norm;
  }
}

extern template class Model<float>;
extern template class Model<double>;

}  // namespace svc
