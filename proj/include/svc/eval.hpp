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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "svc/audio.hpp"
#include "svc/dataset.hpp"
#include "svc/nn/ops2d.hpp"
#include "svc/synthdata.hpp"

namespace svc {

/// Log filter-bank energies, bands x frames.
struct FeatureImage {
  nn::Mat<float> values;
  int bands() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureImage extract(const AudioClip& clip) const = 0;
  virtual int bands() const = 0;
  virtual int hop() const = 0;
  virtual int window() const = 0;
};

struct LogMelConfig {
  int bands = 40;
  int window = 400;
  int hop = 160;
  int fft_size = 512;
  double floor = 1e-6;
};

/// Hann-windowed power spectra -> triangular mel filters -> log(x + floor).
/// frames = floor((T - window) / hop) + 1.
class LogMelExtractor : public FeatureExtractor {
 public:
  explicit LogMelExtractor(LogMelConfig config = {});
  FeatureImage extract(const AudioClip& clip) const override;
  int bands() const override { return config_.bands; }
  int hop() const override { return config_.hop; }
  int window() const override { return config_.window; }
  const LogMelConfig& config() const { return config_; }
  /// bands x (fft_size/2 + 1) filter weights for `sample_rate`.
  nn::Mat<double> filter_bank(int sample_rate) const;

 private:
  LogMelConfig config_;
};

FeatureImage extract_features(const AudioClip& clip);

/// Round-trips the clip through 8-bit mu-law (clamped to [-1, 1]) before
/// extracting, so real recordings share the quantization floor of decoder output.
class MuLawDomainExtractor : public FeatureExtractor {
 public:
  explicit MuLawDomainExtractor(const FeatureExtractor& inner) : inner_(inner) {}
  FeatureImage extract(const AudioClip& clip) const override;
  int bands() const override { return inner_.bands(); }
  int hop() const override { return inner_.hop(); }
  int window() const override { return inner_.window(); }

 private:
  const FeatureExtractor& inner_;
};

struct IdModelSpec {
  int conv_layers = 5;
  int channels = 32;
  int hidden = 64;
  int bands = 40;
  int num_classes = 2;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.1;

  void validate() const;
  /// Rows left after the pooling stack.
  int pooled_bands() const;
  /// Shortest input (in frames) that survives all pooling layers.
  int min_frames() const { return 1 << conv_layers; }
};

/// Conv(3x3) + batch norm + ReLU + 2x2 max pool, repeated; mean over time;
/// two fully connected layers.
template <typename S>
class IdentifierNet {
 public:
  struct Cache;

  IdentifierNet() = default;
  explicit IdentifierNet(IdModelSpec spec, std::uint64_t seed = 1);

  const IdModelSpec& spec() const { return spec_; }
  nn::ParamStore<S>& params() { return params_; }
  const nn::ParamStore<S>& params() const { return params_; }

  /// Logits, num_classes x batch. Training mode uses batch statistics and
  /// updates the running averages (unless `update_running` is false).
  nn::Mat<S> forward(const std::vector<nn::Mat<S>>& images, bool training,
                     Cache* cache = nullptr, bool update_running = true);
  nn::Mat<S> forward(const std::vector<nn::Mat<S>>& images) const;
  void backward(const Cache& cache, const nn::Mat<S>& dlogits, nn::Grads<S>& grads,
                std::vector<nn::Mat<S>>* dimages = nullptr) const;

  /// Class probabilities for one image (inference mode).
  nn::Vec<S> predict_proba(const nn::Mat<S>& image) const;
  int predict(const nn::Mat<S>& image) const;

  template <typename T>
  IdentifierNet<T> cast() const;

  struct Cache {
    struct Layer {
      nn::ImageShape in_shape, out_shape;
      std::vector<nn::Mat<S>> input, pre_norm, post_norm;
      nn::BatchNormCache<S> bn;
      std::vector<std::vector<Eigen::Index>> argmax;
    };
    std::vector<Layer> layers;
    nn::ImageShape final_shape;
    std::vector<nn::Mat<S>> final_maps;
    nn::Mat<S> pooled, hidden_pre;
  };

 private:
  template <typename T>
  friend class IdentifierNet;

  IdModelSpec spec_;
  nn::ParamStore<S> params_;
  std::vector<int> conv_w_, bn_gamma_, bn_beta_;
  int fc1_w_ = -1, fc1_b_ = -1, fc2_w_ = -1, fc2_b_ = -1;
  std::vector<nn::Vec<S>> running_mean_, running_var_;

  nn::Mat<S> Head(const nn::Mat<S>& pooled, nn::Mat<S>* hidden_pre) const;
};

extern template class IdentifierNet<float>;
extern template class IdentifierNet<double>;

struct LabeledClip {
  AudioClip clip;
  int label = 0;
  std::string name;
};

struct IdentifierConfig {
  int steps = 300;
  int batch_size = 16;
  int crop_frames = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

/// Feature-image images of `clips`, in parallel.
std::vector<FeatureImage> extract_all(const FeatureExtractor& fx,
                                      const std::vector<LabeledClip>& clips);

/// Supervised training on random feature crops. Deterministic given the seed.
/// `loss_trace`, when given, receives the loss of every step.
IdentifierNet<float> train_identifier(const std::vector<LabeledClip>& clips, int num_classes,
                                      const FeatureExtractor& fx, const IdentifierConfig& config,
                                      std::vector<double>* loss_trace = nullptr);
/// Trains on every file of the manifest (training and validation splits).
IdentifierNet<float> train_identifier(const Corpus& corpus, const FeatureExtractor& fx,
                                      const IdentifierConfig& config);

std::vector<int> predict_all(const IdentifierNet<float>& net, const FeatureExtractor& fx,
                             const std::vector<LabeledClip>& clips);
double top1_accuracy(const IdentifierNet<float>& net, const FeatureExtractor& fx,
                     const std::vector<LabeledClip>& clips);
/// Fraction of positions where predictions equal labels.
double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

/// Power-weighted mean frequency over the one-sided power spectrum.
double spectral_centroid(const AudioClip& clip);
int centroid_oracle(const AudioClip& clip, const std::vector<SingerProfile>& profiles);

/// Pearson correlation of two equally sized feature images.
double feature_correlation(const FeatureImage& a, const FeatureImage& b);

enum class EvalMode { kReconstruction, kConversion };
const char* eval_mode_name(EvalMode mode);

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path report;
  std::filesystem::path profiles;  // empty: profiles.json next to the manifest
  EvalMode mode = EvalMode::kConversion;
  double temperature = 1.0;
  double segment_seconds = 0.0;  // > 0 splits validation clips into segments
  std::uint64_t seed = 1;
  IdentifierConfig identifier;
};

struct EvalRow {
  std::string clip;
  std::string true_singer;  // identity the output should carry
  std::string predicted_singer;
  bool correct = false;
  std::optional<std::string> oracle_singer;
  std::optional<double> correlation;  // reconstruction mode: source vs output features
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double top1_accuracy = 0.0;
  std::optional<double> oracle_accuracy;
  std::optional<double> mean_correlation;
};

/// Converts (or reconstructs) every validation clip, identifies the results
/// with an identifier trained on the manifest, and writes the report CSV.
EvalSummary evaluate(const EvaluateOptions& options);

}  // namespace svc
