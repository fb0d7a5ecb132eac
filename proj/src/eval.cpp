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

#include "svc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "svc/checkpoint.hpp"
#include "svc/error.hpp"
#include "svc/inference.hpp"
#include "svc/nn/adam.hpp"
#include "svc/parallel.hpp"
#include "svc/random.hpp"

namespace svc {

using nn::ImageShape;
using nn::Mat;
using nn::Vec;

// ---- features -------------------------------------------------------------------

LogMelExtractor::LogMelExtractor(LogMelConfig config) : config_(config) {
  if (config_.bands < 1 || config_.window < 1 || config_.hop < 1 ||
      config_.fft_size < config_.window || !(config_.floor > 0.0))
    Fail(ErrorKind::kValidation, "invalid log-mel configuration");
}

namespace {
double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
}  // namespace

Mat<double> LogMelExtractor::filter_bank(int sample_rate) const {
  const int bins = config_.fft_size / 2 + 1;
  const double top = HzToMel(0.5 * sample_rate);
  std::vector<double> edges(config_.bands + 2);
  for (int i = 0; i < config_.bands + 2; ++i)
    edges[i] = MelToHz(top * i / (config_.bands + 1));
  Mat<double> fb = Mat<double>::Zero(config_.bands, bins);
  for (int b = 0; b < config_.bands; ++b)
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / config_.fft_size;
      const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
      if (f > lo && f < hi) fb(b, k) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  return fb;
}

FeatureImage LogMelExtractor::extract(const AudioClip& clip) const {
  const long t = static_cast<long>(clip.size());
  if (t < config_.window)
    Fail(ErrorKind::kDomain, "extract_features: clip of " + std::to_string(t) +
                                 " samples is shorter than one window (" +
                                 std::to_string(config_.window) + ")");
  const long frames = (t - config_.window) / config_.hop + 1;
  const Mat<double> fb = filter_bank(clip.sample_rate);
  std::vector<double> window(config_.window);
  for (int i = 0; i < config_.window; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / config_.window);
  FramePowerSpectrum fft(config_.fft_size);
  std::vector<double> frame(config_.fft_size, 0.0);
  Vec<double> power(config_.fft_size / 2 + 1);
  FeatureImage out;
  out.values.resize(config_.bands, frames);
  for (long f = 0; f < frames; ++f) {
    const long start = f * config_.hop;
    for (int i = 0; i < config_.window; ++i) frame[i] = clip.samples[start + i] * window[i];
    fft.compute(frame, std::span<double>(power.data(), power.size()));
    const Vec<double> energy = fb * power;
    out.values.col(f) = (energy.array() + config_.floor).log().cast<float>().matrix();
  }
  return out;
}

FeatureImage extract_features(const AudioClip& clip) { return LogMelExtractor().extract(clip); }

FeatureImage MuLawDomainExtractor::extract(const AudioClip& clip) const {
  MuLawClip q;
  q.sample_rate = clip.sample_rate;
  q.indices.resize(clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    q.indices[i] = mu_law_encode_sample(std::clamp<double>(clip.samples[i], -1.0, 1.0));
  return inner_.extract(mu_law_decode(q));
}

// ---- identifier network ---------------------------------------------------------

void IdModelSpec::validate() const {
  if (conv_layers < 1 || channels < 1 || hidden < 1 || bands < 1)
    Fail(ErrorKind::kValidation, "identifier sizes must be positive");
  if (num_classes < 2) Fail(ErrorKind::kValidation, "identifier needs at least 2 classes");
  if (pooled_bands() < 1)
    Fail(ErrorKind::kValidation, "too many pooling layers for " + std::to_string(bands) + " bands");
}

int IdModelSpec::pooled_bands() const {
  int h = bands;
  for (int l = 0; l < conv_layers; ++l) h /= 2;
  return h;
}

template <typename S>
IdentifierNet<S>::IdentifierNet(IdModelSpec spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  Rng rng(seed);
  auto fill_normal = [&](Mat<S>& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(stddev * normal01(rng));
  };
  int in = 1;
  for (int l = 0; l < spec_.conv_layers; ++l) {
    const std::string p = "id.conv" + std::to_string(l);
    conv_w_.push_back(params_.add(p + ".w", spec_.channels, in * 9));
    fill_normal(params_[conv_w_.back()], std::sqrt(2.0 / (in * 9)));
    bn_gamma_.push_back(params_.add(p + ".gamma", spec_.channels, 1));
    params_[bn_gamma_.back()].setOnes();
    bn_beta_.push_back(params_.add(p + ".beta", spec_.channels, 1));
    running_mean_.push_back(Vec<S>::Zero(spec_.channels));
    running_var_.push_back(Vec<S>::Ones(spec_.channels));
    in = spec_.channels;
  }
  const int features = spec_.channels * spec_.pooled_bands();
  fc1_w_ = params_.add("id.fc1.w", spec_.hidden, features);
  fill_normal(params_[fc1_w_], std::sqrt(2.0 / features));
  fc1_b_ = params_.add("id.fc1.b", spec_.hidden, 1);
  fc2_w_ = params_.add("id.fc2.w", spec_.num_classes, spec_.hidden);
  fill_normal(params_[fc2_w_], std::sqrt(1.0 / spec_.hidden));
  fc2_b_ = params_.add("id.fc2.b", spec_.num_classes, 1);
}

template <typename S>
Mat<S> IdentifierNet<S>::Head(const Mat<S>& pooled, Mat<S>* hidden_pre) const {
  Mat<S> h = params_[fc1_w_] * pooled;
  h.colwise() += params_[fc1_b_].col(0);
  if (hidden_pre) *hidden_pre = h;
  Mat<S> logits = params_[fc2_w_] * h.cwiseMax(S(0));
  logits.colwise() += params_[fc2_b_].col(0);
  return logits;
}

template <typename S>
Mat<S> IdentifierNet<S>::forward(const std::vector<Mat<S>>& images, bool training, Cache* cache,
                                 bool update_running) {
  if (images.empty()) Fail(ErrorKind::kShape, "identifier: empty batch");
  const std::size_t n = images.size();
  const int frames = static_cast<int>(images[0].cols()) / spec_.bands;
  ImageShape shape{spec_.bands, frames};
  for (const auto& im : images)
    if (im.rows() != 1 || im.cols() != shape.pixels())
      Fail(ErrorKind::kShape, "identifier: batch images must be 1 x (bands*frames) and equal size");
  if (frames < spec_.min_frames())
    Fail(ErrorKind::kShape, "identifier: need at least " + std::to_string(spec_.min_frames()) +
                                " frames, got " + std::to_string(frames));
  std::vector<Mat<S>> x = images;
  if (cache) cache->layers.assign(spec_.conv_layers, {});
  const S eps = static_cast<S>(spec_.bn_epsilon);
  for (int l = 0; l < spec_.conv_layers; ++l) {
    std::vector<Mat<S>> pre(n);
    for (std::size_t i = 0; i < n; ++i) pre[i] = nn::conv2d3x3(x[i], shape, params_[conv_w_[l]], Mat<S>());
    std::vector<Mat<S>> normed;
    const Mat<S>& gamma = params_[bn_gamma_[l]];
    const Mat<S>& beta = params_[bn_beta_[l]];
    if (training) {
      nn::BatchNormCache<S> bn;
      normed = nn::batch_norm(pre, gamma, beta, eps, &bn);
      if (update_running) {
        const S m = static_cast<S>(spec_.bn_momentum);
        const Vec<S> var = (bn.inv_std.array().square().inverse() - eps).matrix();
        running_mean_[l] = (S(1) - m) * running_mean_[l] + m * bn.mean;
        running_var_[l] = (S(1) - m) * running_var_[l] + m * var;
      }
      if (cache) cache->layers[l].bn = std::move(bn);
    } else {
      const Vec<S> inv_std = (running_var_[l].array() + eps).rsqrt().matrix();
      const Vec<S> scale = gamma.col(0).cwiseProduct(inv_std);
      const Vec<S> shift = beta.col(0) - running_mean_[l].cwiseProduct(scale);
      for (const auto& p : pre)
        normed.push_back(((p.array().colwise() * scale.array()).colwise() + shift.array()).matrix());
    }
    ImageShape out_shape;
    std::vector<Mat<S>> next(n);
    std::vector<std::vector<Eigen::Index>> argmax(n);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = nn::max_pool2x2(Mat<S>(normed[i].cwiseMax(S(0))), shape, &out_shape,
                                cache ? &argmax[i] : nullptr);
    if (cache) {
      auto& layer = cache->layers[l];
      layer.in_shape = shape;
      layer.out_shape = out_shape;
      layer.input = std::move(x);
      layer.post_norm = std::move(normed);
      layer.argmax = std::move(argmax);
    }
    x = std::move(next);
    shape = out_shape;
  }
  Mat<S> pooled(spec_.channels * shape.height, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) pooled.col(i) = nn::mean_over_width(x[i], shape);
  if (cache) {
    cache->final_shape = shape;
    cache->pooled = pooled;
    return Head(pooled, &cache->hidden_pre);
  }
  return Head(pooled, nullptr);
}

template <typename S>
Mat<S> IdentifierNet<S>::forward(const std::vector<Mat<S>>& images) const {
  return const_cast<IdentifierNet<S>*>(this)->forward(images, false, nullptr, false);
}

template <typename S>
void IdentifierNet<S>::backward(const Cache& cache, const Mat<S>& dlogits, nn::Grads<S>& grads,
                                std::vector<Mat<S>>* dimages) const {
  if (cache.layers.empty() || cache.layers[0].bn.normalized.empty())
    Fail(ErrorKind::kShape, "identifier backward needs a training-mode cache");
  const Mat<S> h = cache.hidden_pre.cwiseMax(S(0));
  grads[fc2_w_].noalias() += dlogits * h.transpose();
  grads[fc2_b_].col(0) += dlogits.rowwise().sum();
  Mat<S> dh = params_[fc2_w_].transpose() * dlogits;
  dh = dh.cwiseProduct((cache.hidden_pre.array() > S(0)).template cast<S>().matrix());
  grads[fc1_w_].noalias() += dh * cache.pooled.transpose();
  grads[fc1_b_].col(0) += dh.rowwise().sum();
  const Mat<S> dpooled = params_[fc1_w_].transpose() * dh;

  const std::size_t n = static_cast<std::size_t>(dlogits.cols());
  std::vector<Mat<S>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = Mat<S>::Zero(spec_.channels, cache.final_shape.pixels());
    nn::mean_over_width_backward<S>(dpooled.col(i), cache.final_shape, &d[i]);
  }
  for (int l = spec_.conv_layers - 1; l >= 0; --l) {
    const auto& layer = cache.layers[l];
    std::vector<Mat<S>> dnorm(n);
    for (std::size_t i = 0; i < n; ++i) {
      Mat<S> drelu = Mat<S>::Zero(spec_.channels, layer.in_shape.pixels());
      nn::max_pool2x2_backward(layer.argmax[i], d[i], &drelu);
      dnorm[i] = Mat<S>::Zero(drelu.rows(), drelu.cols());
      nn::relu_backward(layer.post_norm[i], drelu, &dnorm[i]);
    }
    std::vector<Mat<S>> dpre(n);
    for (std::size_t i = 0; i < n; ++i) dpre[i] = Mat<S>::Zero(dnorm[i].rows(), dnorm[i].cols());
    nn::batch_norm_backward(layer.bn, params_[bn_gamma_[l]], dnorm, &dpre, &grads[bn_gamma_[l]],
                            &grads[bn_beta_[l]]);
    const bool need_dx = l > 0 || dimages;
    std::vector<Mat<S>> dx(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (need_dx) dx[i] = Mat<S>::Zero(layer.input[i].rows(), layer.input[i].cols());
      nn::conv2d3x3_backward(layer.input[i], layer.in_shape, params_[conv_w_[l]], dpre[i],
                             need_dx ? &dx[i] : nullptr, &grads[conv_w_[l]],
                             static_cast<Mat<S>*>(nullptr));
    }
    d = std::move(dx);
  }
  if (dimages)
    for (std::size_t i = 0; i < n; ++i) (*dimages)[i] += d[i];
}

template <typename S>
Vec<S> IdentifierNet<S>::predict_proba(const Mat<S>& image) const {
  const Mat<S> logits = forward(std::vector<Mat<S>>{image});
  const Mat<S> lp = nn::log_softmax(logits);
  return lp.col(0).array().exp().matrix();
}

template <typename S>
int IdentifierNet<S>::predict(const Mat<S>& image) const {
  const Mat<S> logits = forward(std::vector<Mat<S>>{image});
  Eigen::Index best;
  logits.col(0).maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename S>
template <typename T>
IdentifierNet<T> IdentifierNet<S>::cast() const {
  IdentifierNet<T> out;
  out.spec_ = spec_;
  out.params_ = params_.template cast<T>();
  out.conv_w_ = conv_w_;
  out.bn_gamma_ = bn_gamma_;
  out.bn_beta_ = bn_beta_;
  out.fc1_w_ = fc1_w_;
  out.fc1_b_ = fc1_b_;
  out.fc2_w_ = fc2_w_;
  out.fc2_b_ = fc2_b_;
  for (const auto& v : running_mean_) out.running_mean_.push_back(v.template cast<T>());
  for (const auto& v : running_var_) out.running_var_.push_back(v.template cast<T>());
  return out;
}

template class IdentifierNet<float>;
template class IdentifierNet<double>;
template IdentifierNet<double> IdentifierNet<float>::cast<double>() const;
template IdentifierNet<float> IdentifierNet<double>::cast<float>() const;

// ---- identifier training and accuracy ------------------------------------------

namespace {

Mat<float> AsImage(const FeatureImage& f, long first_frame, long frames) {
  // Row-major bands x frames flattened into one channel.
  Mat<float> im(1, static_cast<Eigen::Index>(f.bands()) * frames);
  for (int b = 0; b < f.bands(); ++b)
    for (long t = 0; t < frames; ++t) im(0, b * frames + t) = f.values(b, first_frame + t);
  return im;
}

}  // namespace

std::vector<FeatureImage> extract_all(const FeatureExtractor& fx,
                                      const std::vector<LabeledClip>& clips) {
  std::vector<FeatureImage> out(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) { out[i] = fx.extract(clips[i].clip); });
  return out;
}

IdentifierNet<float> train_identifier(const std::vector<LabeledClip>& clips, int num_classes,
                                      const FeatureExtractor& fx, const IdentifierConfig& config,
                                      std::vector<double>* loss_trace) {
  if (num_classes < 2) Fail(ErrorKind::kValidation, "identifier training needs k >= 2");
  if (config.steps < 0 || config.batch_size < 1)
    Fail(ErrorKind::kValidation, "identifier steps/batch size must be positive");
  IdModelSpec spec;
  spec.bands = fx.bands();
  spec.num_classes = num_classes;
  if (config.crop_frames < spec.min_frames())
    Fail(ErrorKind::kValidation, "identifier crop must be at least " +
                                     std::to_string(spec.min_frames()) + " frames");
  const auto features = extract_all(fx, clips);
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].label < 0 || clips[i].label >= num_classes)
      Fail(ErrorKind::kValidation, "identifier label out of range for " + clips[i].name);
    if (features[i].frames() < config.crop_frames)
      Fail(ErrorKind::kValidation, clips[i].name + " is shorter than the identifier crop");
    by_class[clips[i].label].push_back(i);
  }
  for (int c = 0; c < num_classes; ++c)
    if (by_class[c].empty())
      Fail(ErrorKind::kValidation, "no identifier training clips for class " + std::to_string(c));

  IdentifierNet<float> net(spec, derive_seed(config.seed, {0x1D}));
  std::vector<int> all_ids(net.params().size());
  for (std::size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = static_cast<int>(i);
  nn::AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  adam_cfg.epoch_decay = 1.0;
  nn::Adam<float> adam(net.params(), all_ids, adam_cfg);
  auto grads = net.params().zeros_like();
  for (int step = 0; step < config.steps; ++step) {
    Rng rng(derive_seed(config.seed, {0x1D, static_cast<std::uint64_t>(step)}));
    std::vector<Mat<float>> images;
    std::vector<int> labels;
    for (int b = 0; b < config.batch_size; ++b) {
      const int c = static_cast<int>(uniform_index(rng, num_classes));
      const std::size_t i = by_class[c][uniform_index(rng, by_class[c].size())];
      const long start = static_cast<long>(
          uniform_index(rng, features[i].frames() - config.crop_frames + 1));
      images.push_back(AsImage(features[i], start, config.crop_frames));
      labels.push_back(c);
    }
    IdentifierNet<float>::Cache cache;
    const Mat<float> logits = net.forward(images, true, &cache);
    Mat<float> dlogits = Mat<float>::Zero(logits.rows(), logits.cols());
    const double loss = nn::softmax_cross_entropy<float>(logits, labels, &dlogits);
    if (loss_trace) loss_trace->push_back(loss);
    nn::zero_grads(grads);
    net.backward(cache, dlogits, grads);
    adam.step(net.params(), grads);
  }
  return net;
}

IdentifierNet<float> train_identifier(const Corpus& corpus, const FeatureExtractor& fx,
                                      const IdentifierConfig& config) {
  std::vector<LabeledClip> clips;
  for (int j = 0; j < corpus.k(); ++j) {
    for (std::size_t f = 0; f < corpus.train_clips(j).size(); ++f)
      clips.push_back({corpus.train_clips(j)[f], j, corpus.train_paths(j)[f].string()});
    for (std::size_t f = 0; f < corpus.validation_clips(j).size(); ++f)
      clips.push_back({corpus.validation_clips(j)[f], j, corpus.validation_paths(j)[f].string()});
  }
  return train_identifier(clips, corpus.k(), fx, config);
}

std::vector<int> predict_all(const IdentifierNet<float>& net, const FeatureExtractor& fx,
                             const std::vector<LabeledClip>& clips) {
  std::vector<int> out(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    const FeatureImage f = fx.extract(clips[i].clip);
    if (f.frames() < net.spec().min_frames())
      Fail(ErrorKind::kDomain, clips[i].name + " is too short to identify");
    out[i] = net.predict(AsImage(f, 0, f.frames()));
  });
  return out;
}

double top1_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.empty()) Fail(ErrorKind::kValidation, "top1_accuracy: empty clip list");
  if (predicted.size() != labels.size())
    Fail(ErrorKind::kShape, "top1_accuracy: prediction and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / labels.size();
}

double top1_accuracy(const IdentifierNet<float>& net, const FeatureExtractor& fx,
                     const std::vector<LabeledClip>& clips) {
  if (clips.empty()) Fail(ErrorKind::kValidation, "top1_accuracy: empty clip list");
  std::vector<int> labels;
  for (const auto& c : clips) labels.push_back(c.label);
  return top1_accuracy(predict_all(net, fx, clips), labels);
}

// ---- centroid oracle ------------------------------------------------------------

double spectral_centroid(const AudioClip& clip) {
  const auto power = power_spectrum(clip);
  const std::size_t n = power.size();
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * clip.sample_rate / n;
    num += f * power[k];
    den += power[k];
  }
  return den > 0.0 ? num / den : 0.0;
}

int centroid_oracle(const AudioClip& clip, const std::vector<SingerProfile>& profiles) {
  if (profiles.empty()) Fail(ErrorKind::kValidation, "centroid_oracle: no profiles");
  const double c = spectral_centroid(clip);
  int best = 0;
  double best_dist = std::abs(c - profiles[0].expected_centroid_hz());
  for (std::size_t p = 1; p < profiles.size(); ++p) {
    const double d = std::abs(c - profiles[p].expected_centroid_hz());
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(p);
    }
  }
  return best;
}

double feature_correlation(const FeatureImage& a, const FeatureImage& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    Fail(ErrorKind::kShape, "feature_correlation: image sizes differ");
  const Eigen::ArrayXd x = a.values.cast<double>().reshaped().array();
  const Eigen::ArrayXd y = b.values.cast<double>().reshaped().array();
  const Eigen::ArrayXd dx = x - x.mean(), dy = y - y.mean();
  const double den = std::sqrt((dx * dx).sum() * (dy * dy).sum());
  return den > 0.0 ? (dx * dy).sum() / den : 0.0;
}

// ---- evaluation pipeline --------------------------------------------------------

const char* eval_mode_name(EvalMode mode) {
  return mode == EvalMode::kReconstruction ? "reconstruction" : "conversion";
}

namespace {

struct Unit {
  AudioClip clip;
  std::string name;
  int source = 0;
  int target = 0;
};

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

EvalSummary evaluate(const EvaluateOptions& options) {
  const Checkpoint ckpt = load_checkpoint(options.checkpoint);
  const int rate = ckpt.model.spec().sample_rate;
  Corpus corpus(load_manifest(options.manifest), rate);
  if (ckpt.singer_ids != corpus.registry().ids())
    Fail(ErrorKind::kValidation, "checkpoint singers differ from the manifest singers");
  const int k = corpus.k();

  std::vector<Unit> units;
  const long seg = options.segment_seconds > 0.0
                       ? std::lround(options.segment_seconds * rate)
                       : 0;
  for (int j = 0; j < k; ++j)
    for (std::size_t f = 0; f < corpus.validation_clips(j).size(); ++f) {
      const AudioClip& clip = corpus.validation_clips(j)[f];
      const std::string path = corpus.validation_paths(j)[f].string();
      std::vector<std::pair<AudioClip, std::string>> pieces;
      if (seg > 0) {
        for (long s = 0; s + seg <= static_cast<long>(clip.size()); s += seg) {
          AudioClip piece;
          piece.sample_rate = rate;
          piece.samples.assign(clip.samples.begin() + s, clip.samples.begin() + s + seg);
          pieces.emplace_back(std::move(piece), path + "@" + std::to_string(s));
        }
      } else {
        pieces.emplace_back(clip, path);
      }
      for (auto& [piece, name] : pieces)
        for (int t = 0; t < k; ++t) {
          if ((options.mode == EvalMode::kReconstruction) != (t == j)) continue;
          units.push_back({piece, name, j, t});
        }
    }
  if (units.empty()) Fail(ErrorKind::kValidation, "the manifest has no validation clips");

  std::vector<SingerProfile> profiles;
  std::filesystem::path profile_path = options.profiles;
  if (profile_path.empty()) {
    const auto guess = options.manifest.parent_path() / "profiles.json";
    if (std::filesystem::exists(guess)) profile_path = guess;
  }
  std::vector<int> profile_of_singer;
  if (!profile_path.empty()) {
    profiles = load_profiles(profile_path);
    for (int j = 0; j < k; ++j) {
      int found = -1;
      for (std::size_t p = 0; p < profiles.size(); ++p)
        if (profiles[p].name == corpus.registry().id(j)) found = static_cast<int>(p);
      if (found < 0) {
        if (!options.profiles.empty())
          Fail(ErrorKind::kValidation, "no profile named '" + corpus.registry().id(j) + "'");
        profile_of_singer.clear();
        break;
      }
      profile_of_singer.push_back(found);
    }
  }

  std::vector<LabeledClip> converted(units.size());
  parallel_for(units.size(), [&](std::size_t i) {
    const Unit& u = units[i];
    converted[i].clip = convert(u.clip, u.target, ckpt.model, options.temperature,
                                derive_seed(options.seed, {0xE7, i}));
    converted[i].label = u.target;
    converted[i].name = u.name;
  });

  // Identification and correlation both work in the 8-bit domain the model emits.
  const LogMelExtractor logmel;
  const MuLawDomainExtractor fx(logmel);
  const auto net = train_identifier(corpus, fx, options.identifier);
  const auto predicted = predict_all(net, fx, converted);

  EvalSummary summary;
  std::size_t hits = 0, oracle_hits = 0;
  const bool use_oracle = !profile_of_singer.empty();
  const bool self = options.mode == EvalMode::kReconstruction;
  std::vector<double> corr(units.size(), 0.0);
  if (self)
    parallel_for(units.size(), [&](std::size_t i) {
      corr[i] = feature_correlation(fx.extract(units[i].clip), fx.extract(converted[i].clip));
    });
  double corr_sum = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    EvalRow row;
    row.clip = units[i].name;
    row.true_singer = corpus.registry().id(units[i].target);
    row.predicted_singer = corpus.registry().id(predicted[i]);
    row.correct = predicted[i] == units[i].target;
    hits += row.correct;
    if (use_oracle) {
      std::vector<SingerProfile> ordered;
      for (int p : profile_of_singer) ordered.push_back(profiles[p]);
      const int o = centroid_oracle(converted[i].clip, ordered);
      row.oracle_singer = corpus.registry().id(o);
      oracle_hits += o == units[i].target;
    }
    if (self) {
      row.correlation = corr[i];
      corr_sum += corr[i];
    }
    summary.rows.push_back(std::move(row));
  }
  summary.top1_accuracy = static_cast<double>(hits) / units.size();
  if (use_oracle) summary.oracle_accuracy = static_cast<double>(oracle_hits) / units.size();
  if (self) summary.mean_correlation = corr_sum / units.size();

  std::ofstream out(options.report, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write report " + options.report.string());
  out << "clip,true_singer,predicted_singer,correct" << (use_oracle ? ",oracle_singer" : "")
      << (self ? ",correlation" : "") << "\n";
  for (const auto& r : summary.rows) {
    out << CsvField(r.clip) << "," << CsvField(r.true_singer) << ","
        << CsvField(r.predicted_singer) << "," << (r.correct ? 1 : 0);
    if (r.oracle_singer) out << "," << CsvField(*r.oracle_singer);
    if (r.correlation) out << "," << *r.correlation;
    out << "\n";
  }
  out << "# mode=" << eval_mode_name(options.mode) << " clips=" << summary.rows.size()
      << " top1_accuracy=" << summary.top1_accuracy;
  if (summary.oracle_accuracy) out << " oracle_accuracy=" << *summary.oracle_accuracy;
  if (summary.mean_correlation) out << " mean_correlation=" << *summary.mean_correlation;
  out << "\n";
  if (!out) Fail(ErrorKind::kIo, "failed writing " + options.report.string());
  return summary;
}

}  // namespace svc
