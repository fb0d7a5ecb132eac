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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svc/checkpoint.hpp"
#include "svc/dataset.hpp"
#include "svc/model.hpp"
#include "svc/nn/adam.hpp"

namespace svc {

struct TrainConfig {
  double lambda = 0.01;  // weight of the adversarial term
  int batch_size = 8;
  int crop_len = 16000;
  int phase1_epochs = 10;
  int phase2_epochs = 10;
  int steps_per_epoch = 100;
  int mixup_refresh_epochs = 3;
  double backtranslation_weight = 1.0;
  int backtranslation_items = 0;  // 0: one synthetic item per training clip
  int backtranslation_crop_len = 0;  // 0: crop_len
  double backtranslation_temperature = 1.0;
  bool mixup = true;    // false: backtranslate through real singer j' (alpha = 0)
  bool augment = true;  // false: identity variant only
  std::uint64_t rng_seed = 1;
  nn::AdamConfig optimizer;
  ModelSpec model;

  void validate() const;  // throws kValidation naming the offending key
  std::map<std::string, std::string> to_kv() const;
  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
  static TrainConfig from_file(const std::filesystem::path& path);
};

/// A synthetic sample s_u = D[u](E(s)) paired with the crop it came from.
struct BacktranslationItem {
  MuLawClip synthetic;
  MuLawClip source;
  int source_singer = 0;
  int other_singer = 0;
  double alpha = 1.0;
};

struct BacktranslationOptions {
  double temperature = 1.0;
  bool mixup = true;
  std::optional<double> fixed_alpha;  // overrides the uniform draw
  bool augment = true;
};

struct StepLosses {
  double reconstruction = 0.0;
  double adversarial = 0.0;  // classifier cross-entropy on latents
  double total = 0.0;        // reconstruction - lambda * adversarial
};

struct ConfusionStepResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  int phase = 1;
  double reconstruction = 0.0;
  double adversarial = 0.0;
  double confusion_loss = 0.0;
  double confusion_accuracy = 0.0;
  double backtranslation = 0.0;  // NaN-free: 0 in phase I
  double learning_rate = 0.0;
  double max_embedding_norm = 0.0;
  double seconds = 0.0;
};

/// u = alpha * v_j + (1 - alpha) * v_j'.
nn::Vec<float> mixup_embedding(const nn::Mat<float>& table, int j, int j_prime, double alpha);

/// Holds the model and both optimizers; exposes the individual update steps.
class Trainer {
 public:
  enum class StepKind { kConfusion, kAutoencoder, kBacktranslation };
  using StepHook = std::function<void(StepKind, const Model<float>&)>;

  Trainer(TrainConfig config, int num_singers);
  /// Resumes from a saved model (optimizer state loaded when present).
  Trainer(TrainConfig config, Checkpoint checkpoint,
          const std::optional<std::filesystem::path>& optimizer_state);

  Model<float>& model() { return model_; }
  const Model<float>& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  void set_epoch(int epoch);
  void set_step_hook(StepHook hook) { hook_ = std::move(hook); }

  /// Classifier update: trains only the classifier; encoder runs frozen.
  ConfusionStepResult confusion_step(const std::vector<TrainingItem>& batch);
  /// Autoencoder update: reconstruction minus lambda times classifier loss; the
  /// classifier is frozen. Projects the embedding table afterwards.
  StepLosses autoencoder_step(const std::vector<TrainingItem>& batch);
  /// Backtranslation update: reconstruct the source from its synthetic conversion.
  double backtranslation_step(const std::vector<BacktranslationItem>& items);

  /// Loss values only, no update.
  StepLosses autoencoder_objective(const std::vector<TrainingItem>& batch) const;
  double backtranslation_objective(const std::vector<BacktranslationItem>& items) const;
  /// Phase-II objective of one batch computed in a single pass.
  double phase2_objective(const std::vector<TrainingItem>& batch,
                          const std::vector<BacktranslationItem>& items) const;

  /// Gradient buffers of the most recent step (for freeze checks).
  const nn::Grads<float>& last_gradients() const { return last_grads_; }

  void save_optimizer_state(const std::filesystem::path& path) const;

 private:
  TrainConfig config_;
  Model<float> model_;
  nn::Adam<float> ae_opt_;
  nn::Adam<float> conf_opt_;
  nn::Grads<float> last_grads_;
  StepHook hook_;

  void LoadOptimizerState(const std::filesystem::path& path);
};

std::vector<BacktranslationItem> generate_backtranslation_set(
    const Corpus& corpus, const Model<float>& model, std::size_t n_items, std::size_t crop_len,
    std::uint64_t rng_seed, const BacktranslationOptions& options = {});

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::vector<std::filesystem::path> checkpoints;
};

/// Full two-phase run. Writes `checkpoint-NNNN.{svc,meta,opt}` per epoch and
/// appends to `metrics.csv` in `out_dir`.
TrainResult train(const TrainConfig& config, const Corpus& corpus,
                  const std::filesystem::path& out_dir, bool resume = false,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace svc
