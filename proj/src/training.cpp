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

#include "svc/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "svc/error.hpp"
#include "svc/inference.hpp"
#include "svc/nn/serialize.hpp"
#include "svc/parallel.hpp"
#include "svc/random.hpp"

namespace svc {

using nn::Grads;
using nn::Mat;
using nn::Vec;

namespace {

[[noreturn]] void BadKey(const std::string& key, const std::string& why) {
  Fail(ErrorKind::kValidation, "config key '" + key + "': " + why);
}

double ParseDouble(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) BadKey(key, "not a number: '" + value + "'");
    return v;
  } catch (const std::logic_error&) {
    BadKey(key, "not a number: '" + value + "'");
  }
}

long long ParseInt(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) BadKey(key, "not an integer: '" + value + "'");
    return v;
  } catch (const std::logic_error&) {
    BadKey(key, "not an integer: '" + value + "'");
  }
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  BadKey(key, "expected true or false, got '" + value + "'");
}

std::string FormatDouble(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

Mat<float> RowOf(const std::vector<float>& v) {
  return Eigen::Map<const Mat<float>>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

std::vector<int> Targets(const MuLawClip& clip) {
  return std::vector<int>(clip.indices.begin(), clip.indices.end());
}

// Sums per-item gradient buffers in item order so the result does not
// depend on how items were spread over threads.
Grads<float> SumInOrder(std::vector<Grads<float>>& per_item) {
  Grads<float> total = std::move(per_item.front());
  for (std::size_t i = 1; i < per_item.size(); ++i)
    for (std::size_t p = 0; p < total.size(); ++p) total[p] += per_item[i][p];
  return total;
}

struct ItemLoss {
  double reconstruction = 0.0;
  double adversarial = 0.0;
};

// Reconstruction of `targets` from the encoder input `encoder_input` through
// singer `singer`; optionally the adversarial classifier term. Accumulates
// gradients into `g` when non-null, scaled by `scale`.
ItemLoss ReconstructionItem(const Model<float>& m, const std::vector<float>& encoder_input,
                            const MuLawClip& targets, int singer, bool with_adversarial,
                            float lambda, float scale, Grads<float>* g) {
  ItemLoss out;
  EncoderCache<float> ec;
  const Mat<float> latent = m.encode(RowOf(encoder_input), g ? &ec : nullptr);
  const auto cond = m.build_conditioning(latent, m.embedding(singer));
  DecoderCache<float> dc;
  const Mat<float> logits = m.decoder_logits(targets.indices, cond, g ? &dc : nullptr);
  const auto tgt = Targets(targets);
  Mat<float> dlogits;
  if (g) dlogits = Mat<float>::Zero(logits.rows(), logits.cols());
  out.reconstruction = nn::softmax_cross_entropy<float>(logits, tgt, g ? &dlogits : nullptr, scale);

  Mat<float> dlatent;
  if (g) {
    Mat<float> dcond = Mat<float>::Zero(cond.frames.rows(), cond.frames.cols());
    m.decoder_backward(dc, dlogits, g, &dcond);
    const int L = m.spec().encoder.latent_dim;
    dlatent = dcond.topRows(L);
    (*g)[m.table_id()].col(singer) += dcond.bottomRows(m.spec().embedding_dim).rowwise().sum();
  }
  if (with_adversarial) {
    ConfusionCache<float> cc;
    const bool backprop = g && lambda != 0.0f;
    const Vec<float> clog = m.classify_singer(latent, backprop ? &cc : nullptr);
    const Mat<float> clog_m = clog;
    const int label[1] = {singer};
    Mat<float> dclog;
    if (backprop) dclog = Mat<float>::Zero(clog.size(), 1);
    out.adversarial =
        nn::softmax_cross_entropy<float>(clog_m, label, backprop ? &dclog : nullptr, -lambda * scale);
    // Classifier weights are frozen here: only the latent receives gradient.
    if (backprop) m.classify_backward(cc, dclog.col(0), nullptr, &dlatent);
  }
  if (g) m.encode_backward(ec, dlatent, g);
  return out;
}

}  // namespace

// ---- config ---------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) BadKey("lambda", "must be >= 0 (got " + FormatDouble(lambda) + ")");
  if (batch_size < 1) BadKey("batch_size", "must be >= 1");
  if (crop_len < 1 || crop_len % model.hop() != 0)
    BadKey("crop_len", "must be a positive multiple of the pool stride " +
                           std::to_string(model.hop()));
  if (backtranslation_crop_len < 0 ||
      (backtranslation_crop_len > 0 && backtranslation_crop_len % model.hop() != 0))
    BadKey("backtranslation_crop_len", "must be 0 or a positive multiple of the pool stride");
  if (phase1_epochs < 0) BadKey("phase1_epochs", "must be >= 0");
  if (phase2_epochs < 0) BadKey("phase2_epochs", "must be >= 0");
  if (steps_per_epoch < 1) BadKey("steps_per_epoch", "must be >= 1");
  if (mixup_refresh_epochs < 1) BadKey("mixup_refresh_epochs", "must be >= 1");
  if (!(backtranslation_weight >= 0.0)) BadKey("backtranslation_weight", "must be >= 0");
  if (backtranslation_items < 0) BadKey("backtranslation_items", "must be >= 0");
  if (!(backtranslation_temperature >= 0.0)) BadKey("backtranslation_temperature", "must be >= 0");
  if (!(optimizer.learning_rate > 0.0)) BadKey("learning_rate", "must be > 0");
  if (!(optimizer.epoch_decay > 0.0)) BadKey("lr_decay", "must be > 0");
  model.validate();
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  std::map<std::string, std::string> kv = {
      {"lambda", FormatDouble(lambda)},
      {"batch_size", std::to_string(batch_size)},
      {"crop_len", std::to_string(crop_len)},
      {"phase1_epochs", std::to_string(phase1_epochs)},
      {"phase2_epochs", std::to_string(phase2_epochs)},
      {"steps_per_epoch", std::to_string(steps_per_epoch)},
      {"mixup_refresh_epochs", std::to_string(mixup_refresh_epochs)},
      {"backtranslation_weight", FormatDouble(backtranslation_weight)},
      {"backtranslation_items", std::to_string(backtranslation_items)},
      {"backtranslation_crop_len", std::to_string(backtranslation_crop_len)},
      {"backtranslation_temperature", FormatDouble(backtranslation_temperature)},
      {"mixup", mixup ? "true" : "false"},
      {"augment", augment ? "true" : "false"},
      {"rng_seed", std::to_string(rng_seed)},
      {"learning_rate", FormatDouble(optimizer.learning_rate)},
      {"lr_decay", FormatDouble(optimizer.epoch_decay)},
      {"adam_beta1", FormatDouble(optimizer.beta1)},
      {"adam_beta2", FormatDouble(optimizer.beta2)},
      {"adam_epsilon", FormatDouble(optimizer.epsilon)},
  };
  for (const auto& [k, v] : model.to_kv())
    if (k != "num_singers") kv["model." + k] = v;
  return kv;
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  std::map<std::string, std::string> model_kv = c.model.to_kv();
  for (const auto& [key, value] : kv) {
    if (key == "lambda") c.lambda = ParseDouble(key, value);
    else if (key == "batch_size") c.batch_size = static_cast<int>(ParseInt(key, value));
    else if (key == "crop_len") c.crop_len = static_cast<int>(ParseInt(key, value));
    else if (key == "phase1_epochs") c.phase1_epochs = static_cast<int>(ParseInt(key, value));
    else if (key == "phase2_epochs") c.phase2_epochs = static_cast<int>(ParseInt(key, value));
    else if (key == "steps_per_epoch") c.steps_per_epoch = static_cast<int>(ParseInt(key, value));
    else if (key == "mixup_refresh_epochs")
      c.mixup_refresh_epochs = static_cast<int>(ParseInt(key, value));
    else if (key == "backtranslation_weight") c.backtranslation_weight = ParseDouble(key, value);
    else if (key == "backtranslation_items")
      c.backtranslation_items = static_cast<int>(ParseInt(key, value));
    else if (key == "backtranslation_crop_len")
      c.backtranslation_crop_len = static_cast<int>(ParseInt(key, value));
    else if (key == "backtranslation_temperature")
      c.backtranslation_temperature = ParseDouble(key, value);
    else if (key == "mixup") c.mixup = ParseBool(key, value);
    else if (key == "augment") c.augment = ParseBool(key, value);
    else if (key == "rng_seed") c.rng_seed = static_cast<std::uint64_t>(ParseInt(key, value));
    else if (key == "learning_rate") c.optimizer.learning_rate = ParseDouble(key, value);
    else if (key == "lr_decay") c.optimizer.epoch_decay = ParseDouble(key, value);
    else if (key == "adam_beta1") c.optimizer.beta1 = ParseDouble(key, value);
    else if (key == "adam_beta2") c.optimizer.beta2 = ParseDouble(key, value);
    else if (key == "adam_epsilon") c.optimizer.epsilon = ParseDouble(key, value);
    else if (key.rfind("model.", 0) == 0 && model_kv.count(key.substr(6)) &&
             key != "model.num_singers") {
      ParseInt(key, value);
      model_kv[key.substr(6)] = value;
    } else {
      BadKey(key, "unknown key");
    }
  }
  c.model = ModelSpec::from_kv(model_kv);
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  try {
    kv = read_kv_file(path);
  } catch (const Error& e) {
    Fail(ErrorKind::kValidation, e.what());
  }
  TrainConfig c = from_kv(kv);
  c.validate();
  return c;
}

// ---- steps -------------------------------------------------------------------

Vec<float> mixup_embedding(const Mat<float>& table, int j, int j_prime, double alpha) {
  if (j == j_prime) Fail(ErrorKind::kDomain, "mixup_embedding: the two singers must differ");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    Fail(ErrorKind::kDomain, "mixup_embedding: alpha must lie in [0, 1]");
  if (j < 0 || j_prime < 0 || j >= table.cols() || j_prime >= table.cols())
    Fail(ErrorKind::kDomain, "mixup_embedding: singer index out of range");
  const auto a = static_cast<float>(alpha);
  return a * table.col(j) + (1.0f - a) * table.col(j_prime);
}

Trainer::Trainer(TrainConfig config, int num_singers)
    : config_(std::move(config)), model_([&] {
        ModelSpec spec = config_.model;
        spec.num_singers = num_singers;
        return spec;
      }()) {
  config_.model.num_singers = num_singers;
  model_.init(config_.rng_seed);
  model_.project_embeddings();
  ae_opt_ = nn::Adam<float>(model_.params(), model_.autoencoder_ids(), config_.optimizer);
  conf_opt_ = nn::Adam<float>(model_.params(), model_.confusion_ids(), config_.optimizer);
  last_grads_ = model_.params().zeros_like();
}

Trainer::Trainer(TrainConfig config, Checkpoint checkpoint,
                 const std::optional<std::filesystem::path>& optimizer_state)
    : config_(std::move(config)), model_(std::move(checkpoint.model)) {
  config_.model = model_.spec();
  ae_opt_ = nn::Adam<float>(model_.params(), model_.autoencoder_ids(), config_.optimizer);
  conf_opt_ = nn::Adam<float>(model_.params(), model_.confusion_ids(), config_.optimizer);
  last_grads_ = model_.params().zeros_like();
  if (optimizer_state && std::filesystem::exists(*optimizer_state)) LoadOptimizerState(*optimizer_state);
}

void Trainer::set_epoch(int epoch) {
  ae_opt_.set_epoch(epoch);
  conf_opt_.set_epoch(epoch);
}

ConfusionStepResult Trainer::confusion_step(const std::vector<TrainingItem>& batch) {
  const std::size_t B = batch.size();
  std::vector<Grads<float>> per_item(B);
  std::vector<double> losses(B), correct(B);
  const float scale = 1.0f / static_cast<float>(B);
  parallel_for(B, [&](std::size_t i) {
    per_item[i] = model_.params().zeros_like();
    const auto& item = batch[i];
    const Mat<float> latent = model_.encode(RowOf(item.companded));
    ConfusionCache<float> cc;
    const Mat<float> clog = model_.classify_singer(latent, &cc);
    const int label[1] = {item.singer_index};
    Mat<float> dclog = Mat<float>::Zero(clog.rows(), 1);
    losses[i] = nn::softmax_cross_entropy<float>(clog, label, &dclog, scale);
    Eigen::Index best;
    clog.col(0).maxCoeff(&best);
    correct[i] = best == item.singer_index ? 1.0 : 0.0;
    // The encoder is frozen for this step: no latent gradient is requested.
    model_.classify_backward(cc, dclog.col(0), &per_item[i], nullptr);
  });
  last_grads_ = SumInOrder(per_item);
  conf_opt_.step(model_.params(), last_grads_);
  if (hook_) hook_(StepKind::kConfusion, model_);
  ConfusionStepResult r;
  for (std::size_t i = 0; i < B; ++i) {
    r.loss += losses[i] / B;
    r.accuracy += correct[i] / B;
  }
  return r;
}

StepLosses Trainer::autoencoder_step(const std::vector<TrainingItem>& batch) {
  const std::size_t B = batch.size();
  std::vector<Grads<float>> per_item(B);
  std::vector<ItemLoss> losses(B);
  const float scale = 1.0f / static_cast<float>(B);
  const auto lambda = static_cast<float>(config_.lambda);
  parallel_for(B, [&](std::size_t i) {
    per_item[i] = model_.params().zeros_like();
    losses[i] = ReconstructionItem(model_, batch[i].companded, batch[i].mulaw,
                                   batch[i].singer_index, true, lambda, scale, &per_item[i]);
  });
  last_grads_ = SumInOrder(per_item);
  ae_opt_.step(model_.params(), last_grads_);
  model_.project_embeddings();
  if (hook_) hook_(StepKind::kAutoencoder, model_);
  StepLosses r;
  for (const auto& l : losses) {
    r.reconstruction += l.reconstruction / B;
    r.adversarial += l.adversarial / B;
  }
  r.total = r.reconstruction - config_.lambda * r.adversarial;
  return r;
}

double Trainer::backtranslation_step(const std::vector<BacktranslationItem>& items) {
  const std::size_t B = items.size();
  if (B == 0) return 0.0;
  std::vector<Grads<float>> per_item(B);
  std::vector<double> losses(B);
  const float scale = static_cast<float>(config_.backtranslation_weight) / static_cast<float>(B);
  parallel_for(B, [&](std::size_t i) {
    per_item[i] = model_.params().zeros_like();
    const auto& item = items[i];
    losses[i] = ReconstructionItem(model_, companded_bin_centers(item.synthetic), item.source,
                                   item.source_singer, false, 0.0f, scale, &per_item[i])
                    .reconstruction;
  });
  last_grads_ = SumInOrder(per_item);
  ae_opt_.step(model_.params(), last_grads_);
  model_.project_embeddings();
  if (hook_) hook_(StepKind::kBacktranslation, model_);
  double mean = 0.0;
  for (double l : losses) mean += l / B;
  return mean;
}

StepLosses Trainer::autoencoder_objective(const std::vector<TrainingItem>& batch) const {
  StepLosses r;
  for (const auto& item : batch) {
    const ItemLoss l = ReconstructionItem(model_, item.companded, item.mulaw, item.singer_index,
                                          true, 0.0f, 1.0f, nullptr);
    r.reconstruction += l.reconstruction / batch.size();
    r.adversarial += l.adversarial / batch.size();
  }
  r.total = r.reconstruction - config_.lambda * r.adversarial;
  return r;
}

double Trainer::backtranslation_objective(const std::vector<BacktranslationItem>& items) const {
  double mean = 0.0;
  for (const auto& item : items)
    mean += ReconstructionItem(model_, companded_bin_centers(item.synthetic), item.source,
                               item.source_singer, false, 0.0f, 1.0f, nullptr)
                .reconstruction /
            items.size();
  return mean;
}

double Trainer::phase2_objective(const std::vector<TrainingItem>& batch,
                                 const std::vector<BacktranslationItem>& items) const {
  // One pass over every sample of both sets, accumulating the weighted terms.
  double total = 0.0;
  for (const auto& item : batch) {
    const ItemLoss l = ReconstructionItem(model_, item.companded, item.mulaw, item.singer_index,
                                          true, 0.0f, 1.0f, nullptr);
    total += (l.reconstruction - config_.lambda * l.adversarial) / batch.size();
  }
  for (const auto& item : items) {
    const ItemLoss l = ReconstructionItem(model_, companded_bin_centers(item.synthetic),
                                          item.source, item.source_singer, false, 0.0f, 1.0f,
                                          nullptr);
    total += config_.backtranslation_weight * l.reconstruction / items.size();
  }
  return total;
}

void Trainer::save_optimizer_state(const std::filesystem::path& path) const {
  std::vector<nn::Tensor> tensors;
  auto dump = [&](const char* tag, const nn::Adam<float>& opt) {
    auto& o = const_cast<nn::Adam<float>&>(opt);
    for (std::size_t i = 0; i < o.ids().size(); ++i) {
      const auto& name = model_.params().name(o.ids()[i]);
      tensors.push_back(nn::to_tensor(std::string(tag) + ".m." + name, o.first_moments()[i]));
      tensors.push_back(nn::to_tensor(std::string(tag) + ".v." + name, o.second_moments()[i]));
    }
    Mat<float> steps(1, 1);
    steps(0, 0) = static_cast<float>(o.steps());
    tensors.push_back(nn::to_tensor(std::string(tag) + ".steps", steps));
  };
  dump("ae", ae_opt_);
  dump("conf", conf_opt_);
  nn::write_tensors(path, tensors);
}

void Trainer::LoadOptimizerState(const std::filesystem::path& path) {
  const auto tensors = nn::read_tensors(path);
  std::map<std::string, const nn::Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  auto load = [&](const char* tag, nn::Adam<float>& o) {
    for (std::size_t i = 0; i < o.ids().size(); ++i) {
      const auto& name = model_.params().name(o.ids()[i]);
      auto m = by_name.find(std::string(tag) + ".m." + name);
      auto v = by_name.find(std::string(tag) + ".v." + name);
      if (m == by_name.end() || v == by_name.end())
        Fail(ErrorKind::kMalformedFile, path.string() + ": missing optimizer state for " + name);
      nn::assign_from(*m->second, o.first_moments()[i]);
      nn::assign_from(*v->second, o.second_moments()[i]);
    }
    auto s = by_name.find(std::string(tag) + ".steps");
    if (s != by_name.end() && !s->second->values.empty())
      o.set_steps(static_cast<long long>(s->second->values[0]));
  };
  load("ae", ae_opt_);
  load("conf", conf_opt_);
}

// ---- backtranslation set ----------------------------------------------------------

std::vector<BacktranslationItem> generate_backtranslation_set(
    const Corpus& corpus, const Model<float>& model, std::size_t n_items, std::size_t crop_len,
    std::uint64_t rng_seed, const BacktranslationOptions& options) {
  const int k = corpus.k();
  if (k < 2) Fail(ErrorKind::kValidation, "backtranslation needs at least 2 singers");
  check_batch_preconditions(corpus, crop_len, static_cast<std::size_t>(model.spec().hop()));
  std::vector<BacktranslationItem> items(n_items);
  const Mat<float>& table = model.params()[model.table_id()];
  parallel_for(n_items, [&](std::size_t i) {
    Rng rng(derive_seed(rng_seed, {i}));
    const TrainingItem source = draw_training_item(corpus, crop_len, rng, options.augment);
    const int j = source.singer_index;
    int other = static_cast<int>(uniform_index(rng, k - 1));
    if (other >= j) ++other;
    double alpha = options.mixup ? uniform01(rng) : 0.0;
    if (options.fixed_alpha) alpha = *options.fixed_alpha;
    const std::uint64_t gen_seed = rng();
    const Vec<float> u = mixup_embedding(table, j, other, alpha);
    BacktranslationItem& item = items[i];
    item.synthetic =
        convert_with_embedding(model, source.companded, u, options.temperature, gen_seed);
    item.source = source.mulaw;
    item.source_singer = j;
    item.other_singer = other;
    item.alpha = alpha;
  });
  return items;
}

// ---- full run -------------------------------------------------------------------

TrainResult train(const TrainConfig& config_in, const Corpus& corpus,
                  const std::filesystem::path& out_dir, bool resume,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  TrainConfig config = config_in;
  config.model.num_singers = corpus.k();
  config.validate();
  if (corpus.k() < 2)
    Fail(ErrorKind::kValidation, "training needs at least 2 singers (manifest has " +
                                     std::to_string(corpus.k()) + ")");
  if (corpus.sample_rate() != config.model.sample_rate)
    Fail(ErrorKind::kValidation, "corpus rate differs from model.sample_rate");
  const auto hop = static_cast<std::size_t>(config.model.hop());
  const std::size_t bt_crop =
      config.backtranslation_crop_len > 0 ? config.backtranslation_crop_len : config.crop_len;
  check_batch_preconditions(corpus, config.crop_len, hop);
  check_batch_preconditions(corpus, bt_crop, hop);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    Fail(ErrorKind::kIo, "cannot create output directory " + out_dir.string());

  TrainResult result;
  const auto metrics_path = out_dir / "metrics.csv";
  std::optional<Trainer> trainer;
  int start_epoch = 0;
  auto meta_for = [&](const Model<float>& m, int phase, int epoch) {
    Checkpoint ckpt{m, corpus.registry().ids(), phase, epoch, {}};
    return ckpt;
  };
  if (resume) {
    const auto latest = latest_checkpoint(out_dir);
    if (!latest)
      Fail(ErrorKind::kValidation, "--resume: no checkpoint found in " + out_dir.string());
    Checkpoint ckpt = load_checkpoint(*latest);
    if (ckpt.singer_ids != corpus.registry().ids())
      Fail(ErrorKind::kValidation, "--resume: checkpoint singers differ from the manifest");
    start_epoch = ckpt.epoch;
    trainer.emplace(config, std::move(ckpt), std::filesystem::path(latest->string() + ".opt"));
  } else {
    trainer.emplace(config, corpus.k());
    const auto stem = checkpoint_stem(out_dir, 0);
    save_checkpoint(meta_for(trainer->model(), 1, 0), stem);
    trainer->save_optimizer_state(stem.string() + ".opt");
    result.checkpoints.push_back(stem);
    std::ofstream csv(metrics_path, std::ios::trunc);
    if (!csv) Fail(ErrorKind::kIo, "cannot write " + metrics_path.string());
    csv << "epoch,phase,reconstruction,adversarial,confusion_loss,confusion_accuracy,"
           "backtranslation,learning_rate,max_embedding_norm,seconds\n";
  }

  const int total_epochs = config.phase1_epochs + config.phase2_epochs;
  const std::size_t bt_items = config.backtranslation_items > 0
                                   ? static_cast<std::size_t>(config.backtranslation_items)
                                   : corpus.num_train_clips();
  std::vector<BacktranslationItem> bt_set;
  for (int epoch = start_epoch + 1; epoch <= total_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const int phase = epoch <= config.phase1_epochs ? 1 : 2;
    trainer->set_epoch(epoch - 1);
    if (phase == 2) {
      const int into_phase = epoch - config.phase1_epochs - 1;
      if (bt_set.empty() || into_phase % config.mixup_refresh_epochs == 0) {
        BacktranslationOptions opts;
        opts.temperature = config.backtranslation_temperature;
        opts.mixup = config.mixup;
        opts.augment = config.augment;
        const int refresh_epoch =
            config.phase1_epochs + 1 + into_phase / config.mixup_refresh_epochs * config.mixup_refresh_epochs;
        bt_set = generate_backtranslation_set(corpus, trainer->model(), bt_items, bt_crop,
                                              derive_seed(config.rng_seed, {0xB7, static_cast<std::uint64_t>(refresh_epoch)}),
                                              opts);
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.phase = phase;
    double max_norm = 0.0;
    for (int step = 0; step < config.steps_per_epoch; ++step) {
      const auto batch =
          sample_batch(corpus, config.crop_len, config.batch_size,
                       derive_seed(config.rng_seed, {static_cast<std::uint64_t>(epoch),
                                                     static_cast<std::uint64_t>(step)}),
                       hop, config.augment);
      const auto conf = trainer->confusion_step(batch);
      const auto ae = trainer->autoencoder_step(batch);
      m.confusion_loss += conf.loss / config.steps_per_epoch;
      m.confusion_accuracy += conf.accuracy / config.steps_per_epoch;
      m.reconstruction += ae.reconstruction / config.steps_per_epoch;
      m.adversarial += ae.adversarial / config.steps_per_epoch;
      max_norm = std::max<double>(max_norm, trainer->model().max_embedding_norm());
      if (phase == 2) {
        Rng pick(derive_seed(config.rng_seed, {static_cast<std::uint64_t>(epoch),
                                               static_cast<std::uint64_t>(step), 0xB7}));
        std::vector<BacktranslationItem> sub;
        const std::size_t n = std::min<std::size_t>(config.batch_size, bt_set.size());
        for (std::size_t b = 0; b < n; ++b) sub.push_back(bt_set[uniform_index(pick, bt_set.size())]);
        m.backtranslation += trainer->backtranslation_step(sub) / config.steps_per_epoch;
        max_norm = std::max<double>(max_norm, trainer->model().max_embedding_norm());
      }
    }
    m.learning_rate = config.optimizer.learning_rate * std::pow(config.optimizer.epoch_decay, epoch - 1);
    m.max_embedding_norm = max_norm;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto stem = checkpoint_stem(out_dir, epoch);
    save_checkpoint(meta_for(trainer->model(), phase, epoch), stem);
    trainer->save_optimizer_state(stem.string() + ".opt");
    result.checkpoints.push_back(stem);
    std::ofstream csv(metrics_path, std::ios::app);
    if (!csv) Fail(ErrorKind::kIo, "cannot append to " + metrics_path.string());
    csv << std::setprecision(8) << m.epoch << "," << m.phase << "," << m.reconstruction << ","
        << m.adversarial << "," << m.confusion_loss << "," << m.confusion_accuracy << ","
        << m.backtranslation << "," << m.learning_rate << "," << m.max_embedding_norm << ","
        << m.seconds << "\n";
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace svc
