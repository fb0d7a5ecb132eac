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

#include <doctest.h>

#include <fstream>

#include "gradient_suite.hpp"
#include "svc/error.hpp"
#include "svc/synthdata.hpp"
#include "svc/training.hpp"
#include "test_util.hpp"
#include "training_checks.hpp"

using namespace svc;
using namespace svc::testing;

namespace {

Corpus TinyCorpus(const TempDir& dir) {
  SynthCorpusOptions o;
  o.songs_per_singer = 3;
  o.duration_s = 1.0;
  o.sample_rate = 8000;
  return Corpus(load_manifest(make_synthetic_manifest(default_profiles(), dir.path(), o)), 8000);
}

TrainConfig TinyConfig() {
  TrainConfig c;
  c.model = tiny_spec();
  c.model.encoder.pool_kernel = c.model.encoder.pool_stride = 50;
  c.crop_len = 400;
  c.batch_size = 2;
  c.steps_per_epoch = 2;
  c.phase1_epochs = 1;
  c.phase2_epochs = 1;
  c.backtranslation_items = 2;
  c.optimizer.learning_rate = 1e-2;
  return c;
}

ErrorKind KindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("config: kv roundtrip and validation messages") {
  TrainConfig c = TinyConfig();
  c.lambda = 0.25;
  c.mixup = false;
  const TrainConfig back = TrainConfig::from_kv(c.to_kv());
  CHECK(back.to_kv() == c.to_kv());
  CHECK(back.lambda == 0.25);
  CHECK_FALSE(back.mixup);

  TrainConfig bad = TinyConfig();
  bad.crop_len = 401;
  try {
    bad.validate();
    FAIL("crop_len not rejected");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("crop_len") != std::string::npos);
  }
  bad = TinyConfig();
  bad.lambda = -1;
  CHECK(KindOf([&] { bad.validate(); }) == ErrorKind::kValidation);
  CHECK(KindOf([] { TrainConfig::from_kv({{"nonsense", "1"}}); }) == ErrorKind::kValidation);
  CHECK(KindOf([] { TrainConfig::from_kv({{"batch_size", "eight"}}); }) == ErrorKind::kValidation);
}

TEST_CASE("config: file with comments") {
  TempDir dir("train");
  std::ofstream(dir / "c.cfg") << "# comment\nlambda = 0.5\nmodel.sample_rate=8000\n";
  const TrainConfig c = TrainConfig::from_file(dir / "c.cfg");
  CHECK(c.lambda == 0.5);
  CHECK(c.model.sample_rate == 8000);
  CHECK(KindOf([&] { TrainConfig::from_file(dir / "missing.cfg"); }) == ErrorKind::kValidation);
}

TEST_CASE("mixup embedding is the convex combination") {
  nn::Mat<float> table(2, 3);
  table << 1, 0, 0.5f, 0, 1, -0.5f;
  const auto u = mixup_embedding(table, 0, 1, 0.25);
  CHECK(u(0) == doctest::Approx(0.25));
  CHECK(u(1) == doctest::Approx(0.75));
  CHECK((mixup_embedding(table, 2, 0, 1.0) - table.col(2)).norm() == 0.0f);
  CHECK((mixup_embedding(table, 2, 0, 0.0) - table.col(0)).norm() == 0.0f);
  CHECK_THROWS_AS(mixup_embedding(table, 1, 1, 0.5), Error);
  CHECK_THROWS_AS(mixup_embedding(table, 0, 1, 1.5), Error);
}

TEST_CASE("frozen groups stay bit-identical in every step kind") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  Trainer trainer(TinyConfig(), corpus.k());
  const FreezeReport r = audit_frozen_parameters(trainer, corpus, 3, 400, 2, 2, 11);
  for (const auto& msg : r.messages) INFO(msg);
  CHECK(r.steps == 9);
  CHECK(r.frozen_violations == 0);
  CHECK(r.inert_steps == 0);
  CHECK(r.ok());
}

TEST_CASE("embedding table stays inside the unit ball") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  TrainConfig c = TinyConfig();
  c.optimizer.learning_rate = 0.1;  // large steps push rows outward
  Trainer trainer(c, corpus.k());
  const BallReport r = run_embedding_ball(trainer, corpus, 100, 10, 400, 2, 5);
  CHECK(r.steps == 100);
  CHECK(r.max_norm <= 1.0 + 1e-6);
  CHECK(r.max_norm > 0.9);  // the constraint is actually active
}

TEST_CASE("adversarial term enters with a minus sign") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  TrainConfig c = TinyConfig();
  c.lambda = 0.5;
  Trainer trainer(c, corpus.k());
  const auto batch = sample_batch(corpus, 400, 2, 3, 50);
  const StepLosses l = trainer.autoencoder_objective(batch);
  CHECK(l.total == doctest::Approx(l.reconstruction - 0.5 * l.adversarial));
  CHECK(l.reconstruction > 0.0);
  CHECK(l.adversarial > 0.0);
}

TEST_CASE("backtranslation set: labels, alpha range and determinism") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  Trainer trainer(TinyConfig(), corpus.k());
  const auto a = generate_backtranslation_set(corpus, trainer.model(), 6, 400, 9);
  const auto b = generate_backtranslation_set(corpus, trainer.model(), 6, 400, 9);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].synthetic.indices == b[i].synthetic.indices);
    CHECK(a[i].synthetic.size() == 400);
    CHECK(a[i].source.size() == 400);
    CHECK(a[i].source_singer != a[i].other_singer);
    CHECK(a[i].alpha >= 0.0);
    CHECK(a[i].alpha <= 1.0);
  }
  BacktranslationOptions no_mix;
  no_mix.mixup = false;
  for (const auto& item : generate_backtranslation_set(corpus, trainer.model(), 4, 400, 9, no_mix))
    CHECK(item.alpha == 0.0);
}

TEST_CASE("phase-II objective equals the sum of its terms") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  TrainConfig c = TinyConfig();
  c.lambda = 0.3;
  c.backtranslation_weight = 0.7;
  Trainer trainer(c, corpus.k());
  const auto batch = sample_batch(corpus, 400, 2, 4, 50);
  const auto items = generate_backtranslation_set(corpus, trainer.model(), 3, 400, 4);
  const double whole = trainer.phase2_objective(batch, items);
  const double parts = trainer.autoencoder_objective(batch).total +
                       0.7 * trainer.backtranslation_objective(items);
  CHECK(whole == doctest::Approx(parts).epsilon(1e-9));
}

TEST_CASE("train: deterministic, resumable, writes checkpoints and metrics") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  TrainConfig c = TinyConfig();
  c.phase1_epochs = 2;
  c.phase2_epochs = 1;
  const auto full = train(c, corpus, dir / "a");
  REQUIRE(full.epochs.size() == 3);
  CHECK(full.epochs[2].phase == 2);
  CHECK(full.checkpoints.size() == 4);
  for (const auto& e : full.epochs) CHECK(e.max_embedding_norm <= 1.0 + 1e-6);
  const auto again = train(c, corpus, dir / "b");
  const Checkpoint ca = load_checkpoint(full.checkpoints.back());
  const Checkpoint cb = load_checkpoint(again.checkpoints.back());
  for (std::size_t i = 0; i < ca.model.params().size(); ++i)
    CHECK(BitIdentical(ca.model.params()[int(i)], cb.model.params()[int(i)]));

  // Stop after one epoch, then resume to the end. The backtranslation set is
  // regenerated at the start of phase II in both runs, so the result matches.
  TrainConfig first = c;
  first.phase1_epochs = 1;
  first.phase2_epochs = 0;
  train(first, corpus, dir / "c");
  const auto resumed = train(c, corpus, dir / "c", true);
  CHECK(resumed.epochs.size() == 2);
  CHECK(resumed.epochs.front().epoch == 2);
  const Checkpoint cc = load_checkpoint(resumed.checkpoints.back());
  for (std::size_t i = 0; i < ca.model.params().size(); ++i)
    CHECK(BitIdentical(ca.model.params()[int(i)], cc.model.params()[int(i)]));

  std::ifstream csv(dir / "c" / "metrics.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 4);  // header + 3 epochs
  CHECK(KindOf([&] { train(c, corpus, dir / "empty", true); }) == ErrorKind::kValidation);
}

TEST_CASE("train: precondition errors") {
  TempDir dir("train");
  const Corpus corpus = TinyCorpus(dir);
  TrainConfig c = TinyConfig();
  c.model.sample_rate = 16000;
  CHECK(KindOf([&] { train(c, corpus, dir / "x"); }) == ErrorKind::kValidation);
  c = TinyConfig();
  c.crop_len = 50 * 1000;  // longer than any clip
  CHECK(KindOf([&] { train(c, corpus, dir / "y"); }) == ErrorKind::kValidation);
}
