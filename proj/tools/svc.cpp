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

// Command-line front end: synth, train, convert, evaluate, augment.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 runtime
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "svc/augment.hpp"
#include "svc/checkpoint.hpp"
#include "svc/dataset.hpp"
#include "svc/error.hpp"
#include "svc/eval.hpp"
#include "svc/inference.hpp"
#include "svc/synthdata.hpp"
#include "svc/training.hpp"

namespace fs = std::filesystem;

namespace {

int ExitCodeFor(const svc::Error& e) {
  return e.kind() == svc::ErrorKind::kIo ? 3 : 2;
}

int RunSynth(const std::string& profiles_path, const std::string& out, int songs,
             double duration, int rate, std::uint64_t seed) {
  const auto profiles =
      profiles_path.empty() ? svc::default_profiles() : svc::load_profiles(profiles_path);
  svc::SynthCorpusOptions opts;
  opts.songs_per_singer = songs;
  opts.duration_s = duration;
  opts.sample_rate = rate;
  opts.seed = seed;
  if (!(duration > 0.0)) svc::Fail(svc::ErrorKind::kValidation, "--duration must be positive");
  std::cout << svc::make_synthetic_manifest(profiles, out, opts).string() << "\n";
  return 0;
}

int RunTrain(const std::string& manifest, const std::string& config_path, const std::string& out,
             bool resume) {
  svc::TrainConfig config =
      config_path.empty() ? svc::TrainConfig{} : svc::TrainConfig::from_file(config_path);
  config.validate();
  svc::Corpus corpus(svc::load_manifest(manifest), config.model.sample_rate);
  const auto result = svc::train(config, corpus, out, resume, [](const svc::EpochMetrics& m) {
    std::printf("epoch %d phase %d recon %.4f adv %.4f conf_acc %.3f bt %.4f (%.1fs)\n", m.epoch,
                m.phase, m.reconstruction, m.adversarial, m.confusion_accuracy,
                m.backtranslation, m.seconds);
    std::fflush(stdout);
  });
  if (!result.checkpoints.empty())
    std::cout << "last checkpoint: " << result.checkpoints.back().string() << "\n";
  return 0;
}

int RunConvert(const std::string& input, const std::string& checkpoint, const std::string& singer,
               const std::string& output, std::uint64_t seed, double temperature) {
  const svc::Checkpoint ckpt = svc::load_checkpoint(checkpoint);
  ckpt.singer_index(singer);  // fail early with the list of known ids
  const svc::AudioClip clip = svc::read_wav(input);
  svc::write_wav(svc::convert(clip, singer, ckpt, temperature, seed), output);
  return 0;
}

int RunEvaluate(const svc::EvaluateOptions& opts) {
  const auto summary = svc::evaluate(opts);
  std::printf("%s top1 %.4f (%zu clips)", svc::eval_mode_name(opts.mode), summary.top1_accuracy,
              summary.rows.size());
  if (summary.oracle_accuracy) std::printf(" oracle %.4f", *summary.oracle_accuracy);
  if (summary.mean_correlation) std::printf(" correlation %.4f", *summary.mean_correlation);
  std::printf("\n");
  return 0;
}

int RunAugment(const std::string& input, const std::string& out_dir) {
  const svc::AudioClip clip = svc::read_wav(input);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) svc::Fail(svc::ErrorKind::kIo, "cannot create " + out_dir);
  const auto set = svc::augment(clip, 0);
  const std::string stem = fs::path(input).stem().string();
  for (int v = 0; v < 4; ++v) {
    const auto variant = static_cast<svc::Variant>(v);
    const fs::path path =
        fs::path(out_dir) / (stem + "_" + std::string(svc::variant_name(variant)) + ".wav");
    svc::write_wav(set[variant], path);
    std::cout << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised singing voice conversion"};
  app.require_subcommand(1);

  std::string profiles, synth_out;
  int songs = 4, synth_rate = svc::kDefaultSampleRate;
  double duration = 30.0;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-singer corpus");
  synth->add_option("--profiles", profiles, "JSON profile list (default: dark + bright)");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--songs", songs, "Songs per singer")->capture_default_str();
  synth->add_option("--duration", duration, "Song length in seconds")->capture_default_str();
  synth->add_option("--sample-rate", synth_rate, "Sample rate in Hz")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Melody seed")->capture_default_str();

  std::string manifest, config, train_out;
  bool resume = false;
  auto* train = app.add_subcommand("train", "Train the conversion model");
  train->add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
  train->add_option("--config", config, "TrainConfig key=value file");
  train->add_option("--out", train_out, "Output directory for checkpoints")->required();
  train->add_flag("--resume", resume, "Continue from the latest checkpoint in --out");

  std::string input, checkpoint, singer, output;
  std::uint64_t convert_seed = 1;
  double temperature = 1.0;
  auto* convert = app.add_subcommand("convert", "Convert a WAV file to another singer");
  convert->add_option("--input", input, "Input WAV")->required();
  convert->add_option("--checkpoint", checkpoint, "Checkpoint stem or file")->required();
  convert->add_option("--singer", singer, "Target singer id")->required();
  convert->add_option("--output", output, "Output WAV")->required();
  convert->add_option("--seed", convert_seed, "Sampling seed")->capture_default_str();
  convert->add_option("--temperature", temperature, "Sampling temperature (0 = argmax)")
      ->capture_default_str();

  svc::EvaluateOptions eval_opts;
  std::string mode = "conversion";
  auto* evaluate = app.add_subcommand("evaluate", "Identification accuracy of converted clips");
  evaluate->add_option("--manifest", eval_opts.manifest, "Dataset manifest (JSON)")->required();
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint stem or file")
      ->required();
  evaluate->add_option("--mode", mode, "reconstruction or conversion")
      ->check(CLI::IsMember({"reconstruction", "conversion"}))
      ->capture_default_str();
  evaluate->add_option("--report", eval_opts.report, "Report CSV path")->required();
  evaluate->add_option("--profiles", eval_opts.profiles,
                       "Profile JSON for the centroid oracle (default: next to the manifest)");
  evaluate->add_option("--seed", eval_opts.seed, "Sampling and identifier seed")
      ->capture_default_str();
  evaluate->add_option("--temperature", eval_opts.temperature, "Sampling temperature")
      ->capture_default_str();
  evaluate->add_option("--segment-seconds", eval_opts.segment_seconds,
                       "Split validation clips into segments of this length (0 = whole clips)")
      ->capture_default_str();
  evaluate->add_option("--id-steps", eval_opts.identifier.steps, "Identifier training steps")
      ->capture_default_str();
  evaluate->add_option("--id-crop-frames", eval_opts.identifier.crop_frames,
                       "Identifier training crop in feature frames")
      ->capture_default_str();

  std::string aug_input, aug_out;
  auto* aug = app.add_subcommand("augment", "Write the four augmentation variants of a WAV");
  aug->add_option("--input", aug_input, "Input WAV")->required();
  aug->add_option("--out", aug_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) return RunSynth(profiles, synth_out, songs, duration, synth_rate, synth_seed);
    if (*train) return RunTrain(manifest, config, train_out, resume);
    if (*convert) return RunConvert(input, checkpoint, singer, output, convert_seed, temperature);
    if (*evaluate) {
      eval_opts.mode = mode == "reconstruction" ? svc::EvalMode::kReconstruction
                                                : svc::EvalMode::kConversion;
      return RunEvaluate(eval_opts);
    }
    if (*aug) return RunAugment(aug_input, aug_out);
  } catch (const svc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
