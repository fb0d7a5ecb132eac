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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "svc/audio.hpp"
#include "svc/checkpoint.hpp"
#include "svc/error.hpp"
#include "svc/eval.hpp"
#include "svc/inference.hpp"
#include "svc/model.hpp"
#include "svc/synthdata.hpp"
#include "svc/training.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

svc::AudioClip ToClip(const FloatArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw py::value_error("samples must be a 1-D array");
  svc::AudioClip c;
  c.sample_rate = sample_rate;
  c.samples.assign(samples.data(), samples.data() + samples.size());
  return c;
}

py::array_t<float> ToArray(const std::vector<float>& v) {
  py::array_t<float> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict EpochDict(const svc::EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["phase"] = m.phase;
  d["reconstruction"] = m.reconstruction;
  d["adversarial"] = m.adversarial;
  d["confusion_accuracy"] = m.confusion_accuracy;
  d["backtranslation"] = m.backtranslation;
  d["max_embedding_norm"] = m.max_embedding_norm;
  d["seconds"] = m.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_svc, m) {
  m.doc() = "Singing voice conversion core";

  // Error kinds map onto the closest builtin exception.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const svc::Error& e) {
      switch (e.kind()) {
        case svc::ErrorKind::kFileNotFound:
          PyErr_SetString(PyExc_FileNotFoundError, e.what());
          return;
        case svc::ErrorKind::kIo:
          PyErr_SetString(PyExc_OSError, e.what());
          return;
        default:
          PyErr_SetString(PyExc_ValueError, e.what());
          return;
      }
    }
  });

  m.def("mu_law_encode", [](const FloatArray& x) {
    py::array_t<std::uint8_t> out(x.size());
    auto* o = out.mutable_data();
    const float* in = x.data();
    for (py::ssize_t i = 0; i < x.size(); ++i) o[i] = svc::mu_law_encode_sample(in[i]);
    return out;
  }, py::arg("samples"), "8-bit mu-law indices of samples in [-1, 1].");
  m.def("mu_law_decode", [](const py::array_t<std::uint8_t, py::array::forcecast>& idx) {
    py::array_t<float> out(idx.size());
    auto* o = out.mutable_data();
    for (py::ssize_t i = 0; i < idx.size(); ++i)
      o[i] = static_cast<float>(svc::mu_law_decode_sample(idx.data()[i]));
    return out;
  }, py::arg("indices"));

  m.def("read_wav", [](const fs::path& path) {
    const svc::AudioClip c = svc::read_wav(path);
    return py::make_tuple(ToArray(c.samples), c.sample_rate);
  }, py::arg("path"), "Returns (samples, sample_rate).");
  m.def("write_wav", [](const fs::path& path, const FloatArray& samples, int sample_rate) {
    svc::write_wav(ToClip(samples, sample_rate), path);
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate"));

  m.def("receptive_field", [](int blocks, int layers, int kernel) {
    svc::DecoderSpec d;
    d.blocks = blocks;
    d.layers_per_block = layers;
    d.kernel_size = kernel;
    return svc::receptive_field(d);
  }, py::arg("blocks") = 4, py::arg("layers_per_block") = 10, py::arg("kernel_size") = 2);

  m.def("log_mel", [](const FloatArray& samples, int sample_rate) {
    const auto img = svc::extract_features(ToClip(samples, sample_rate));
    py::array_t<float> out({img.values.rows(), img.values.cols()});
    auto r = out.mutable_unchecked<2>();
    for (Eigen::Index b = 0; b < img.values.rows(); ++b)
      for (Eigen::Index f = 0; f < img.values.cols(); ++f) r(b, f) = img.values(b, f);
    return out;
  }, py::arg("samples"), py::arg("sample_rate"), "Log-mel image, bands x frames.");
  m.def("spectral_centroid", [](const FloatArray& samples, int sample_rate) {
    return svc::spectral_centroid(ToClip(samples, sample_rate));
  }, py::arg("samples"), py::arg("sample_rate"));

  m.def("make_synthetic_corpus",
        [](const fs::path& out_dir, int songs, double duration, int sample_rate, std::uint64_t seed) {
          svc::SynthCorpusOptions o;
          o.songs_per_singer = songs;
          o.duration_s = duration;
          o.sample_rate = sample_rate;
          o.seed = seed;
          py::gil_scoped_release release;
          return svc::make_synthetic_manifest(svc::default_profiles(), out_dir, o);
        },
        py::arg("out_dir"), py::arg("songs") = 4, py::arg("duration") = 30.0,
        py::arg("sample_rate") = 16000, py::arg("seed") = 7,
        "Writes the default two-singer corpus; returns the manifest path.");

  m.def("train",
        [](const fs::path& manifest, const std::map<std::string, std::string>& config,
           const fs::path& out_dir, bool resume) {
          svc::TrainConfig cfg = svc::TrainConfig::from_kv(config);
          cfg.validate();
          py::list epochs;
          {
            py::gil_scoped_release release;
            svc::Corpus corpus(svc::load_manifest(manifest), cfg.model.sample_rate);
            const auto result = svc::train(cfg, corpus, out_dir, resume);
            py::gil_scoped_acquire acquire;
            for (const auto& e : result.epochs) epochs.append(EpochDict(e));
          }
          return epochs;
        },
        py::arg("manifest"), py::arg("config"), py::arg("out_dir"), py::arg("resume") = false,
        "Trains with key=value config entries; returns per-epoch metrics.");

  m.def("convert",
        [](const FloatArray& samples, int sample_rate, const fs::path& checkpoint,
           const std::string& singer, double temperature, std::uint64_t seed) {
          const svc::AudioClip in = ToClip(samples, sample_rate);
          svc::AudioClip out;
          {
            py::gil_scoped_release release;
            const svc::Checkpoint ckpt = svc::load_checkpoint(checkpoint);
            out = svc::convert(in, singer, ckpt, temperature, seed);
          }
          return ToArray(out.samples);
        },
        py::arg("samples"), py::arg("sample_rate"), py::arg("checkpoint"), py::arg("singer"),
        py::arg("temperature") = 1.0, py::arg("seed") = 1);

  m.def("evaluate",
        [](const fs::path& manifest, const fs::path& checkpoint, const fs::path& report,
           const std::string& mode, double segment_seconds, std::uint64_t seed, int id_steps,
           int id_crop_frames) {
          if (mode != "conversion" && mode != "reconstruction")
            throw py::value_error("mode must be 'conversion' or 'reconstruction'");
          svc::EvaluateOptions o;
          o.manifest = manifest;
          o.checkpoint = checkpoint;
          o.report = report;
          o.mode = mode == "conversion" ? svc::EvalMode::kConversion : svc::EvalMode::kReconstruction;
          o.segment_seconds = segment_seconds;
          o.seed = seed;
          o.identifier.steps = id_steps;
          o.identifier.crop_frames = id_crop_frames;
          svc::EvalSummary s;
          {
            py::gil_scoped_release release;
            s = svc::evaluate(o);
          }
          py::dict d;
          d["clips"] = s.rows.size();
          d["top1_accuracy"] = s.top1_accuracy;
          d["oracle_accuracy"] = s.oracle_accuracy ? py::cast(*s.oracle_accuracy) : py::none();
          d["mean_correlation"] = s.mean_correlation ? py::cast(*s.mean_correlation) : py::none();
          return d;
        },
        py::arg("manifest"), py::arg("checkpoint"), py::arg("report"),
        py::arg("mode") = "conversion", py::arg("segment_seconds") = 0.0, py::arg("seed") = 1,
        py::arg("id_steps") = 300, py::arg("id_crop_frames") = 64);
}
