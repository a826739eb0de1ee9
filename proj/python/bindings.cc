// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "dynfilt/cost.h"
#include "dynfilt/dynfilter.h"
#include "dynfilt/errors.h"
#include "dynfilt/evalkit.h"
#include "dynfilt/feature_io.h"
#include "dynfilt/features.h"
#include "dynfilt/gradcheck.h"
#include "dynfilt/random.h"
#include "dynfilt/wav.h"

namespace py = pybind11;

namespace dynfilt {
namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> ToVector(const Array& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

Waveform ToWave(const Array& samples, int sample_rate_hz) {
  if (samples.ndim() != 1) throw DimensionError("expected a 1-D sample array");
  Waveform w;
  w.samples = ToVector(samples);
  w.sample_rate_hz = sample_rate_hz;
  return w;
}

Array ToArray(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array ToArray(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  return ToArray(std::vector<double>(t.data().begin(), t.data().end()), shape);
}

Array FeatureArray(const TFFeature& f) {
  return ToArray(f.values, {static_cast<py::ssize_t>(f.bins), static_cast<py::ssize_t>(f.frames)});
}

Tensor ToTensor(const Array& a) {
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<std::size_t>(a.shape(i)));
  return Tensor::FromData(shape, ToVector(a));
}

std::vector<Trial> ToTrials(const Array& scores, const std::vector<bool>& is_target) {
  if (static_cast<std::size_t>(scores.size()) != is_target.size()) {
    throw MetricError("scores and labels differ in length");
  }
  std::vector<Trial> trials;
  for (std::size_t i = 0; i < is_target.size(); ++i) trials.push_back({scores.data()[i], is_target[i]});
  return trials;
}

FrontEndConfig MakeFrontEndConfig(std::size_t freq_bins, std::size_t chunks, bool fc_bias) {
  FrontEndConfig cfg;
  cfg.freq_bins = freq_bins;
  cfg.chunks = chunks;
  cfg.fc_bias = fc_bias;
  return cfg;
}

// Seeded front-end with fixed parameters, for inference from Python.
class PyFrontEnd {
 public:
  PyFrontEnd(std::uint64_t seed, std::size_t freq_bins, std::size_t chunks, bool fc_bias)
      : cfg_(MakeFrontEndConfig(freq_bins, chunks, fc_bias)) {
    Rng rng(seed);
    params_ = InitFrontEndParams(cfg_, rng);
  }

  py::dict Forward(const Array& x) const {
    if (x.ndim() != 2) throw DimensionError("expected a [F, T] array");
    const FrontEndOutput out = RunFrontEnd(ToTensor(x), params_, cfg_);
    py::dict d;
    d["output"] = ToArray(out.output);
    d["pixel_weights"] = ToArray(out.kernel.pixel_weights);
    d["kernel_weights"] = ToArray(out.kernel.kernel_weights);
    return d;
  }

  py::dict Parameters() const {
    py::dict d;
    for (const NamedTensor& nt : params_.Named()) d[py::str(nt.name)] = ToArray(nt.tensor);
    return d;
  }

  std::size_t ParameterCount() const {
    std::size_t n = 0;
    for (const NamedTensor& nt : params_.Named()) n += nt.tensor.size();
    return n;
  }

 private:
  FrontEndConfig cfg_;
  FrontEndParams params_;
};

py::dict CostDict(const CostReport& r) {
  py::list blocks;
  for (const BlockCost& b : r.blocks) {
    py::dict d;
    d["name"] = b.name;
    d["params"] = b.params;
    d["flops"] = b.flops;
    blocks.append(d);
  }
  py::dict d;
  d["blocks"] = blocks;
  d["total_params"] = r.total_params;
  d["total_flops"] = r.total_flops;
  d["convention"] = r.convention;
  d["text"] = r.ToText();
  return d;
}

}  // namespace
}  // namespace dynfilt

PYBIND11_MODULE(_dynfilt, m) {
  using namespace dynfilt;
  m.doc() = "Dynamic filter front-end, features and evaluation metrics";

  py::register_exception<Error>(m, "Error");

  m.def(
      "mfcc",
      [](const Array& samples, int sample_rate_hz) {
        return FeatureArray(Mfcc(ToWave(samples, sample_rate_hz), KeywordSpottingConfig()));
      },
      py::arg("samples"), py::arg("sample_rate_hz") = 16000,
      "40 MFCCs from 30 ms windows every 10 ms over 64 mel bands, shape [40, T].");
  m.def(
      "logmel",
      [](const Array& samples, int sample_rate_hz) {
        return FeatureArray(LogMel(ToWave(samples, sample_rate_hz), SpeakerVerificationConfig()));
      },
      py::arg("samples"), py::arg("sample_rate_hz") = 16000,
      "40 log-mel bins from 25 ms windows every 10 ms, shape [40, T].");

  py::class_<PyFrontEnd>(m, "FrontEnd")
      .def(py::init<std::uint64_t, std::size_t, std::size_t, bool>(), py::arg("seed") = 0,
           py::arg("freq_bins") = 40, py::arg("chunks") = 2, py::arg("fc_bias") = false)
      .def("__call__", &PyFrontEnd::Forward, py::arg("x"),
           "Returns output, pixel_weights and kernel_weights for a [F, T] feature.")
      .def("parameters", &PyFrontEnd::Parameters)
      .def_property_readonly("parameter_count", &PyFrontEnd::ParameterCount);

  m.def(
      "eer",
      [](const Array& scores, const std::vector<bool>& is_target) {
        return Eer(ToTrials(scores, is_target));
      },
      py::arg("scores"), py::arg("is_target"));
  m.def(
      "min_dcf",
      [](const Array& scores, const std::vector<bool>& is_target, double p_target, double c_miss,
         double c_fa) {
        return MinDcf(ToTrials(scores, is_target), {p_target, c_miss, c_fa});
      },
      py::arg("scores"), py::arg("is_target"), py::arg("p_target") = 0.05,
      py::arg("c_miss") = 1.0, py::arg("c_fa") = 1.0);

  m.def(
      "mix_at_snr",
      [](const Array& speech, const Array& noise, double snr_db, std::uint64_t seed,
         int sample_rate_hz) {
        const MixResult r = MixAtSnr(ToWave(speech, sample_rate_hz),
                                     ToWave(noise, sample_rate_hz), {snr_db, seed});
        py::dict d;
        d["mixed"] = ToArray(r.mixed.samples, {static_cast<py::ssize_t>(r.mixed.samples.size())});
        d["gain"] = r.gain;
        d["peak_scale"] = r.peak_scale;
        d["noise_offset"] = r.noise_offset;
        return d;
      },
      py::arg("speech"), py::arg("noise"), py::arg("snr_db"), py::arg("seed") = 0,
      py::arg("sample_rate_hz") = 16000);

  m.def(
      "account",
      [](std::size_t chunks, std::size_t frames, bool fc_bias) {
        return CostDict(AccountFrontEnd(MakeFrontEndConfig(40, chunks, fc_bias), frames));
      },
      py::arg("chunks") = 2, py::arg("frames") = 98, py::arg("fc_bias") = false);

  m.def(
      "gradcheck",
      [](std::uint64_t seed, std::size_t frames) {
        GradcheckOptions o;
        o.seed = seed;
        o.frames = frames;
        const GradcheckReport r = RunGradcheck(o);
        py::dict worst;
        for (const TensorCheck& t : r.tensors) worst[py::str(t.name)] = t.max_rel_error;
        py::dict d;
        d["passed"] = r.passed();
        d["max_rel_error"] = worst;
        d["report"] = r.ToText();
        return d;
      },
      py::arg("seed") = 0, py::arg("frames") = 98);

  m.def(
      "write_feature_file",
      [](const std::filesystem::path& path, const Array& values, const std::string& kind) {
        if (values.ndim() != 2) throw DimensionError("expected a [F, T] array");
        if (kind != "mfcc" && kind != "logmel") throw ContractError("kind must be mfcc or logmel");
        TFFeature f;
        f.bins = static_cast<std::size_t>(values.shape(0));
        f.frames = static_cast<std::size_t>(values.shape(1));
        f.values = ToVector(values);
        f.kind = kind == "mfcc" ? FeatureKind::kMfcc : FeatureKind::kLogMel;
        WriteFeatureFile(path, f);
      },
      py::arg("path"), py::arg("values"), py::arg("kind") = "mfcc");
  m.def(
      "read_feature_file",
      [](const std::filesystem::path& path) {
        const TFFeature f = ReadFeatureFile(path);
        return py::make_tuple(FeatureArray(f), f.kind == FeatureKind::kMfcc ? "mfcc" : "logmel");
      },
      py::arg("path"));
  m.def(
      "read_wav",
      [](const std::filesystem::path& path) {
        const Waveform w = ReadWav(path);
        return py::make_tuple(
            ToArray(w.samples, {static_cast<py::ssize_t>(w.samples.size())}), w.sample_rate_hz);
      },
      py::arg("path"));
  m.def(
      "write_wav",
      [](const std::filesystem::path& path, const Array& samples, int sample_rate_hz) {
        WriteWav(path, ToWave(samples, sample_rate_hz));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate_hz") = 16000);
}
