#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "grlforge/checkpoint.hpp"
#include "grlforge/commands.hpp"
#include "grlforge/dann.hpp"
#include "grlforge/datasets.hpp"
#include "grlforge/errors.hpp"
#include "grlforge/image.hpp"
#include "grlforge/metrics.hpp"
#include "grlforge/run_config.hpp"
#include "grlforge/synth.hpp"
#include "grlforge/tensor.hpp"

namespace py = pybind11;
using namespace grlforge;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> image_to_array(const Image& img) {
  py::array_t<double> out({img.height, img.width, img.channels});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size() * sizeof(double));
  return out;
}

Image array_to_image(const DoubleArray& arr) {
  if (arr.ndim() != 3)
    throw ShapeError("expected an array of shape (height, width, channels)");
  Image img(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)),
            static_cast<std::size_t>(arr.shape(2)));
  std::memcpy(img.pixels.data(), arr.data(), img.pixels.size() * sizeof(double));
  return img;
}

Tensor array_to_tensor(const DoubleArray& arr) {
  std::vector<std::size_t> shape(static_cast<std::size_t>(arr.ndim()));
  for (std::size_t i = 0; i < shape.size(); ++i)
    shape[i] = static_cast<std::size_t>(arr.shape(static_cast<py::ssize_t>(i)));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> tensor_to_array(const Tensor& t) {
  py::array_t<double> out(t.shape());
  std::memcpy(out.mutable_data(), t.data(), t.size() * sizeof(double));
  return out;
}

dann::GrlConfig::Mode grl_mode_from(const std::string& name) {
  if (name == "constant") return dann::GrlConfig::Mode::constant;
  if (name == "annealed") return dann::GrlConfig::Mode::annealed;
  throw ConfigError("grl mode must be 'constant' or 'annealed', got '" + name + "'");
}

py::dict report_to_dict(const eval::MetricsReport& report) {
  py::dict d;
  d["tp"] = report.counts.tp;
  d["fp"] = report.counts.fp;
  d["tn"] = report.counts.tn;
  d["fn"] = report.counts.fn;
  d["precision"] = report.precision;
  d["recall"] = report.recall;
  d["f1"] = report.f1;
  d["accuracy"] = report.accuracy;
  if (report.has_domain_accuracy) d["domain_accuracy"] = report.domain_accuracy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_grlforge, m) {
  m.doc() = "copy-move forgery synthesis and gradient-reversal domain adaptation";

  py::register_exception<Error>(m, "GrlforgeError", PyExc_RuntimeError);

  // ---- synthesis -----------------------------------------------------------

  py::class_<synth::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("size", &synth::SynthConfig::size)
      .def_readwrite("forged_fraction", &synth::SynthConfig::forged_fraction)
      .def_readwrite("height", &synth::SynthConfig::height)
      .def_readwrite("width", &synth::SynthConfig::width)
      .def_readwrite("channels", &synth::SynthConfig::channels)
      .def_readwrite("copy_move_prob", &synth::SynthConfig::copy_move_prob)
      .def_readwrite("rotation_min", &synth::SynthConfig::rotation_min)
      .def_readwrite("rotation_max", &synth::SynthConfig::rotation_max)
      .def_readwrite("scale_min", &synth::SynthConfig::scale_min)
      .def_readwrite("scale_max", &synth::SynthConfig::scale_max)
      .def_readwrite("resize_min", &synth::SynthConfig::resize_min)
      .def_readwrite("resize_max", &synth::SynthConfig::resize_max)
      .def_readwrite("blur_min", &synth::SynthConfig::blur_min)
      .def_readwrite("blur_max", &synth::SynthConfig::blur_max)
      .def_readwrite("region_min", &synth::SynthConfig::region_min)
      .def_readwrite("region_max", &synth::SynthConfig::region_max)
      .def_readwrite("min_separation", &synth::SynthConfig::min_separation)
      .def_readwrite("brightness_offset", &synth::SynthConfig::brightness_offset)
      .def_readwrite("domain", &synth::SynthConfig::domain)
      .def_readwrite("seed", &synth::SynthConfig::seed)
      .def_readwrite("inpaint_tol", &synth::SynthConfig::inpaint_tol)
      .def_readwrite("inpaint_max_iters", &synth::SynthConfig::inpaint_max_iters)
      .def("validate", &synth::SynthConfig::validate);

  py::class_<synth::RegionSpec>(m, "RegionSpec")
      .def(py::init<>())
      .def_readwrite("src_top", &synth::RegionSpec::src_top)
      .def_readwrite("src_left", &synth::RegionSpec::src_left)
      .def_readwrite("src_height", &synth::RegionSpec::src_height)
      .def_readwrite("src_width", &synth::RegionSpec::src_width)
      .def_readwrite("paste_top", &synth::RegionSpec::paste_top)
      .def_readwrite("paste_left", &synth::RegionSpec::paste_left);

  py::class_<synth::TransformParams>(m, "TransformParams")
      .def(py::init<>())
      .def_readwrite("rotation_deg", &synth::TransformParams::rotation_deg)
      .def_readwrite("scale", &synth::TransformParams::scale)
      .def_readwrite("resize", &synth::TransformParams::resize)
      .def_readwrite("blur_sigma", &synth::TransformParams::blur_sigma);

  m.def(
      "gen_base_image",
      [](std::uint64_t seed, std::size_t height, std::size_t width, std::size_t channels) {
        return image_to_array(synth::gen_base_image(seed, height, width, channels));
      },
      py::arg("seed"), py::arg("height") = 32, py::arg("width") = 32, py::arg("channels") = 3,
      "Deterministic procedural base image as a (height, width, channels) float array.");

  m.def(
      "apply_copy_move",
      [](const DoubleArray& image, const synth::RegionSpec& region,
         const synth::TransformParams& params) {
        synth::ForgedSample s = synth::apply_copy_move(array_to_image(image), region, params);
        return py::make_tuple(image_to_array(s.image), image_to_array(s.mask));
      },
      py::arg("image"), py::arg("region"), py::arg("params") = synth::TransformParams{},
      "Copy a region, transform it, paste it; returns (forged_image, mask).");

  m.def(
      "make_copy_move",
      [](const DoubleArray& image, std::uint64_t seed, const synth::SynthConfig& config) {
        synth::ForgedSample s = synth::make_copy_move(array_to_image(image), seed, config);
        return py::make_tuple(image_to_array(s.image), image_to_array(s.mask));
      },
      py::arg("image"), py::arg("seed"), py::arg("config") = synth::SynthConfig{},
      "Seeded copy-move with region and transform sampled from config ranges.");

  m.def(
      "inpaint_remove",
      [](const DoubleArray& image, const DoubleArray& mask, double tol,
         std::size_t max_iters) {
        synth::SynthConfig config;
        config.inpaint_tol = tol;
        config.inpaint_max_iters = max_iters;
        return image_to_array(
            synth::inpaint_remove(array_to_image(image), array_to_image(mask), config));
      },
      py::arg("image"), py::arg("mask"), py::arg("tol") = 1e-6,
      py::arg("max_iters") = 10000,
      "Diffusion fill of the masked region; mask is (height, width, 1).");

  // ---- gradient reversal ---------------------------------------------------

  m.def(
      "grl_forward",
      [](const DoubleArray& x) { return tensor_to_array(dann::grl_forward(array_to_tensor(x))); },
      py::arg("x"), "Identity forward pass of the reversal layer.");

  m.def(
      "grl_backward",
      [](const DoubleArray& grad, double lam) {
        return tensor_to_array(dann::grl_backward(array_to_tensor(grad), lam));
      },
      py::arg("grad"), py::arg("lam"), "Backward pass: -lam * grad, elementwise.");

  m.def(
      "lambda_at",
      [](const std::string& mode, double lambda0, double gamma, double progress) {
        dann::GrlConfig config;
        config.mode = grl_mode_from(mode);
        config.lambda0 = lambda0;
        config.gamma = gamma;
        return dann::lambda_at(config, progress);
      },
      py::arg("mode"), py::arg("lambda0") = 1.0, py::arg("gamma") = 10.0, py::arg("progress") = 0.0,
      "Scheduled lambda: lambda0 in constant mode, 2/(1+exp(-gamma*p)) - 1 in annealed mode.");

  // ---- run-level commands (same semantics as the CLI) ----------------------

  m.def(
      "run_synth",
      [](const std::string& config_path) { return cli::cmd_synth(cli::load_run_config(config_path)); },
      py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
      "Synthesize a corpus from a run-config JSON file; returns the exit code.");

  m.def(
      "run_train",
      [](const std::string& config_path) { return cli::cmd_train(cli::load_run_config(config_path)); },
      py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
      "Train from a run-config JSON file; returns the exit code.");

  m.def(
      "run_eval",
      [](const std::string& config_path) { return cli::cmd_eval(cli::load_run_config(config_path)); },
      py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
      "Evaluate a checkpoint from a run-config JSON file; returns the exit code.");

  m.def(
      "run_gradcheck",
      [](const std::string& config_path) {
        return cli::cmd_gradcheck(cli::load_run_config(config_path));
      },
      py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
      "Run the finite-difference gradient suite; returns the exit code.");

  m.def(
      "run_gradcheck", [] { return cli::cmd_gradcheck(cli::RunConfig{}); },
      py::call_guard<py::gil_scoped_release>(),
      "Run the finite-difference gradient suite with default settings.");

  m.def(
      "run_toy",
      [](const std::string& config_path) {
        return cli::cmd_reproduce_toy(cli::load_run_config(config_path));
      },
      py::arg("config_path"), py::call_guard<py::gil_scoped_release>(),
      "Run the two-domain comparison experiment; returns the exit code.");

  // ---- evaluation ----------------------------------------------------------

  m.def(
      "evaluate_checkpoint",
      [](const std::string& checkpoint_path, const std::string& manifest_path) {
        const io::Checkpoint ckpt = io::load_checkpoint(checkpoint_path);
        const io::Corpus corpus = io::load_corpus(manifest_path);
        const auto idx = io::all_indices(corpus.size());
        const io::Normalization* norm =
            ckpt.normalization.has_value() ? &*ckpt.normalization : nullptr;
        const Tensor images = io::images_to_tensor(corpus.images, idx, norm);
        const std::vector<int> labels = io::labels_of(corpus, idx);
        return report_to_dict(eval::evaluate(ckpt.model, images, labels));
      },
      py::arg("checkpoint_path"), py::arg("manifest_path"),
      "Load a checkpoint, score a manifest, return the metrics as a dict.");
}
