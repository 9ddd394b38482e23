// Python bindings: numpy in, numpy out. Labels are uint8 (H, W); images are
// float32 (3, H, W) in [0, 1].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mcgan/cli/commands.hpp"
#include "mcgan/core/error.hpp"
#include "mcgan/data/augment.hpp"
#include "mcgan/data/scene.hpp"
#include "mcgan/metrics/metrics.hpp"
#include "mcgan/model/losses.hpp"
#include "mcgan/train/checkpoint.hpp"
#include "mcgan/train/trainer.hpp"

namespace py = pybind11;
using namespace mcgan;

namespace {

using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using ImageArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

data::LabelMap to_label(const LabelArray& a) {
  if (a.ndim() != 2) throw ShapeError("label array must be (H, W)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  data::LabelMap m(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
  m.validate();
  return m;
}

LabelArray from_label(const data::LabelMap& m) {
  LabelArray a({m.height(), m.width()});
  std::copy(m.ids().begin(), m.ids().end(), a.mutable_data());
  return a;
}

data::RgbImage to_image(const ImageArray& a) {
  if (a.ndim() != 3 || a.shape(0) != 3) throw ShapeError("image array must be (3, H, W)");
  data::RgbImage img(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), img.data().begin());
  return img;
}

ImageArray from_image(const data::RgbImage& img) {
  ImageArray a({3, img.height(), img.width()});
  std::copy(img.data().begin(), img.data().end(), a.mutable_data());
  return a;
}

nn::Var<double> to_var(const DoubleArray& a) {
  nn::Shape shape(a.shape(), a.shape() + a.ndim());
  return nn::Var<double>::constant(nn::Tensor<double>(shape, std::vector<double>(a.data(), a.data() + a.size())));
}

py::dict report_dict(const metrics::MetricsReport& r) { return py::module_::import("json").attr("loads")(r.to_json().dump()); }

data::Transform parse_transform(const std::string& kind, double degrees) {
  if (kind == "mirror") return data::Transform::mirror();
  if (kind == "flip") return data::Transform::flip();
  if (kind == "rotate") return data::Transform::rotate(degrees);
  throw ConfigError("unknown transform '" + kind + "'");
}

class Model {
 public:
  explicit Model(const std::filesystem::path& checkpoint) : state_(train::load_checkpoint(checkpoint)) {}

  ImageArray generate(const LabelArray& label) const { return from_image(train::infer_image(state_.gen, to_label(label))); }
  LabelArray segment(const LabelArray& label) const {
    return from_label(data::classify_pixels(train::infer_image(state_.gen, to_label(label))));
  }
  std::int64_t step() const { return state_.step; }
  int epoch() const { return state_.epoch; }
  std::pair<int, int> size() const { return {state_.gen.config.height, state_.gen.config.width}; }

 private:
  train::TrainState state_;
};

}  // namespace

PYBIND11_MODULE(_mcgan, m) {
  m.doc() = "Rail-track scene generation and segmentation metrics";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_OSError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "synth_scene",
      [](std::uint64_t seed, int height, int width, py::object spec) {
        data::SceneSpec s = spec.is_none() ? data::random_scene_spec(seed, width, height) : data::SceneSpec{};
        if (!spec.is_none()) {
          auto d = spec.cast<py::dict>();
          s.width = width;
          s.height = height;
          if (d.contains("num_tracks")) s.num_tracks = d["num_tracks"].cast<int>();
          if (d.contains("occlusion")) s.occlusion = d["occlusion"].cast<double>();
          if (d.contains("light_gradient")) s.light_gradient = d["light_gradient"].cast<double>();
          if (d.contains("noise")) s.noise = d["noise"].cast<double>();
        }
        const auto p = data::synth_scene(seed, s);
        return py::make_tuple(from_label(p.label), from_image(p.image));
      },
      py::arg("seed"), py::arg("height") = 128, py::arg("width") = 256, py::arg("spec") = py::none(),
      "Returns (label, image) for a seeded synthetic scene.");

  m.def(
      "augment",
      [](const LabelArray& label, const ImageArray& image, const std::string& kind, double degrees) {
        data::ScenePair p{to_label(label), to_image(image), {}};
        const auto out = data::augment(p, parse_transform(kind, degrees));
        return py::make_tuple(from_label(out.label), from_image(out.image));
      },
      py::arg("label"), py::arg("image"), py::arg("kind"), py::arg("degrees") = 0.0);

  m.def("classify_pixels", [](const ImageArray& image) { return from_label(data::classify_pixels(to_image(image))); });

  m.def(
      "lr_at",
      [](int epoch, const std::string& preset) { return train::lr_at(epoch, train::TrainConfig::preset(preset)); },
      py::arg("epoch"), py::arg("preset") = "paper");

  m.def("gan_loss_d", [](const DoubleArray& real, const DoubleArray& fake) {
    return model::gan_loss_d(to_var(real), to_var(fake)).item();
  });
  m.def("gan_loss_g", [](const DoubleArray& fake) { return model::gan_loss_g(to_var(fake)).item(); });
  m.def("fm_loss", [](const std::vector<DoubleArray>& real, const std::vector<DoubleArray>& fake) {
    std::vector<nn::Var<double>> r, f;
    for (const auto& a : real) r.push_back(to_var(a));
    for (const auto& a : fake) f.push_back(to_var(a));
    return model::fm_loss(r, f).item();
  });

  m.def("pixel_accuracy", [](const LabelArray& pred, const LabelArray& gt) {
    return metrics::pixel_accuracy(to_label(pred), to_label(gt));
  });
  m.def("iou", [](const LabelArray& pred, const LabelArray& gt) {
    const auto r = metrics::iou(to_label(pred), to_label(gt));
    return py::make_tuple(r.per_class, r.mean);
  });
  m.def(
      "evaluate",
      [](const std::vector<LabelArray>& preds, const std::vector<LabelArray>& gts, double threshold,
         double match_fraction) {
        if (preds.size() != gts.size()) throw ConfigError("prediction and ground-truth counts differ");
        std::vector<std::pair<std::string, std::pair<data::LabelMap, data::LabelMap>>> images;
        for (std::size_t i = 0; i < preds.size(); ++i)
          images.push_back({std::to_string(i), {to_label(preds[i]), to_label(gts[i])}});
        metrics::EvalConfig cfg;
        cfg.threshold = threshold;
        cfg.match_fraction = match_fraction;
        return report_dict(metrics::evaluate(images, cfg));
      },
      py::arg("preds"), py::arg("gts"), py::arg("threshold") = metrics::kDefaultThreshold,
      py::arg("match_fraction") = metrics::kDefaultMatchFraction);

  m.def(
      "synth",
      [](const std::filesystem::path& out, int count, const std::string& seed, const std::string& size) {
        cli::SynthArgs a;
        a.out = out;
        a.count = count;
        a.seed = seed;
        a.size = size;
        std::ostringstream log;
        cli::cmd_synth(a, log);
        return log.str();
      },
      py::arg("out"), py::arg("count") = 16, py::arg("seed") = "", py::arg("size") = "128x256");
  m.def(
      "train",
      [](const std::filesystem::path& out, const std::vector<std::string>& overrides, const std::string& preset,
         const std::filesystem::path& config) {
        cli::TrainArgs a;
        a.out = out;
        a.overrides = overrides;
        a.preset = preset;
        a.config = config;
        std::ostringstream log;
        {
          py::gil_scoped_release release;
          cli::cmd_train(a, log);
        }
        return log.str();
      },
      py::arg("out"), py::arg("overrides") = std::vector<std::string>{}, py::arg("preset") = "",
      py::arg("config") = std::filesystem::path{});

  py::class_<Model>(m, "Model")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def("generate", &Model::generate, py::arg("label"))
      .def("segment", &Model::segment, py::arg("label"))
      .def_property_readonly("step", &Model::step)
      .def_property_readonly("epoch", &Model::epoch)
      .def_property_readonly("size", &Model::size);
}
