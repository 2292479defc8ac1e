#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snnbench/checkpoint.hpp"
#include "snnbench/cka.hpp"
#include "snnbench/probe.hpp"
#include "snnbench/report.hpp"

namespace py = pybind11;
using namespace snnbench;

namespace {

using Array3 = py::array_t<double, py::array::c_style | py::array::forcecast>;

SpikeTensor to_tensor(const RowMatrix& x) { return SpikeTensor(x); }

// [N, T, C] array plus labels -> Dataset
Dataset to_dataset(const Array3& x, const std::vector<Eigen::Index>& labels, Eigen::Index n_classes) {
  if (x.ndim() != 3) throw std::invalid_argument("inputs must have shape [N, T, C]");
  const auto n = static_cast<std::size_t>(x.shape(0)), t = static_cast<std::size_t>(x.shape(1)),
             c = static_cast<std::size_t>(x.shape(2));
  if (labels.size() != n) throw std::invalid_argument("one label per sample required");
  Dataset d;
  d.n_classes = n_classes;
  d.channels = static_cast<Eigen::Index>(c);
  d.t_steps = t;
  auto v = x.unchecked<3>();
  for (std::size_t i = 0; i < n; ++i) {
    SpikeTensor s(t, c);
    for (std::size_t a = 0; a < t; ++a)
      for (std::size_t b = 0; b < c; ++b) s(a, b) = v(i, a, b);
    d.samples.push_back({std::move(s), labels[i]});
  }
  d.validate();
  return d;
}

py::tuple from_dataset(const Dataset& d) {
  Array3 x({d.size(), d.t_steps, static_cast<std::size_t>(d.channels)});
  auto v = x.mutable_unchecked<3>();
  std::vector<Eigen::Index> y;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d.samples[i].input;
    for (std::size_t a = 0; a < s.t_steps(); ++a)
      for (std::size_t b = 0; b < s.channels(); ++b) v(i, a, b) = s(a, b);
    y.push_back(d.samples[i].label);
  }
  return py::make_tuple(x, py::array(py::cast(y)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spiking network learning-rule benchmark core";

  m.def("preset_names", &preset_names);
  m.def("preset_yaml", [](const std::string& name) { return config_to_yaml(preset(name)); },
        "Preset as config text");
  m.def("normalize_config", [](const std::string& text) {
    const ExperimentConfig c = config_from_yaml(text);
    c.validate();
    return config_to_yaml(c);
  });
  m.def(
      "run_experiment_json",
      [](const std::string& config_text, std::size_t threads) {
        const ExperimentConfig c = config_from_yaml(config_text);
        RunOptions opt;
        opt.threads = threads;
        ExperimentRun run;
        {
          py::gil_scoped_release release;
          run = run_experiment(c, opt);
        }
        return report_to_json(run.report).dump();
      },
      py::arg("config"), py::arg("threads") = 0);

  m.def(
      "synth_dataset",
      [](Eigen::Index classes, std::size_t per_class, std::size_t t_steps, Eigen::Index channels, double jitter,
         double density, std::uint64_t seed, std::optional<std::uint64_t> sample_seed) {
        SynthSpec s{classes, per_class, t_steps, channels, jitter, density, seed};
        return from_dataset(synth_pattern_dataset(s, sample_seed));
      },
      py::arg("classes") = 2, py::arg("per_class") = 100, py::arg("t_steps") = 20, py::arg("channels") = 64,
      py::arg("jitter") = 0.2, py::arg("density") = 0.2, py::arg("seed") = 1, py::arg("sample_seed") = py::none());

  py::class_<Network>(m, "Network")
      .def(py::init([](Eigen::Index n_inputs, std::vector<Eigen::Index> hidden, Eigen::Index n_classes, bool recurrent,
                       double alpha_syn, double alpha_mem, double v_th, std::uint64_t seed) {
             NetworkConfig c;
             c.n_inputs = n_inputs;
             c.hidden = std::move(hidden);
             c.n_classes = n_classes;
             c.recurrent = recurrent;
             c.lif = {alpha_syn, alpha_mem, v_th, true};
             return init_network(c, seed);
           }),
           py::arg("n_inputs"), py::arg("hidden"), py::arg("n_classes"), py::arg("recurrent") = false,
           py::arg("alpha_syn") = 0.9, py::arg("alpha_mem") = 0.5, py::arg("v_th") = 1.0, py::arg("seed") = 1)
      .def_static("load", [](const std::string& path) { return load_checkpoint(path).net; })
      .def("save", [](const Network& n, const std::string& path) { save_checkpoint(path, n); })
      .def_property_readonly("n_layers", [](const Network& n) { return n.layers.size(); })
      .def("weights", [](const Network& n, std::size_t l) { return Matrix(n.layers.at(l).w); })
      .def("recurrent_weights",
           [](const Network& n, std::size_t l) -> std::optional<Matrix> { return n.layers.at(l).v; })
      .def("forward", [](const Network& n, const RowMatrix& x) { return Vector(forward(n, to_tensor(x)).scores); },
           "Class scores for one [T, C] input")
      .def("predict", [](const Network& n, const RowMatrix& x) { return predict(forward(n, to_tensor(x)).scores); })
      .def("accuracy", [](const Network& n, const Array3& x, const std::vector<Eigen::Index>& y) {
        return evaluate(n, to_dataset(x, y, n.n_classes())).accuracy;
      });

  m.def("hsic_biased", &hsic_biased, py::arg("k"), py::arg("l"));
  m.def("hsic_unbiased", &hsic_unbiased, py::arg("k"), py::arg("l"));
  m.def(
      "cka",
      [](const Matrix& a, const Matrix& b, const std::string& estimator) {
        return cka(a, b, hsic_estimator_from_string(estimator));
      },
      py::arg("a"), py::arg("b"), py::arg("estimator") = "unbiased", "CKA between [examples x features] blocks");
  m.def(
      "cka_matrix",
      [](const Network& a, const Network& b, const Array3& x, const std::vector<Eigen::Index>& y,
         std::size_t batch_size) {
        CkaOptions opt;
        opt.batch_size = batch_size;
        opt.total = y.size();
        return cka_matrix(a, b, to_dataset(x, y, a.n_classes()), opt);
      },
      py::arg("a"), py::arg("b"), py::arg("inputs"), py::arg("labels"), py::arg("batch_size") = 128);

  m.def(
      "fgsm",
      [](const Network& n, const RowMatrix& x, Eigen::Index label, double epsilon, const std::string& mode) {
        return RowMatrix(fgsm_perturb(n, to_tensor(x), label, {epsilon, fgsm_mode_from_string(mode)}).data());
      },
      py::arg("net"), py::arg("input"), py::arg("label"), py::arg("epsilon"), py::arg("mode") = "ann-counterpart");

  m.def(
      "probe",
      [](const std::string& method, const std::vector<Eigen::Index>& sizes, const std::vector<std::size_t>& ts,
         std::size_t repeats) {
        ProbeOptions opt;
        opt.repeats = repeats;
        const ProbeTable t = complexity_probe(method_from_string(method), sizes, ts, opt);
        py::list rows;
        for (const auto& r : t.rows)
          rows.append(py::dict(py::arg("n_hidden") = r.n_hidden, py::arg("t_steps") = r.t_steps,
                               py::arg("learning_state_peak") = r.learning_state_peak,
                               py::arg("seconds_per_step") = r.seconds_per_step));
        return py::dict(py::arg("rows") = rows, py::arg("memory_slope_t") = t.memory_slope_t,
                        py::arg("memory_slope_n") = t.memory_slope_n, py::arg("time_slope_t") = t.time_slope_t);
      },
      py::arg("method"), py::arg("sizes"), py::arg("t_steps"), py::arg("repeats") = 1);
}
