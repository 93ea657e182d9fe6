#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "symbiotic/cli.hpp"
#include "symbiotic/data.hpp"
#include "symbiotic/gradcheck.hpp"
#include "symbiotic/mechanisms.hpp"
#include "symbiotic/metrics.hpp"
#include "symbiotic/ops.hpp"
#include "symbiotic/training.hpp"

namespace py = pybind11;
using namespace symbiotic;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style |
                                                       py::array::forcecast>& a) {
  Shape shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) {
    shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
  }
  std::vector<double> values(a.data(), a.data() + a.size());
  return Tensor::from_data(std::move(shape), std::move(values));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.rank());
  for (std::size_t i = 0; i < t.rank(); ++i) {
    shape[i] = static_cast<py::ssize_t>(t.shape()[i]);
  }
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

std::vector<std::uint8_t> bits(const std::vector<int>& v) {
  std::vector<std::uint8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] ? 1 : 0;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "semantic-segmentation-guided attribute prediction core";

  m.def("run_cli", &cli::run, py::arg("args"),
        "Run a CLI command; returns its exit code.");

  m.def(
      "region_pool",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> masks) {
        return array_from_tensor(
            region_pool(nullptr, tensor_from_array(x), tensor_from_array(masks)));
      },
      py::arg("x"), py::arg("masks"),
      "Mask-mass-normalized region pooling: [B,C,H,W] x [B,S,H,W] -> [B,S,C].");

  m.def(
      "global_avg_pool",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        return array_from_tensor(global_avg_pool(nullptr, tensor_from_array(x)));
      },
      py::arg("x"));

  m.def(
      "spatial_softmax_mask",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> logits,
         py::array_t<double, py::array::c_style | py::array::forcecast> phi,
         std::size_t kernel) {
        SaEmbedParams p = SaEmbedParams::init(
            static_cast<std::size_t>(logits.shape(1)),
            static_cast<std::size_t>(phi.shape(0)), kernel,
            MaskNorm::kSpatialSoftmax);
        Tensor w = tensor_from_array(phi);
        std::copy(w.data(), w.data() + w.size(), p.phi.weight.data());
        p.pre_bn.training_mode = false;
        return array_from_tensor(sa_embed(nullptr, tensor_from_array(logits), p));
      },
      py::arg("logits"), py::arg("phi"), py::arg("kernel") = 1,
      "Embedding masks from logit maps (eval-mode normalization).");

  m.def(
      "footprint",
      [](const std::string& mechanism, long long ns, long long na, long long c,
         long long h, long long w) {
        Mechanism mech = mechanism_from_string(mechanism);
        py::dict d;
        d["formula"] = footprint_formula(mech, ns, na, c, h, w);
        d["instrumented"] = footprint_instrumented(mech, ns, na, c, h, w);
        return d;
      },
      py::arg("mechanism"), py::arg("ns"), py::arg("na"), py::arg("c"),
      py::arg("h"), py::arg("w"));

  m.def(
      "inspect_phi",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> weight) {
        Conv2dParams p;
        p.weight = tensor_from_array(weight);
        auto rows = inspect_phi(p);
        py::array_t<double> out(
            {static_cast<py::ssize_t>(rows.size()),
             static_cast<py::ssize_t>(rows.empty() ? 0 : rows[0].size())});
        auto r = out.mutable_unchecked<2>();
        for (py::ssize_t i = 0; i < r.shape(0); ++i)
          for (py::ssize_t j = 0; j < r.shape(1); ++j)
            r(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return out;
      },
      py::arg("weight"),
      "Kernel means per (out, in) pair, row min-max normalized to [0,1].");

  m.def(
      "average_precision",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& present) {
        return average_precision(scores, bits(labels), bits(present));
      },
      py::arg("scores"), py::arg("labels"), py::arg("present"));

  m.def(
      "balanced_accuracy",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& present, double threshold) {
        return balanced_accuracy(scores, bits(labels), bits(present), threshold);
      },
      py::arg("scores"), py::arg("labels"), py::arg("present"),
      py::arg("threshold") = 0.0);

  m.def(
      "classification_error",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& present, double threshold) {
        return classification_error(scores, bits(labels), bits(present),
                                    threshold);
      },
      py::arg("scores"), py::arg("labels"), py::arg("present"),
      py::arg("threshold") = 0.0);

  m.def(
      "generate_dataset",
      [](const std::string& out_dir, std::size_t n, double split,
         std::uint64_t seed, double missing_rate) {
        SynthSpec spec;
        spec.seed = seed;
        spec.missing_rate = missing_rate;
        Dataset ds = generate(spec, n, split);
        write_dataset(ds, out_dir);
        return read_dataset_manifest(out_dir).dump();
      },
      py::arg("out_dir"), py::arg("n"), py::arg("split"), py::arg("seed") = 0,
      py::arg("missing_rate") = 0.0,
      "Generate a synthetic dataset directory; returns the manifest JSON.");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, const std::string& module) {
        py::list out;
        for (const auto& r : gradcheck::run_suite(seed, module)) {
          py::dict d;
          d["name"] = r.name;
          d["max_rel_err"] = r.max_rel_err;
          d["pass"] = r.pass;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 0, py::arg("module") = "all");

  m.attr("region_names") = SynthSpec::region_names();
  m.attr("attribute_names") = SynthSpec::attribute_names();
}
