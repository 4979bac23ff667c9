#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "iifcn/augment.hpp"
#include "iifcn/checkpoint.hpp"
#include "iifcn/crf.hpp"
#include "iifcn/dataset.hpp"
#include "iifcn/losses.hpp"
#include "iifcn/metrics.hpp"
#include "iifcn/model.hpp"

namespace py = pybind11;
using namespace iifcn;

namespace {

ImageU8 image_from_array(py::array_t<uint8_t, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() == 2) {
        ImageU8 img(arr.shape(0), arr.shape(1), 1);
        std::memcpy(img.pixels.data(), arr.data(), img.pixels.size());
        return img;
    }
    if (arr.ndim() == 3 && arr.shape(2) == 3) {
        ImageU8 img(arr.shape(0), arr.shape(1), 3);
        std::memcpy(img.pixels.data(), arr.data(), img.pixels.size());
        return img;
    }
    throw std::invalid_argument("expected (h, w) or (h, w, 3) uint8 array");
}

py::array_t<uint8_t> image_to_array(const ImageU8& img) {
    if (img.channels == 1) {
        py::array_t<uint8_t> arr({img.h, img.w});
        std::memcpy(arr.mutable_data(), img.pixels.data(), img.pixels.size());
        return arr;
    }
    py::array_t<uint8_t> arr({img.h, img.w, int64_t(3)});
    std::memcpy(arr.mutable_data(), img.pixels.data(), img.pixels.size());
    return arr;
}

Tensor plane_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a (h, w) float array");
    Tensor t({arr.shape(0), arr.shape(1)});
    std::memcpy(t.data(), arr.data(), static_cast<size_t>(t.numel()) * sizeof(double));
    return t;
}

py::array_t<double> plane_to_array(const Tensor& t, int64_t h, int64_t w) {
    py::array_t<double> arr({h, w});
    std::memcpy(arr.mutable_data(), t.data(), static_cast<size_t>(h * w) * sizeof(double));
    return arr;
}

py::array_t<double> infer_object_prob(const Model& model, const ImageU8& img) {
    if (img.channels != 3) throw std::invalid_argument("image must be (h, w, 3)");
    Tensor prob = model.pad_and_crop_infer(image_to_tensor(img));
    int64_t hw = prob.h() * prob.w();
    Tensor plane({prob.h(), prob.w()});
    for (int64_t i = 0; i < hw; ++i) plane[i] = prob[hw + i];
    return plane_to_array(plane, prob.h(), prob.w());
}

JaccardMode mode_of(const std::string& s) {
    if (s == "soft") return JaccardMode::soft;
    if (s == "literal") return JaccardMode::literal;
    throw std::invalid_argument("mode must be 'soft' or 'literal'");
}

} // namespace

PYBIND11_MODULE(_iifcn, m) {
    m.doc() = "Inception encoder-decoder lesion segmentation core";

    m.def("admissible", &admissible, py::arg("extent"), py::arg("blocks"));
    m.def("nearest_admissible", &nearest_admissible, py::arg("extent"), py::arg("blocks"));
    m.def("bottleneck_extent", &bottleneck_extent, py::arg("extent"), py::arg("blocks"));

    py::class_<Model>(m, "Model")
        .def(py::init([](int64_t blocks, std::vector<int64_t> widths, uint64_t seed) {
                 ModelConfig cfg;
                 cfg.blocks = blocks;
                 cfg.widths = std::move(widths);
                 return Model(cfg, seed);
             }),
             py::arg("blocks"), py::arg("widths"), py::arg("seed") = 1)
        .def("parameter_count", &Model::parameter_count)
        .def("infer",
             [](const Model& model, py::array_t<uint8_t, py::array::c_style> image) {
                 return infer_object_prob(model, image_from_array(image));
             },
             py::arg("image"), "Object probability map for an (h, w, 3) uint8 image")
        .def("save", [](const Model& model, const std::string& path) {
            save_checkpoint(model, path);
        });
    m.def("load_model", &load_checkpoint, py::arg("path"));

    m.def(
        "reweight_filter",
        [](py::array_t<uint8_t, py::array::c_style> mask) {
            WeightFilter f = reweight_filter(mask_to_tensor(image_from_array(mask)));
            int64_t h = f.weights.shape()[0], w = f.weights.shape()[1];
            return py::make_tuple(plane_to_array(f.weights, h, w), f.p);
        },
        py::arg("mask"), "Per-pixel loss weights and the clamped object fraction");

    m.def(
        "jaccard_loss",
        [](py::array_t<double, py::array::c_style> a, py::array_t<double, py::array::c_style> b,
           double k, const std::string& mode) {
            return jaccard_loss(plane_from_array(a), plane_from_array(b), k, mode_of(mode));
        },
        py::arg("a"), py::arg("b"), py::arg("k") = 1.1, py::arg("mode") = "literal");

    m.def("harden", [](py::array_t<double, py::array::c_style> a) {
        Tensor t = harden(plane_from_array(a));
        return plane_to_array(t, t.shape()[0], t.shape()[1]);
    });

    m.def(
        "threshold_mask",
        [](py::array_t<double, py::array::c_style> prob, double t) {
            Tensor m2 = threshold_mask(plane_from_array(prob), t);
            return plane_to_array(m2, m2.shape()[0], m2.shape()[1]);
        },
        py::arg("prob"), py::arg("t") = 0.8);

    m.def(
        "evaluate",
        [](py::array_t<double, py::array::c_style> pred,
           py::array_t<double, py::array::c_style> gt) {
            MetricReport r = evaluate(plane_from_array(pred), plane_from_array(gt));
            py::dict d;
            d["tp"] = r.tp;
            d["fp"] = r.fp;
            d["tn"] = r.tn;
            d["fn"] = r.fn;
            d["sensitivity"] = r.sensitivity;
            d["specificity"] = r.specificity;
            d["accuracy"] = r.accuracy;
            d["dice"] = r.dice;
            d["jaccard"] = r.jaccard;
            return d;
        },
        py::arg("pred"), py::arg("gt"));

    m.def(
        "refine",
        [](py::array_t<uint8_t, py::array::c_style> image,
           py::array_t<double, py::array::c_style> prob, int64_t iterations, int64_t max_side) {
            ImageU8 img = image_from_array(image);
            Tensor p = plane_from_array(prob);
            if (p.shape()[0] != img.h || p.shape()[1] != img.w)
                throw std::invalid_argument("image and probability sizes differ");
            Tensor two({2, img.h, img.w});
            int64_t n = img.h * img.w;
            for (int64_t i = 0; i < n; ++i) {
                two[i] = 1 - p[i];
                two[n + i] = p[i];
            }
            CrfParams params;
            params.iterations = iterations;
            params.max_side = max_side;
            return image_to_array(refine(img, two, params));
        },
        py::arg("image"), py::arg("prob"), py::arg("iterations") = 10, py::arg("max_side") = 128,
        "Dense-CRF refinement of an object probability map");

    m.def(
        "augment_pair",
        [](py::array_t<uint8_t, py::array::c_style> image,
           py::array_t<uint8_t, py::array::c_style> mask, uint64_t seed) {
            SamplePair s;
            s.image = image_from_array(image);
            s.mask = image_from_array(mask);
            s.id = "py";
            Rng rng(seed);
            AugmentConfig cfg;
            SamplePair out = augment(s, cfg, rng);
            return py::make_tuple(image_to_array(out.image), image_to_array(out.mask));
        },
        py::arg("image"), py::arg("mask"), py::arg("seed"));

    m.def(
        "synth_dataset",
        [](int64_t n, int64_t h, int64_t w, uint64_t seed) {
            py::list out;
            for (const auto& s : synth_dataset(n, h, w, seed))
                out.append(py::make_tuple(image_to_array(s.image), image_to_array(s.mask)));
            return out;
        },
        py::arg("n"), py::arg("h"), py::arg("w"), py::arg("seed") = 1);
}
