// Python bindings for the camid core: numpy-friendly wrappers around the
// raster pipeline, fusion training, and the synthetic dataset generator.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "camid/denoise.hpp"
#include "camid/distance.hpp"
#include "camid/evaluation.hpp"
#include "camid/fingerprint.hpp"
#include "camid/fusion.hpp"
#include "camid/io.hpp"
#include "camid/model_fingerprint.hpp"
#include "camid/simulator.hpp"

namespace py = pybind11;
using namespace camid;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Raster to_raster(const Array& a) {
    if (a.ndim() != 2) throw ArgumentError("expected a 2-D array");
    Raster r(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + r.size(), r.data.begin());
    return r;
}

py::array_t<double> from_raster(const Raster& r) {
    py::array_t<double> out({r.height, r.width});
    std::copy(r.data.begin(), r.data.end(), out.mutable_data());
    return out;
}

ImagePlane to_image(const Array& a) {
    ImagePlane img;
    img.plane = to_raster(a);
    return img;
}

std::vector<LabeledPair> to_pairs(const Array& x, const py::array_t<int>& labels) {
    if (x.ndim() != 2 || x.shape(1) != 2) throw ArgumentError("pairs must have shape (n, 2)");
    if (labels.ndim() != 1 || labels.shape(0) != x.shape(0)) {
        throw ArgumentError("labels must have shape (n,)");
    }
    std::vector<LabeledPair> pairs(static_cast<std::size_t>(x.shape(0)));
    for (py::ssize_t i = 0; i < x.shape(0); ++i) {
        pairs[static_cast<std::size_t>(i)].x = {x.at(i, 0), x.at(i, 1)};
        pairs[static_cast<std::size_t>(i)].label =
            labels.at(i) != 0 ? Label::H1 : Label::H0;
    }
    return pairs;
}

SimConfig config_from_kwargs(int n_models, int devices_per_model, int images_per_device,
                             int image_size, double prnu_strength, int artifact_period,
                             double artifact_strength, int scene_smoothness,
                             double sensor_noise_sigma, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_models = n_models;
    cfg.devices_per_model = devices_per_model;
    cfg.images_per_device = images_per_device;
    cfg.image_size = image_size;
    cfg.prnu_strength = prnu_strength;
    cfg.artifact_period = artifact_period;
    cfg.artifact_strength = artifact_strength;
    cfg.scene_smoothness = scene_smoothness;
    cfg.sensor_noise_sigma = sensor_noise_sigma;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Camera source identification: PRNU + model-fingerprint fusion";

    py::register_exception<Error>(m, "CamidError", PyExc_RuntimeError);

    m.def(
        "denoise",
        [](const Array& image, int window, double noise_variance) {
            return from_raster(
                denoise_local_wiener(to_raster(image), DenoiserConfig{window, noise_variance}));
        },
        py::arg("image"), py::arg("window") = 3, py::arg("noise_variance") = 9.0,
        "Local adaptive Wiener denoiser (mirror-extended windows).");

    m.def(
        "residual",
        [](const Array& image, int window, double noise_variance) {
            return from_raster(
                extract_residual(to_image(image), DenoiserConfig{window, noise_variance})
                    .plane);
        },
        py::arg("image"), py::arg("window") = 3, py::arg("noise_variance") = 9.0,
        "Noise residual W = I - f(I).");

    m.def(
        "zero_mean", [](const Array& a) { return from_raster(zero_mean(to_raster(a))); },
        py::arg("pattern"), "Subtract row means, then column means.");

    m.def(
        "wiener_dft",
        [](const Array& a, int window) { return from_raster(wiener_dft(to_raster(a), window)); },
        py::arg("pattern"), py::arg("window") = 3,
        "Attenuate periodic spectral peaks above the median local power.");

    m.def(
        "fold_periodic",
        [](const Array& a, int period) {
            return from_raster(fold_periodic(to_raster(a), period));
        },
        py::arg("residual"), py::arg("period") = 8,
        "Phase-fold a residual into its P-periodic component.");

    m.def(
        "crop_center",
        [](const Array& a, int d) { return from_raster(crop_center(to_raster(a), d)); },
        py::arg("plane"), py::arg("d"));

    m.def(
        "ncc", [](const Array& a, const Array& b) { return ncc(to_raster(a), to_raster(b)); },
        py::arg("a"), py::arg("b"), "Normalized cross-correlation.");

    m.def(
        "estimate_prnu",
        [](const std::vector<Array>& residuals, const std::optional<std::vector<Array>>& images,
           bool run_postprocess) {
            std::vector<NoiseResidual> w(residuals.size());
            for (std::size_t i = 0; i < residuals.size(); ++i) {
                w[i].plane = to_raster(residuals[i]);
            }
            DevicePattern pattern;
            if (images) {
                std::vector<ImagePlane> planes(images->size());
                for (std::size_t i = 0; i < images->size(); ++i) {
                    planes[i].plane = to_raster((*images)[i]);
                }
                pattern = estimate_prnu_ml(w, planes);
            } else {
                pattern = estimate_prnu_average(w);
            }
            if (run_postprocess) pattern = postprocess(pattern);
            return from_raster(pattern.plane);
        },
        py::arg("residuals"), py::arg("images") = py::none(), py::arg("postprocess") = false,
        "Average (or, with images, ML-weighted) PRNU estimate.");

    m.def(
        "distance_pair",
        [](const Array& image, const Array& device_ref, const Array& model_ref, int d, int window,
           double noise_variance, int period) {
            PipelineConfig cfg;
            cfg.denoiser = DenoiserConfig{window, noise_variance};
            cfg.extractor.period = period;
            cfg.extractor.denoiser = cfg.denoiser;
            DevicePattern dev;
            dev.plane = to_raster(device_ref);
            dev.n_images = 1;
            ModelPattern mod;
            mod.plane = to_raster(model_ref);
            mod.n_images = 1;
            const DistancePair pair = distance_pair(to_image(image), dev, mod, cfg, d);
            return py::make_tuple(pair.d_prnu, pair.d_np);
        },
        py::arg("image"), py::arg("device_ref"), py::arg("model_ref"), py::arg("d"),
        py::arg("window") = 3, py::arg("noise_variance") = 9.0, py::arg("period") = 8,
        "(d_prnu, d_np) of a test image against one device's references.");

    py::class_<FusionModel>(m, "FusionModel")
        .def_property_readonly("kind",
                               [](const FusionModel& model) { return method_name(model.kind); })
        .def(
            "score",
            [](const FusionModel& model, const Array& x) {
                if (x.ndim() == 1 && x.shape(0) == 2) {
                    return py::cast(score(model, Vec2{x.at(0), x.at(1)}));
                }
                if (x.ndim() != 2 || x.shape(1) != 2) {
                    throw ArgumentError("expected shape (2,) or (n, 2)");
                }
                py::array_t<double> out(x.shape(0));
                for (py::ssize_t i = 0; i < x.shape(0); ++i) {
                    out.mutable_data()[i] = score(model, Vec2{x.at(i, 0), x.at(i, 1)});
                }
                return py::cast<py::object>(std::move(out));
            },
            py::arg("pairs"), "Score (d_prnu, d_np) pairs; higher favors same-device.")
        .def("save",
             [](const FusionModel& model, const std::string& path) {
                 save_fusion_model(model, path);
             })
        .def("__repr__", [](const FusionModel& model) {
            return "<camid.FusionModel kind=" + method_name(model.kind) + ">";
        });

    m.def(
        "train_fusion",
        [](const Array& x, const py::array_t<int>& labels, const std::string& method,
           double svm_lambda, int svm_iters, double mcd_alpha, int mcd_starts,
           std::uint64_t seed) {
            TrainOptions opts;
            opts.svm.lambda = svm_lambda;
            opts.svm.iters = svm_iters;
            opts.mcd.alpha = mcd_alpha;
            opts.mcd.n_starts = mcd_starts;
            opts.mcd.seed = seed;
            return train_fusion(parse_method(method), to_pairs(x, labels), opts);
        },
        py::arg("pairs"), py::arg("labels"), py::arg("method") = "fld",
        py::arg("svm_lambda") = 1e-3, py::arg("svm_iters") = 2000, py::arg("mcd_alpha") = 0.5,
        py::arg("mcd_starts") = 500, py::arg("seed") = 0,
        "Train svm|lrt|rlrt|fld|rfld|prnu|np on labeled (d_prnu, d_np) pairs.");

    m.def("load_fusion", &load_fusion_model, py::arg("path"));

    m.def(
        "fit_mcd",
        [](const Array& x, double alpha, int n_starts, std::uint64_t seed) {
            if (x.ndim() != 2 || x.shape(1) != 2) throw ArgumentError("expected shape (n, 2)");
            std::vector<Vec2> xs(static_cast<std::size_t>(x.shape(0)));
            for (py::ssize_t i = 0; i < x.shape(0); ++i) xs[static_cast<std::size_t>(i)] = {x.at(i, 0), x.at(i, 1)};
            McdOptions opts;
            opts.alpha = alpha;
            opts.n_starts = n_starts;
            opts.seed = seed;
            const GaussianParams g = fit_gaussian_mcd(xs, opts);
            py::array_t<double> mean_out(2);
            mean_out.mutable_data()[0] = g.mean[0];
            mean_out.mutable_data()[1] = g.mean[1];
            py::array_t<double> cov_out({2, 2});
            cov_out.mutable_data()[0] = g.cov.xx;
            cov_out.mutable_data()[1] = g.cov.xy;
            cov_out.mutable_data()[2] = g.cov.xy;
            cov_out.mutable_data()[3] = g.cov.yy;
            return py::make_tuple(mean_out, cov_out);
        },
        py::arg("x"), py::arg("alpha") = 0.5, py::arg("n_starts") = 500, py::arg("seed") = 0,
        "Robust (FAST-MCD) location and scatter of 2-D points.");

    m.def(
        "roc_auc",
        [](const Array& scores, const py::array_t<int>& labels) {
            if (scores.ndim() != 1 || labels.ndim() != 1 || scores.shape(0) != labels.shape(0)) {
                throw ArgumentError("scores and labels must be 1-D and equally long");
            }
            std::vector<double> s(scores.data(), scores.data() + scores.shape(0));
            std::vector<Label> l(static_cast<std::size_t>(labels.shape(0)));
            for (py::ssize_t i = 0; i < labels.shape(0); ++i) {
                l[static_cast<std::size_t>(i)] = labels.at(i) != 0 ? Label::H1 : Label::H0;
            }
            const RocResult r = roc_auc(s, l);
            py::array_t<double> points({static_cast<py::ssize_t>(r.points.size()),
                                        static_cast<py::ssize_t>(2)});
            for (std::size_t i = 0; i < r.points.size(); ++i) {
                points.mutable_data()[2 * i] = r.points[i].p_fa;
                points.mutable_data()[2 * i + 1] = r.points[i].p_d;
            }
            return py::make_tuple(r.auc, points);
        },
        py::arg("scores"), py::arg("labels"),
        "(auc, roc_points); AUC by the Mann-Whitney statistic, ties 1/2.");

    m.def(
        "simulate_dataset",
        [](const std::string& out_dir, int n_models, int devices_per_model, int images_per_device,
           int image_size, double prnu_strength, int artifact_period, double artifact_strength,
           int scene_smoothness, double sensor_noise_sigma, std::uint64_t seed) {
            const SimConfig cfg = config_from_kwargs(
                n_models, devices_per_model, images_per_device, image_size, prnu_strength,
                artifact_period, artifact_strength, scene_smoothness, sensor_noise_sigma, seed);
            const DatasetManifest manifest = generate_dataset(cfg, out_dir);
            return manifest.records.size();
        },
        py::arg("out_dir"), py::arg("n_models") = 2, py::arg("devices_per_model") = 2,
        py::arg("images_per_device") = 10, py::arg("image_size") = 128,
        py::arg("prnu_strength") = 0.02, py::arg("artifact_period") = 8,
        py::arg("artifact_strength") = 2.0, py::arg("scene_smoothness") = 6,
        py::arg("sensor_noise_sigma") = 2.0, py::arg("seed") = 0,
        "Write a synthetic dataset (.plane files + manifest.json); returns record count.");

    m.def(
        "render_image",
        [](int model_index, int device_index_in_model, int image_index, int n_models,
           int devices_per_model, int images_per_device, int image_size, double prnu_strength,
           int artifact_period, double artifact_strength, int scene_smoothness,
           double sensor_noise_sigma, std::uint64_t seed) {
            const SimConfig cfg = config_from_kwargs(
                n_models, devices_per_model, images_per_device, image_size, prnu_strength,
                artifact_period, artifact_strength, scene_smoothness, sensor_noise_sigma, seed);
            const auto cameras = build_cameras(cfg);
            const std::size_t index = static_cast<std::size_t>(model_index) *
                                          static_cast<std::size_t>(devices_per_model) +
                                      static_cast<std::size_t>(device_index_in_model);
            if (index >= cameras.size()) throw ArgumentError("camera index out of range");
            return from_raster(render_image(cameras[index], cfg, image_index).plane);
        },
        py::arg("model_index"), py::arg("device_index"), py::arg("image_index"),
        py::arg("n_models") = 2, py::arg("devices_per_model") = 2,
        py::arg("images_per_device") = 10, py::arg("image_size") = 128,
        py::arg("prnu_strength") = 0.02, py::arg("artifact_period") = 8,
        py::arg("artifact_strength") = 2.0, py::arg("scene_smoothness") = 6,
        py::arg("sensor_noise_sigma") = 2.0, py::arg("seed") = 0,
        "Render one synthetic image as an array.");

    m.def(
        "load_plane", [](const std::string& path) { return from_raster(load_plane(path)); },
        py::arg("path"));
    m.def(
        "save_plane",
        [](const Array& a, const std::string& path) { save_plane(to_raster(a), path); },
        py::arg("plane"), py::arg("path"));
    m.def(
        "load_image_file",
        [](const std::string& path) { return from_raster(load_image(path).plane); },
        py::arg("path"), "Load a .pgm/.ppm/.plane file as a 2-D array.");

    m.attr("__version__") = "0.1.0";
}
