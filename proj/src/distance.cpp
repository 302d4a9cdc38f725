#include "camid/distance.hpp"

#include <cmath>

namespace camid {

Raster crop_center(const Raster& plane, int d) {
    require_valid(plane, "crop_center");
    if (d < 1) throw ArgumentError("crop_center: d must be >= 1");
    if (d > plane.height || d > plane.width) {
        throw DimensionError("crop_center: d = " + std::to_string(d) + " exceeds raster " +
                             std::to_string(plane.height) + "x" + std::to_string(plane.width));
    }
    const int y0 = (plane.height - d) / 2;
    const int x0 = (plane.width - d) / 2;
    Raster out(d, d);
    for (int y = 0; y < d; ++y) {
        for (int x = 0; x < d; ++x) {
            out.at(y, x) = plane.at(y0 + y, x0 + x);
        }
    }
    return out;
}

double ncc(const Raster& a, const Raster& b) {
    require_same_shape(a, b, "ncc");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a.data[i] * b.data[i];
        na += a.data[i] * a.data[i];
        nb += b.data[i] * b.data[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateInputError("ncc: zero-norm operand");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double d_prnu(const NoiseResidual& test_residual, const DevicePattern& ref, int d) {
    return 1.0 - ncc(crop_center(test_residual.plane, d), crop_center(ref.plane, d));
}

double d_np(const Raster& test_fingerprint, const ModelPattern& ref, int d) {
    const Raster a = crop_center(ref.plane, d);
    const Raster b = crop_center(test_fingerprint, d);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a.data[i] - b.data[i];
        s += diff * diff;
    }
    return s / static_cast<double>(a.size());
}

TestFeatures compute_test_features(const ImagePlane& image, const PipelineConfig& cfg) {
    TestFeatures features;
    features.residual = extract_residual(image, cfg.denoiser);
    const bool same_denoiser = cfg.extractor.denoiser.window == cfg.denoiser.window &&
                               cfg.extractor.denoiser.noise_variance == cfg.denoiser.noise_variance;
    if (cfg.extractor.kind == ExtractorKind::SurrogatePeriodic && same_denoiser) {
        // Reuse the residual instead of denoising twice.
        features.fingerprint = fold_periodic(features.residual.plane, cfg.extractor.period);
    } else {
        features.fingerprint = extract_model_fingerprint(image, cfg.extractor);
    }
    features.meta = image.meta;
    return features;
}

DistancePair distance_pair(const TestFeatures& features, const DevicePattern& device_ref,
                           const ModelPattern& model_ref, int d) {
    DistancePair pair;
    pair.d_prnu = d_prnu(features.residual, device_ref, d);
    pair.d_np = d_np(features.fingerprint, model_ref, d);
    pair.test_meta = {features.meta.model_id, features.meta.device_id};
    pair.ref_meta = {device_ref.model_id, device_ref.device_id};
    return pair;
}

DistancePair distance_pair(const ImagePlane& test_image, const DevicePattern& device_ref,
                           const ModelPattern& model_ref, const PipelineConfig& cfg, int d) {
    return distance_pair(compute_test_features(test_image, cfg), device_ref, model_ref, d);
}

}  // namespace camid
