#include "camid/model_fingerprint.hpp"

#include <filesystem>
#include <vector>

#include "camid/io.hpp"

namespace camid {

std::string ExtractorConfig::id() const {
    if (kind == ExtractorKind::External) return "external";
    return "surrogate-p" + std::to_string(period);
}

Raster fold_periodic(const Raster& residual, int period) {
    require_valid(residual, "fold_periodic");
    if (period < 2) throw ArgumentError("fold_periodic: period must be >= 2");
    if (residual.height < 2 * period || residual.width < 2 * period) {
        throw DimensionError("fold_periodic: raster " + std::to_string(residual.height) + "x" +
                             std::to_string(residual.width) + " too small for period " +
                             std::to_string(period));
    }

    std::vector<double> bin_sum(static_cast<std::size_t>(period) * period, 0.0);
    std::vector<int> bin_count(static_cast<std::size_t>(period) * period, 0);
    for (int y = 0; y < residual.height; ++y) {
        const int u = y % period;
        for (int x = 0; x < residual.width; ++x) {
            const int v = x % period;
            bin_sum[static_cast<std::size_t>(u) * period + v] += residual.at(y, x);
            bin_count[static_cast<std::size_t>(u) * period + v] += 1;
        }
    }
    for (std::size_t i = 0; i < bin_sum.size(); ++i) bin_sum[i] /= bin_count[i];

    Raster out(residual.height, residual.width);
    for (int y = 0; y < residual.height; ++y) {
        const int u = y % period;
        for (int x = 0; x < residual.width; ++x) {
            out.at(y, x) = bin_sum[static_cast<std::size_t>(u) * period + x % period];
        }
    }
    return out;
}

Raster extract_surrogate(const ImagePlane& image, const ExtractorConfig& cfg) {
    if (cfg.kind != ExtractorKind::SurrogatePeriodic) {
        throw ArgumentError("extract_surrogate: config is not a surrogate extractor");
    }
    const NoiseResidual residual = extract_residual(image, cfg.denoiser);
    return fold_periodic(residual.plane, cfg.period);
}

Raster load_external_noiseprint(const std::string& image_path, const ExtractorConfig& cfg,
                                const Raster& image_plane) {
    namespace fs = std::filesystem;
    const fs::path expected =
        fs::path(cfg.external_dir) / (fs::path(image_path).stem().string() + ".plane");
    if (!fs::exists(expected)) {
        throw LookupError("no noiseprint for \"" + image_path + "\": expected \"" +
                          expected.string() + "\"");
    }
    Raster np = load_plane(expected.string());
    require_same_shape(image_plane, np, "load_external_noiseprint");
    return np;
}

Raster extract_model_fingerprint(const ImagePlane& image, const ExtractorConfig& cfg) {
    if (cfg.kind == ExtractorKind::External) {
        return load_external_noiseprint(image.meta.source_path, cfg, image.plane);
    }
    return extract_surrogate(image, cfg);
}

ModelPattern estimate_model_reference(std::span<const Raster> fingerprints,
                                      const std::string& model_id,
                                      const std::string& extractor_id) {
    if (fingerprints.empty()) {
        throw ArgumentError("estimate_model_reference: empty fingerprint list");
    }
    const Raster& first = fingerprints.front();
    ModelPattern pattern;
    pattern.plane = Raster(first.height, first.width);
    for (const auto& fp : fingerprints) {
        require_same_shape(first, fp, "estimate_model_reference");
        for (std::size_t i = 0; i < fp.size(); ++i) pattern.plane.data[i] += fp.data[i];
    }
    const double inv_n = 1.0 / static_cast<double>(fingerprints.size());
    for (double& v : pattern.plane.data) v *= inv_n;
    pattern.n_images = static_cast<int>(fingerprints.size());
    pattern.model_id = model_id;
    pattern.extractor_id = extractor_id;
    return pattern;
}

}  // namespace camid
