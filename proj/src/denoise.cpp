#include "camid/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace camid {

namespace {
constexpr double kVarianceEps = 1e-12;

// Separable window sum with mirror extension; window = 2r + 1.
Raster window_sum(const Raster& in, int radius) {
    Raster rows(in.height, in.width);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double s = 0.0;
            for (int dx = -radius; dx <= radius; ++dx) {
                s += in.at(y, mirror_index(x + dx, in.width));
            }
            rows.at(y, x) = s;
        }
    }
    Raster out(in.height, in.width);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double s = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                s += rows.at(mirror_index(y + dy, in.height), x);
            }
            out.at(y, x) = s;
        }
    }
    return out;
}
}  // namespace

void validate(const DenoiserConfig& cfg) {
    if (cfg.window < 3 || cfg.window % 2 == 0) {
        throw ArgumentError("denoiser window must be odd and >= 3, got " +
                            std::to_string(cfg.window));
    }
    if (!(cfg.noise_variance > 0.0)) {
        throw ArgumentError("denoiser noise_variance must be > 0");
    }
}

Raster denoise_local_wiener(const Raster& image, const DenoiserConfig& cfg) {
    validate(cfg);
    require_valid(image, "denoise_local_wiener");
    if (image.height < cfg.window || image.width < cfg.window) {
        throw DimensionError("denoise_local_wiener: image " + std::to_string(image.height) + "x" +
                             std::to_string(image.width) + " smaller than window " +
                             std::to_string(cfg.window));
    }

    const int radius = cfg.window / 2;
    const double inv_n = 1.0 / (static_cast<double>(cfg.window) * cfg.window);

    Raster squares(image.height, image.width);
    for (std::size_t i = 0; i < image.size(); ++i) {
        squares.data[i] = image.data[i] * image.data[i];
    }
    const Raster sum1 = window_sum(image, radius);
    const Raster sum2 = window_sum(squares, radius);

    Raster out(image.height, image.width);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double mu = sum1.data[i] * inv_n;
        const double var = std::max(0.0, sum2.data[i] * inv_n - mu * mu);
        const double gain = std::max(0.0, var - cfg.noise_variance) / std::max(var, kVarianceEps);
        out.data[i] = mu + gain * (image.data[i] - mu);
    }
    return out;
}

ImagePlane denoise_local_wiener(const ImagePlane& image, const DenoiserConfig& cfg) {
    return {denoise_local_wiener(image.plane, cfg), image.meta};
}

NoiseResidual extract_residual(const ImagePlane& image, const DenoiserConfig& cfg) {
    const Raster denoised = denoise_local_wiener(image.plane, cfg);
    NoiseResidual residual;
    residual.plane = Raster(image.plane.height, image.plane.width);
    for (std::size_t i = 0; i < denoised.size(); ++i) {
        residual.plane.data[i] = image.plane.data[i] - denoised.data[i];
    }
    residual.meta = image.meta;
    return residual;
}

}  // namespace camid
