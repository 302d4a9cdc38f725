#include "camid/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "camid/fft.hpp"

namespace camid {

namespace {
constexpr double kMlEps = 1e-12;

void check_residual_list(std::span<const NoiseResidual> residuals, const char* what) {
    if (residuals.empty()) throw ArgumentError(std::string(what) + ": empty residual list");
    const Raster& first = residuals.front().plane;
    for (const auto& r : residuals) {
        require_same_shape(first, r.plane, what);
        if (r.meta.device_id != residuals.front().meta.device_id) {
            throw ArgumentError(std::string(what) + ": residuals from different devices (\"" +
                                residuals.front().meta.device_id + "\" vs \"" +
                                r.meta.device_id + "\")");
        }
    }
}
}  // namespace

DevicePattern estimate_prnu_average(std::span<const NoiseResidual> residuals) {
    check_residual_list(residuals, "estimate_prnu_average");
    const Raster& first = residuals.front().plane;
    DevicePattern pattern;
    pattern.plane = Raster(first.height, first.width);
    // Serial left-to-right accumulation; keeps results run-to-run stable.
    for (const auto& r : residuals) {
        for (std::size_t i = 0; i < r.plane.size(); ++i) {
            pattern.plane.data[i] += r.plane.data[i];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(residuals.size());
    for (double& v : pattern.plane.data) v *= inv_n;
    pattern.n_images = static_cast<int>(residuals.size());
    pattern.estimator = PrnuEstimator::Average;
    pattern.postprocessed = false;
    pattern.device_id = residuals.front().meta.device_id;
    pattern.model_id = residuals.front().meta.model_id;
    return pattern;
}

DevicePattern estimate_prnu_ml(std::span<const NoiseResidual> residuals,
                               std::span<const ImagePlane> images) {
    check_residual_list(residuals, "estimate_prnu_ml");
    if (images.size() != residuals.size()) {
        throw ArgumentError("estimate_prnu_ml: " + std::to_string(residuals.size()) +
                            " residuals vs " + std::to_string(images.size()) + " images");
    }
    const Raster& first = residuals.front().plane;
    for (const auto& img : images) require_same_shape(first, img.plane, "estimate_prnu_ml");

    Raster numerator(first.height, first.width);
    Raster denominator(first.height, first.width);
    for (std::size_t n = 0; n < residuals.size(); ++n) {
        const auto& w = residuals[n].plane.data;
        const auto& img = images[n].plane.data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            numerator.data[i] += w[i] * img[i];
            denominator.data[i] += img[i] * img[i];
        }
    }
    DevicePattern pattern;
    pattern.plane = Raster(first.height, first.width);
    for (std::size_t i = 0; i < numerator.size(); ++i) {
        pattern.plane.data[i] = numerator.data[i] / std::max(denominator.data[i], kMlEps);
    }
    pattern.n_images = static_cast<int>(residuals.size());
    pattern.estimator = PrnuEstimator::MaximumLikelihood;
    pattern.postprocessed = false;
    pattern.device_id = residuals.front().meta.device_id;
    pattern.model_id = residuals.front().meta.model_id;
    return pattern;
}

Raster zero_mean(const Raster& pattern) {
    require_valid(pattern, "zero_mean");
    if (pattern.height < 2 || pattern.width < 2) {
        throw DimensionError("zero_mean: raster must be at least 2x2");
    }
    Raster out = pattern;
    for (int y = 0; y < out.height; ++y) {
        double row_mean = 0.0;
        for (int x = 0; x < out.width; ++x) row_mean += out.at(y, x);
        row_mean /= out.width;
        for (int x = 0; x < out.width; ++x) out.at(y, x) -= row_mean;
    }
    for (int x = 0; x < out.width; ++x) {
        double col_mean = 0.0;
        for (int y = 0; y < out.height; ++y) col_mean += out.at(y, x);
        col_mean /= out.height;
        for (int y = 0; y < out.height; ++y) out.at(y, x) -= col_mean;
    }
    return out;
}

Raster wiener_dft(const Raster& pattern, int window) {
    require_valid(pattern, "wiener_dft");
    if (window < 1 || window % 2 == 0) {
        throw ArgumentError("wiener_dft: window must be odd and >= 1");
    }
    if (pattern.height < window || pattern.width < window) {
        throw DimensionError("wiener_dft: raster smaller than window");
    }

    const int h = pattern.height;
    const int w = pattern.width;
    const std::size_t n = pattern.size();
    auto spectrum = detail::dft2(pattern);

    std::vector<double> power(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) power[i] = std::norm(spectrum[i]) * inv_n;

    // Local mean power over a periodic (wrap-around) neighborhood; the
    // wrap matches the DFT's implicit periodicity.
    const int radius = window / 2;
    std::vector<double> local(n);
    const double inv_w2 = 1.0 / (static_cast<double>(window) * window);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            double s = 0.0;
            for (int du = -radius; du <= radius; ++du) {
                const int uu = (u + du + h) % h;
                for (int dv = -radius; dv <= radius; ++dv) {
                    const int vv = (v + dv + w) % w;
                    s += power[static_cast<std::size_t>(uu) * w + vv];
                }
            }
            local[static_cast<std::size_t>(u) * w + v] = s * inv_w2;
        }
    }

    // Median of the smoothed power as the noise floor; robust against
    // the strong peaks this filter is meant to remove, while leaving the
    // noise-like floor (P_bar near the median) essentially untouched.
    std::vector<double> sorted(local);
    const std::size_t mid = n / 2;
    std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
    double noise_floor = sorted[mid];
    if (n % 2 == 0) {
        std::nth_element(sorted.begin(), sorted.begin() + (mid - 1), sorted.begin() + mid);
        noise_floor = 0.5 * (noise_floor + sorted[mid - 1]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        double gain;
        if (noise_floor == 0.0) {
            gain = (local[i] == 0.0) ? 1.0 : 0.0;
        } else {
            gain = noise_floor / std::max(local[i], noise_floor);
        }
        spectrum[i] *= gain;
    }
    return detail::idft2_real(spectrum, h, w);
}

DevicePattern postprocess(const DevicePattern& pattern, int wiener_window) {
    if (pattern.postprocessed) {
        throw StateError("postprocess: pattern for device \"" + pattern.device_id +
                         "\" is already postprocessed");
    }
    DevicePattern out = pattern;
    out.plane = wiener_dft(zero_mean(pattern.plane), wiener_window);
    out.postprocessed = true;
    return out;
}

}  // namespace camid
