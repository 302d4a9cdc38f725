#pragma once

#include "camid/raster.hpp"

namespace camid {

// Local adaptive Wiener denoiser in the pixel domain. noise_variance is
// the assumed sensor noise power on the 0..255 luminance scale.
struct DenoiserConfig {
    int window = 3;
    double noise_variance = 9.0;
};

void validate(const DenoiserConfig& cfg);

// out = mu + max(0, v - sigma_d^2) / max(v, eps) * (in - mu), with mu and
// v the mean and population variance over the window x window
// neighborhood, mirror-extended at the borders.
Raster denoise_local_wiener(const Raster& image, const DenoiserConfig& cfg);
ImagePlane denoise_local_wiener(const ImagePlane& image, const DenoiserConfig& cfg);

// W = I - f(I).
NoiseResidual extract_residual(const ImagePlane& image, const DenoiserConfig& cfg);

// Symmetric (mirror) boundary extension: indices reflect about the array
// edges with the edge sample repeated (-1 -> 0, n -> n-1).
inline int mirror_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace camid
