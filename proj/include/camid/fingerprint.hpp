#pragma once

#include <span>

#include "camid/raster.hpp"

namespace camid {

// Plain average of noise residuals. All residuals must share dimensions
// and device_id.
DevicePattern estimate_prnu_average(std::span<const NoiseResidual> residuals);

// Weighted estimate K[p] = sum_n W_n[p] * I_n[p] / max(sum_n I_n[p]^2, eps),
// consistent with the multiplicative imaging model. residuals[n] must be
// the residual of images[n].
DevicePattern estimate_prnu_ml(std::span<const NoiseResidual> residuals,
                               std::span<const ImagePlane> images);

// Subtracts each row's mean, then each column's mean of the intermediate.
// Leaves every row and column mean at zero; linear and idempotent.
Raster zero_mean(const Raster& pattern);

// Spectral whitening: attenuates DFT bins whose local mean power exceeds
// the global median power. Removes periodic artifacts while passing
// noise-like content. Never increases total energy.
Raster wiener_dft(const Raster& pattern, int window = 3);

// zero_mean followed by wiener_dft; marks the pattern postprocessed.
DevicePattern postprocess(const DevicePattern& pattern, int wiener_window = 3);

}  // namespace camid
