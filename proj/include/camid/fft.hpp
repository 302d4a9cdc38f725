#pragma once

#include <complex>
#include <vector>

#include "camid/raster.hpp"

namespace camid::detail {

// Unnormalized forward 2-D DFT of a real raster, row-major H x W spectrum.
std::vector<std::complex<double>> dft2(const Raster& r);

// Inverse 2-D DFT with 1/(H*W) normalization; returns the real part and,
// if max_imag is given, reports the largest |imaginary| component.
Raster idft2_real(const std::vector<std::complex<double>>& spectrum, int height, int width,
                  double* max_imag = nullptr);

}  // namespace camid::detail
