#include "camid/fft.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace camid::detail {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution on
// plan-local buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftBuffer {
    fftw_complex* data = nullptr;
    explicit FftBuffer(std::size_t n) {
        data = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!data) throw std::bad_alloc();
    }
    ~FftBuffer() { fftw_free(data); }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;
};

std::vector<std::complex<double>> transform(const std::complex<double>* in, int height, int width,
                                            int sign) {
    const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    FftBuffer buf_in(n), buf_out(n);
    for (std::size_t i = 0; i < n; ++i) {
        buf_in.data[i][0] = in[i].real();
        buf_in.data[i][1] = in[i].imag();
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_2d(height, width, buf_in.data, buf_out.data, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw Error("fftw_plan_dft_2d failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<std::complex<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {buf_out.data[i][0], buf_out.data[i][1]};
    }
    return out;
}
}  // namespace

std::vector<std::complex<double>> dft2(const Raster& r) {
    std::vector<std::complex<double>> in(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) in[i] = {r.data[i], 0.0};
    return transform(in.data(), r.height, r.width, FFTW_FORWARD);
}

Raster idft2_real(const std::vector<std::complex<double>>& spectrum, int height, int width,
                  double* max_imag) {
    const std::size_t n = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (spectrum.size() != n) throw ArgumentError("idft2_real: spectrum size mismatch");
    auto full = transform(spectrum.data(), height, width, FFTW_BACKWARD);
    Raster out(height, width);
    const double scale = 1.0 / static_cast<double>(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i] = full[i].real() * scale;
        worst = std::max(worst, std::abs(full[i].imag()) * scale);
    }
    if (max_imag) *max_imag = worst;
    return out;
}

}  // namespace camid::detail
