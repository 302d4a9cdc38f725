#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "camid/errors.hpp"

namespace camid {

// Row-major single-channel raster. Luminance images live in a nominal
// [0,255] range; residuals and fingerprints are signed and unbounded.
struct Raster {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Raster() = default;
    Raster(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Raster& other) const {
        return height == other.height && width == other.width;
    }
};

// Throws ArgumentError if dims < 1, data length mismatches, or any value
// is non-finite.
void require_valid(const Raster& r, const std::string& what);

// Throws DimensionError unless the two rasters have identical dimensions.
void require_same_shape(const Raster& a, const Raster& b, const std::string& what);

double sum(const Raster& r);
double energy(const Raster& r);          // sum of squares
double mean(const Raster& r);
Raster flip_horizontal(const Raster& r);
Raster flip_vertical(const Raster& r);

struct ImageMeta {
    std::string model_id;
    std::string device_id;
    std::string source_path;
};

struct ImagePlane {
    Raster plane;
    ImageMeta meta;
};

// W = I - f(I); same dimensions as the source image.
struct NoiseResidual {
    Raster plane;
    ImageMeta meta;
};

enum class PrnuEstimator : std::uint8_t {
    Average = 0,
    MaximumLikelihood = 1,
};

// Estimated device PRNU reference.
struct DevicePattern {
    Raster plane;
    int n_images = 0;
    PrnuEstimator estimator = PrnuEstimator::Average;
    bool postprocessed = false;
    std::string device_id;
    std::string model_id;
};

// Averaged camera-model fingerprint reference.
struct ModelPattern {
    Raster plane;
    int n_images = 0;
    std::string extractor_id;
    std::string model_id;
};

enum class Role : std::uint8_t {
    Reference = 0,
    Train = 1,
    Test = 2,
};

std::string role_name(Role role);
Role parse_role(const std::string& name);  // throws FormatError on unknown names

struct ManifestRecord {
    std::string path;
    std::string model_id;
    std::string device_id;
    Role role = Role::Reference;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
};

}  // namespace camid
