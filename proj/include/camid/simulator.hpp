#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camid/raster.hpp"

namespace camid {

// Synthetic camera population: per-device multiplicative PRNU plus a
// per-model additive periodic artifact tile, rendered over smooth random
// scenes with additive sensor noise.
struct SimConfig {
    int n_models = 1;
    int devices_per_model = 1;
    int images_per_device = 1;
    int image_size = 128;               // square
    double prnu_strength = 0.02;        // sigma_K, multiplicative
    int artifact_period = 8;            // pixels
    double artifact_strength = 2.0;     // luminance
    int scene_smoothness = 6;           // box blur radius, pixels
    double sensor_noise_sigma = 2.0;    // luminance
    std::uint64_t seed = 0;
};

void validate(const SimConfig& cfg);

struct SimCamera {
    std::string model_id;
    std::string device_id;
    int model_index = 0;
    int device_index = 0;   // global index, used for seeding
    Raster prnu;            // true K, zero-mean
    Raster artifact_tile;   // artifact_period x artifact_period, shared per model
};

// Deterministic in cfg.seed; devices of one model share the identical
// artifact tile.
std::vector<SimCamera> build_cameras(const SimConfig& cfg);

struct RenderStats {
    double clip_fraction = 0.0;
};

// Pixel model: I = (1 + K) * scene + artifact + noise, clipped to [0,255].
inline double imaging_model(double scene, double prnu, double artifact, double noise) {
    const double v = (1.0 + prnu) * scene + artifact + noise;
    return v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
}

// Scene generator used by render_image: box-blurred uniform noise,
// rescaled to [30, 220]. Deterministic in (cfg.seed, device, image_index).
Raster render_scene(const SimConfig& cfg, int device_index, int image_index);

// Applies imaging_model over a fresh scene with the camera's PRNU and
// artifact tile. Deterministic in (cfg.seed, device, image_index).
ImagePlane render_image(const SimCamera& camera, const SimConfig& cfg, int image_index,
                        RenderStats* stats = nullptr);

// Writes one ".plane" file per image plus manifest.json into out_dir.
// Per device, the first ceil(60%) images are reference-eligible, the
// next floor(20%) are train, the remainder test.
DatasetManifest generate_dataset(const SimConfig& cfg, const std::filesystem::path& out_dir);

// Role split used by generate_dataset, exposed for callers that build
// in-memory datasets.
Role role_for_index(int image_index, int images_per_device);

}  // namespace camid
