#pragma once

#include <span>
#include <string>

#include "camid/denoise.hpp"
#include "camid/raster.hpp"

namespace camid {

enum class ExtractorKind : std::uint8_t {
    SurrogatePeriodic = 0,
    External = 1,
};

// Model-fingerprint extractor. The surrogate isolates P-periodic
// processing artifacts by phase-folding the noise residual; the external
// backend ingests precomputed maps (one ".plane" per image, matched by
// basename) from external_dir.
struct ExtractorConfig {
    ExtractorKind kind = ExtractorKind::SurrogatePeriodic;
    int period = 8;
    DenoiserConfig denoiser{};
    std::string external_dir;

    std::string id() const;  // "surrogate-p<period>" or "external"
};

// Mean over each congruence class (x mod P, y mod P), tiled back to the
// input size. Output is exactly P-periodic in both axes; aperiodic
// content is attenuated by the per-bin sample count.
Raster fold_periodic(const Raster& residual, int period);

Raster extract_surrogate(const ImagePlane& image, const ExtractorConfig& cfg);

Raster load_external_noiseprint(const std::string& image_path, const ExtractorConfig& cfg,
                                const Raster& image_plane);

// Dispatches on cfg.kind.
Raster extract_model_fingerprint(const ImagePlane& image, const ExtractorConfig& cfg);

ModelPattern estimate_model_reference(std::span<const Raster> fingerprints,
                                      const std::string& model_id,
                                      const std::string& extractor_id);

}  // namespace camid
