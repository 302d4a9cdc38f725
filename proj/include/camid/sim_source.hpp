#pragma once

#include <map>

#include "camid/evaluation.hpp"
#include "camid/simulator.hpp"

namespace camid {

// Image source that renders synthetic images on demand instead of going
// through files; rendering stays deterministic per record, so grid runs
// over this source are reproducible and memory stays flat.
class SimImageSource : public ImageSource {
public:
    explicit SimImageSource(const SimConfig& cfg);

    // Standard 60/20/20 role split over cfg.images_per_device.
    DatasetManifest manifest() const;

    // Explicit per-device role counts; their sum must not exceed
    // cfg.images_per_device.
    DatasetManifest manifest(int n_reference, int n_train, int n_test) const;

    ImagePlane load(const ManifestRecord& record) const override;

    const std::vector<SimCamera>& cameras() const { return cameras_; }
    const SimConfig& config() const { return cfg_; }

private:
    SimConfig cfg_;
    std::vector<SimCamera> cameras_;
    std::map<std::string, std::size_t> camera_index_;
};

}  // namespace camid
