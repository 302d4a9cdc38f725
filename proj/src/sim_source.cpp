#include "camid/sim_source.hpp"

#include <cstdio>

namespace camid {

namespace {
std::string virtual_path(const std::string& device_id, int index) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "sim://%s/%04d", device_id.c_str(), index);
    return buf;
}
}  // namespace

SimImageSource::SimImageSource(const SimConfig& cfg) : cfg_(cfg), cameras_(build_cameras(cfg)) {
    for (std::size_t i = 0; i < cameras_.size(); ++i) {
        camera_index_[cameras_[i].device_id] = i;
    }
}

DatasetManifest SimImageSource::manifest() const {
    DatasetManifest m;
    for (const auto& cam : cameras_) {
        for (int i = 0; i < cfg_.images_per_device; ++i) {
            m.records.push_back({virtual_path(cam.device_id, i), cam.model_id, cam.device_id,
                                 role_for_index(i, cfg_.images_per_device)});
        }
    }
    return m;
}

DatasetManifest SimImageSource::manifest(int n_reference, int n_train, int n_test) const {
    if (n_reference < 0 || n_train < 0 || n_test < 0 ||
        n_reference + n_train + n_test > cfg_.images_per_device) {
        throw ConfigError("SimImageSource: role counts exceed images_per_device");
    }
    DatasetManifest m;
    for (const auto& cam : cameras_) {
        int index = 0;
        for (int i = 0; i < n_reference; ++i, ++index) {
            m.records.push_back(
                {virtual_path(cam.device_id, index), cam.model_id, cam.device_id, Role::Reference});
        }
        for (int i = 0; i < n_train; ++i, ++index) {
            m.records.push_back(
                {virtual_path(cam.device_id, index), cam.model_id, cam.device_id, Role::Train});
        }
        for (int i = 0; i < n_test; ++i, ++index) {
            m.records.push_back(
                {virtual_path(cam.device_id, index), cam.model_id, cam.device_id, Role::Test});
        }
    }
    return m;
}

ImagePlane SimImageSource::load(const ManifestRecord& record) const {
    const auto it = camera_index_.find(record.device_id);
    if (it == camera_index_.end()) {
        throw ConfigError("SimImageSource: unknown device \"" + record.device_id + "\"");
    }
    const auto slash = record.path.rfind('/');
    if (slash == std::string::npos || slash + 1 >= record.path.size()) {
        throw ConfigError("SimImageSource: bad virtual path \"" + record.path + "\"");
    }
    int index = 0;
    try {
        index = std::stoi(record.path.substr(slash + 1));
    } catch (const std::exception&) {
        throw ConfigError("SimImageSource: bad image index in \"" + record.path + "\"");
    }
    if (index < 0 || index >= cfg_.images_per_device) {
        throw ConfigError("SimImageSource: image index out of range in \"" + record.path + "\"");
    }
    return render_image(cameras_[it->second], cfg_, index);
}

}  // namespace camid
