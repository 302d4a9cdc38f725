#include "camid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "camid/denoise.hpp"
#include "camid/io.hpp"
#include "camid/rng.hpp"

namespace camid {

namespace {

std::string two_digit(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", v);
    return buf;
}

std::string model_name(int model_index) {
    return "model" + two_digit(model_index);
}

std::string device_name(int model_index, int device_index_in_model) {
    return model_name(model_index) + "_dev" + two_digit(device_index_in_model);
}

// Separable box blur with mirror extension, running-sum implementation.
Raster box_blur(const Raster& in, int radius) {
    if (radius <= 0) return in;
    const double inv_w = 1.0 / (2.0 * radius + 1.0);
    Raster rows(in.height, in.width);
    for (int y = 0; y < in.height; ++y) {
        double s = 0.0;
        for (int dx = -radius; dx <= radius; ++dx) s += in.at(y, mirror_index(dx, in.width));
        rows.at(y, 0) = s;
        for (int x = 1; x < in.width; ++x) {
            s += in.at(y, mirror_index(x + radius, in.width));
            s -= in.at(y, mirror_index(x - radius - 1, in.width));
            rows.at(y, x) = s;
        }
    }
    Raster out(in.height, in.width);
    for (int x = 0; x < in.width; ++x) {
        double s = 0.0;
        for (int dy = -radius; dy <= radius; ++dy) s += rows.at(mirror_index(dy, in.height), x);
        out.at(0, x) = s;
        for (int y = 1; y < in.height; ++y) {
            s += rows.at(mirror_index(y + radius, in.height), x);
            s -= rows.at(mirror_index(y - radius - 1, in.height), x);
            out.at(y, x) = s;
        }
    }
    for (double& v : out.data) v *= inv_w * inv_w;
    return out;
}

}  // namespace

void validate(const SimConfig& cfg) {
    if (cfg.n_models < 1 || cfg.devices_per_model < 1 || cfg.images_per_device < 1) {
        throw ArgumentError("simulator: model/device/image counts must be >= 1");
    }
    if (cfg.image_size < 1) throw ArgumentError("simulator: image_size must be >= 1");
    if (cfg.prnu_strength < 0.0 || cfg.artifact_strength < 0.0 || cfg.sensor_noise_sigma < 0.0) {
        throw ArgumentError("simulator: strengths must be >= 0");
    }
    if (cfg.artifact_period < 2) throw ArgumentError("simulator: artifact_period must be >= 2");
    if (cfg.scene_smoothness < 0) throw ArgumentError("simulator: scene_smoothness must be >= 0");
}

std::vector<SimCamera> build_cameras(const SimConfig& cfg) {
    validate(cfg);
    std::vector<SimCamera> cameras;
    cameras.reserve(static_cast<std::size_t>(cfg.n_models) * cfg.devices_per_model);
    for (int m = 0; m < cfg.n_models; ++m) {
        Raster tile(cfg.artifact_period, cfg.artifact_period);
        Rng tile_rng(mix_keys({cfg.seed, hash_string("model-artifact"), static_cast<std::uint64_t>(m)}));
        for (double& v : tile.data) v = tile_rng.normal(0.0, cfg.artifact_strength);

        for (int d = 0; d < cfg.devices_per_model; ++d) {
            SimCamera cam;
            cam.model_id = model_name(m);
            cam.device_id = device_name(m, d);
            cam.model_index = m;
            cam.device_index = m * cfg.devices_per_model + d;
            cam.artifact_tile = tile;
            cam.prnu = Raster(cfg.image_size, cfg.image_size);
            Rng prnu_rng(mix_keys({cfg.seed, hash_string("device-prnu"),
                                   static_cast<std::uint64_t>(cam.device_index)}));
            for (double& v : cam.prnu.data) v = prnu_rng.normal(0.0, cfg.prnu_strength);
            const double prnu_mean = mean(cam.prnu);
            for (double& v : cam.prnu.data) v -= prnu_mean;
            cameras.push_back(std::move(cam));
        }
    }
    return cameras;
}

Raster render_scene(const SimConfig& cfg, int device_index, int image_index) {
    validate(cfg);
    const int n = cfg.image_size;
    Rng rng(mix_keys({cfg.seed, hash_string("scene"), static_cast<std::uint64_t>(device_index),
                      static_cast<std::uint64_t>(image_index)}));
    Raster scene(n, n);
    for (double& v : scene.data) v = rng.uniform01();
    scene = box_blur(scene, cfg.scene_smoothness);
    const auto [lo_it, hi_it] = std::minmax_element(scene.data.begin(), scene.data.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi > lo) {
        const double scale = 190.0 / (hi - lo);
        for (double& v : scene.data) v = 30.0 + (v - lo) * scale;
    } else {
        std::fill(scene.data.begin(), scene.data.end(), 125.0);
    }
    return scene;
}

ImagePlane render_image(const SimCamera& camera, const SimConfig& cfg, int image_index,
                        RenderStats* stats) {
    const int n = cfg.image_size;
    const Raster scene = render_scene(cfg, camera.device_index, image_index);
    Rng noise_rng(mix_keys({cfg.seed, hash_string("sensor-noise"),
                            static_cast<std::uint64_t>(camera.device_index),
                            static_cast<std::uint64_t>(image_index)}));

    ImagePlane img;
    img.plane = Raster(n, n);
    const int period = cfg.artifact_period;
    std::size_t clipped = 0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double artifact = camera.artifact_tile.at(y % period, x % period);
            const double noise = noise_rng.normal(0.0, cfg.sensor_noise_sigma);
            const double v =
                imaging_model(scene.at(y, x), camera.prnu.at(y, x), artifact, noise);
            if (v == 0.0 || v == 255.0) ++clipped;
            img.plane.at(y, x) = v;
        }
    }
    if (stats) {
        stats->clip_fraction = static_cast<double>(clipped) / static_cast<double>(img.plane.size());
    }
    img.meta.model_id = camera.model_id;
    img.meta.device_id = camera.device_id;
    return img;
}

Role role_for_index(int image_index, int images_per_device) {
    const int n_reference =
        static_cast<int>(std::ceil(0.6 * static_cast<double>(images_per_device)));
    const int n_train = static_cast<int>(std::floor(0.2 * static_cast<double>(images_per_device)));
    if (image_index < n_reference) return Role::Reference;
    if (image_index < n_reference + n_train) return Role::Train;
    return Role::Test;
}

DatasetManifest generate_dataset(const SimConfig& cfg, const std::filesystem::path& out_dir) {
    validate(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create \"" + out_dir.string() + "\": " + ec.message());

    const auto cameras = build_cameras(cfg);
    DatasetManifest manifest;
    manifest.records.reserve(cameras.size() * static_cast<std::size_t>(cfg.images_per_device));

    double clip_sum = 0.0;
    std::size_t n_rendered = 0;
    for (const auto& cam : cameras) {
        for (int i = 0; i < cfg.images_per_device; ++i) {
            RenderStats stats;
            const ImagePlane img = render_image(cam, cfg, i, &stats);
            clip_sum += stats.clip_fraction;
            ++n_rendered;

            char name[64];
            std::snprintf(name, sizeof(name), "%s_img%04d.plane", cam.device_id.c_str(), i);
            const std::filesystem::path path = out_dir / name;
            save_plane(img.plane, path.string());

            ManifestRecord rec;
            rec.path = name;  // relative to the manifest
            rec.model_id = cam.model_id;
            rec.device_id = cam.device_id;
            rec.role = role_for_index(i, cfg.images_per_device);
            manifest.records.push_back(std::move(rec));
        }
    }
    if (n_rendered > 0 && clip_sum / static_cast<double>(n_rendered) >= 0.01) {
        std::fprintf(stderr,
                     "warning: mean clipping rate %.3f%% >= 1%%; consider weaker artifacts/noise\n",
                     100.0 * clip_sum / static_cast<double>(n_rendered));
    }
    save_manifest(manifest, (out_dir / "manifest.json").string());
    return manifest;
}

}  // namespace camid
