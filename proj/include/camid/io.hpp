#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "camid/raster.hpp"

namespace camid {

// Supported image inputs:
//   - binary PGM "P5" (8 bit), byte b decodes to the real value b
//   - binary PPM "P6" (8 bit), reduced to luminance 0.299R + 0.587G + 0.114B
//   - raw plane ".plane": magic "PLNE", u32-LE height, u32-LE width,
//     then height*width f32-LE values, row-major
ImagePlane load_image(const std::string& path);

// Same, with metadata taken from a manifest record. Relative record paths
// resolve against base_dir.
ImagePlane load_image(const ManifestRecord& record, const std::filesystem::path& base_dir);

Raster load_plane(const std::string& path);
void save_plane(const Raster& r, const std::string& path);

// Pattern file ".pat": magic "PFP1", u8 kind (0 = device, 1 = model),
// u32-LE height, u32-LE width, u32-LE n_images, u8 tag (device: estimator,
// model: reserved 0), u8 flags (bit 0: postprocessed), u16-LE id length,
// id bytes, then height*width f32-LE values. The id field packs two
// strings separated by '\n': device kind stores device_id/model_id, model
// kind stores model_id/extractor_id.
void save_pattern(const DevicePattern& p, const std::string& path);
void save_pattern(const ModelPattern& p, const std::string& path);

using LoadedPattern = std::variant<DevicePattern, ModelPattern>;
LoadedPattern load_pattern(const std::string& path);

// Typed loads; throw FormatError if the file holds the other kind.
DevicePattern load_device_pattern(const std::string& path);
ModelPattern load_model_pattern(const std::string& path);

// Manifest: UTF-8 JSON array of {"path","model","device","role"},
// role in {reference, train, test}. Duplicate paths are rejected, which
// also guarantees the roles partition the image set.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

}  // namespace camid
