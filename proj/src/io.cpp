#include "camid/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace camid {

namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 30;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open \"" + path + "\" for reading");
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) throw IoError("cannot determine size of \"" + path + "\"");
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw IoError("short read from \"" + path + "\"");
    }
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to \"" + path + "\"");
}

// Little-endian cursor over an in-memory file image. Errors carry the
// byte offset at which parsing failed.
class Cursor {
public:
    Cursor(const std::vector<std::uint8_t>& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

    std::uint8_t u8() {
        need(1, "u8");
        return bytes_[pos_++];
    }

    std::uint16_t u16le() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32le() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }

    float f32le() {
        return std::bit_cast<float>(u32le());
    }

    std::string str(std::size_t n) {
        need(n, "string");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void expect_magic(const char (&magic)[5]) {
        need(4, "magic");
        if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
            fail(std::string("bad magic, expected \"") + magic + "\"");
        }
        pos_ += 4;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError("\"" + path_ + "\": " + msg + " at byte offset " + std::to_string(pos_));
    }

private:
    void need(std::size_t n, const char* what) const {
        if (pos_ + n > bytes_.size()) {
            throw FormatError("\"" + path_ + "\": truncated file, need " + std::to_string(n) +
                              " byte(s) for " + what + " at byte offset " + std::to_string(pos_));
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32le(std::vector<std::uint8_t>& out, float v) {
    put_u32le(out, std::bit_cast<std::uint32_t>(v));
}

void put_payload_f32(std::vector<std::uint8_t>& out, const Raster& r) {
    for (double v : r.data) put_f32le(out, static_cast<float>(v));
}

void read_payload_f32(Cursor& cur, Raster& r) {
    const std::size_t n = r.size();
    if (cur.remaining() != n * 4) {
        cur.fail("payload size mismatch: header implies " + std::to_string(n) +
                 " f32 values (" + std::to_string(n * 4) + " bytes) but " +
                 std::to_string(cur.remaining()) + " byte(s) remain");
    }
    for (std::size_t i = 0; i < n; ++i) r.data[i] = static_cast<double>(cur.f32le());
}

std::pair<int, int> checked_dims(Cursor& cur, std::uint32_t h, std::uint32_t w) {
    if (h == 0 || w == 0) cur.fail("dimensions must be >= 1");
    if (static_cast<std::size_t>(h) * static_cast<std::size_t>(w) > kMaxPixels) {
        cur.fail("raster of " + std::to_string(h) + "x" + std::to_string(w) + " is too large");
    }
    return {static_cast<int>(h), static_cast<int>(w)};
}

// --- PNM -------------------------------------------------------------

// Reads one whitespace/comment-delimited ASCII integer from a PNM header.
int pnm_int(Cursor& cur, const char* what) {
    for (;;) {
        if (cur.at_end()) cur.fail(std::string("unexpected end of header reading ") + what);
        const std::uint8_t c = cur.u8();
        if (c == '#') {
            while (!cur.at_end() && cur.u8() != '\n') {
            }
        } else if (!std::isspace(c)) {
            if (!std::isdigit(c)) cur.fail(std::string("expected digit for ") + what);
            long v = c - '0';
            while (!cur.at_end()) {
                const std::uint8_t d = cur.u8();
                if (!std::isdigit(d)) break;  // consumed the single delimiter
                v = v * 10 + (d - '0');
                if (v > std::numeric_limits<int>::max()) cur.fail(std::string(what) + " overflows");
            }
            return static_cast<int>(v);
        }
    }
}

ImagePlane load_pnm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    Cursor cur(bytes, path);
    if (cur.remaining() < 2) cur.fail("not a PNM file (empty or too short)");
    const std::uint8_t p = cur.u8();
    const std::uint8_t kind = cur.u8();
    if (p != 'P' || (kind != '5' && kind != '6')) {
        cur.fail("unsupported image format (need binary PGM \"P5\" or PPM \"P6\")");
    }
    const int channels = (kind == '5') ? 1 : 3;
    const int width = pnm_int(cur, "width");
    const int height = pnm_int(cur, "height");
    const int maxval = pnm_int(cur, "maxval");
    if (width < 1 || height < 1) cur.fail("dimensions must be >= 1");
    if (maxval < 1 || maxval > 255) cur.fail("only 8-bit PNM supported (maxval <= 255)");
    // pnm_int consumed exactly one whitespace byte after maxval; pixel
    // data starts here.
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (n > kMaxPixels) cur.fail("image too large");
    const std::size_t expected = n * static_cast<std::size_t>(channels);
    if (cur.remaining() != expected) {
        cur.fail("pixel payload is " + std::to_string(cur.remaining()) + " byte(s), expected " +
                 std::to_string(expected));
    }
    ImagePlane img;
    img.plane = Raster(height, width);
    if (channels == 1) {
        for (std::size_t i = 0; i < n; ++i) img.plane.data[i] = static_cast<double>(cur.u8());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = static_cast<double>(cur.u8());
            const double g = static_cast<double>(cur.u8());
            const double b = static_cast<double>(cur.u8());
            img.plane.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        }
    }
    img.meta.source_path = path;
    return img;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Raster load_plane(const std::string& path) {
    const auto bytes = read_file(path);
    Cursor cur(bytes, path);
    cur.expect_magic("PLNE");
    const auto h = cur.u32le();
    const auto w = cur.u32le();
    const auto [height, width] = checked_dims(cur, h, w);
    Raster r(height, width);
    read_payload_f32(cur, r);
    return r;
}

void save_plane(const Raster& r, const std::string& path) {
    require_valid(r, "save_plane");
    std::vector<std::uint8_t> out;
    out.reserve(12 + r.size() * 4);
    out.insert(out.end(), {'P', 'L', 'N', 'E'});
    put_u32le(out, static_cast<std::uint32_t>(r.height));
    put_u32le(out, static_cast<std::uint32_t>(r.width));
    put_payload_f32(out, r);
    write_file(path, out);
}

ImagePlane load_image(const std::string& path) {
    if (has_suffix(path, ".plane")) {
        ImagePlane img;
        img.plane = load_plane(path);
        img.meta.source_path = path;
        return img;
    }
    return load_pnm(read_file(path), path);
}

ImagePlane load_image(const ManifestRecord& record, const std::filesystem::path& base_dir) {
    std::filesystem::path p(record.path);
    if (p.is_relative()) p = base_dir / p;
    ImagePlane img = load_image(p.string());
    img.meta.model_id = record.model_id;
    img.meta.device_id = record.device_id;
    return img;
}

namespace {

constexpr std::uint8_t kKindDevice = 0;
constexpr std::uint8_t kKindModel = 1;

std::string pack_ids(const std::string& a, const std::string& b, const char* what) {
    if (a.find('\n') != std::string::npos || b.find('\n') != std::string::npos) {
        throw ArgumentError(std::string(what) + ": ids must not contain newline characters");
    }
    if (a.size() + 1 + b.size() > 0xffff) {
        throw ArgumentError(std::string(what) + ": ids too long for pattern file");
    }
    return a + "\n" + b;
}

std::pair<std::string, std::string> unpack_ids(const std::string& s) {
    const auto pos = s.find('\n');
    if (pos == std::string::npos) return {s, ""};
    return {s.substr(0, pos), s.substr(pos + 1)};
}

void save_pattern_common(const Raster& plane, std::uint8_t kind, std::uint32_t n_images,
                         std::uint8_t tag, std::uint8_t flags, const std::string& id,
                         const std::string& path) {
    std::vector<std::uint8_t> out;
    out.reserve(21 + id.size() + plane.size() * 4);
    out.insert(out.end(), {'P', 'F', 'P', '1'});
    out.push_back(kind);
    put_u32le(out, static_cast<std::uint32_t>(plane.height));
    put_u32le(out, static_cast<std::uint32_t>(plane.width));
    put_u32le(out, n_images);
    out.push_back(tag);
    out.push_back(flags);
    put_u16le(out, static_cast<std::uint16_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
    put_payload_f32(out, plane);
    write_file(path, out);
}

}  // namespace

void save_pattern(const DevicePattern& p, const std::string& path) {
    require_valid(p.plane, "save_pattern");
    if (p.n_images < 1) throw ArgumentError("save_pattern: n_images must be >= 1");
    save_pattern_common(p.plane, kKindDevice, static_cast<std::uint32_t>(p.n_images),
                        static_cast<std::uint8_t>(p.estimator), p.postprocessed ? 1 : 0,
                        pack_ids(p.device_id, p.model_id, "save_pattern"), path);
}

void save_pattern(const ModelPattern& p, const std::string& path) {
    require_valid(p.plane, "save_pattern");
    if (p.n_images < 1) throw ArgumentError("save_pattern: n_images must be >= 1");
    save_pattern_common(p.plane, kKindModel, static_cast<std::uint32_t>(p.n_images), 0, 0,
                        pack_ids(p.model_id, p.extractor_id, "save_pattern"), path);
}

LoadedPattern load_pattern(const std::string& path) {
    const auto bytes = read_file(path);
    Cursor cur(bytes, path);
    cur.expect_magic("PFP1");
    const std::uint8_t kind = cur.u8();
    if (kind != kKindDevice && kind != kKindModel) {
        cur.fail("unknown pattern kind " + std::to_string(kind));
    }
    const auto h = cur.u32le();
    const auto w = cur.u32le();
    const auto n_images = cur.u32le();
    if (n_images < 1) cur.fail("n_images must be >= 1");
    const std::uint8_t tag = cur.u8();
    const std::uint8_t flags = cur.u8();
    const std::uint16_t id_len = cur.u16le();
    const std::string id = cur.str(id_len);
    const auto [height, width] = checked_dims(cur, h, w);
    Raster plane(height, width);
    read_payload_f32(cur, plane);
    const auto [first_id, second_id] = unpack_ids(id);

    if (kind == kKindDevice) {
        if (tag > 1) cur.fail("unknown estimator tag " + std::to_string(tag));
        DevicePattern p;
        p.plane = std::move(plane);
        p.n_images = static_cast<int>(n_images);
        p.estimator = static_cast<PrnuEstimator>(tag);
        p.postprocessed = (flags & 1) != 0;
        p.device_id = first_id;
        p.model_id = second_id;
        return p;
    }
    ModelPattern p;
    p.plane = std::move(plane);
    p.n_images = static_cast<int>(n_images);
    p.model_id = first_id;
    p.extractor_id = second_id;
    return p;
}

DevicePattern load_device_pattern(const std::string& path) {
    auto loaded = load_pattern(path);
    if (!std::holds_alternative<DevicePattern>(loaded)) {
        throw FormatError("\"" + path + "\": expected a device pattern, found a model pattern");
    }
    return std::get<DevicePattern>(std::move(loaded));
}

ModelPattern load_model_pattern(const std::string& path) {
    auto loaded = load_pattern(path);
    if (!std::holds_alternative<ModelPattern>(loaded)) {
        throw FormatError("\"" + path + "\": expected a model pattern, found a device pattern");
    }
    return std::get<ModelPattern>(std::move(loaded));
}

DatasetManifest load_manifest(const std::string& path) {
    const auto bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("\"" + path + "\": " + e.what());
    }
    if (!j.is_array()) throw FormatError("\"" + path + "\": manifest must be a JSON array");

    DatasetManifest manifest;
    manifest.records.reserve(j.size());
    std::unordered_set<std::string> seen;
    std::size_t index = 0;
    for (const auto& item : j) {
        if (!item.is_object()) {
            throw FormatError("\"" + path + "\": record " + std::to_string(index) +
                              " is not an object");
        }
        ManifestRecord rec;
        try {
            rec.path = item.at("path").get<std::string>();
            rec.model_id = item.at("model").get<std::string>();
            rec.device_id = item.at("device").get<std::string>();
            rec.role = parse_role(item.at("role").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("\"" + path + "\": record " + std::to_string(index) + ": " +
                              e.what());
        } catch (const FormatError& e) {
            throw FormatError("\"" + path + "\": record " + std::to_string(index) + " (path \"" +
                              std::string(item.value("path", "?")) + "\"): " + e.what());
        }
        if (!seen.insert(rec.path).second) {
            throw FormatError("\"" + path + "\": duplicate path \"" + rec.path + "\" in record " +
                              std::to_string(index));
        }
        manifest.records.push_back(std::move(rec));
        ++index;
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& rec : manifest.records) {
        j.push_back({{"path", rec.path},
                     {"model", rec.model_id},
                     {"device", rec.device_id},
                     {"role", role_name(rec.role)}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("short write to \"" + path + "\"");
}

}  // namespace camid
