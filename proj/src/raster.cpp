#include "camid/raster.hpp"

#include <cmath>

namespace camid {

void require_valid(const Raster& r, const std::string& what) {
    if (r.height < 1 || r.width < 1) {
        throw ArgumentError(what + ": raster dimensions must be >= 1, got " +
                            std::to_string(r.height) + "x" + std::to_string(r.width));
    }
    if (r.data.size() != static_cast<std::size_t>(r.height) * static_cast<std::size_t>(r.width)) {
        throw ArgumentError(what + ": data length " + std::to_string(r.data.size()) +
                            " does not match " + std::to_string(r.height) + "x" +
                            std::to_string(r.width));
    }
    for (double v : r.data) {
        if (!std::isfinite(v)) {
            throw ArgumentError(what + ": raster contains non-finite values");
        }
    }
}

void require_same_shape(const Raster& a, const Raster& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw DimensionError(what + ": shape mismatch " + std::to_string(a.height) + "x" +
                             std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                             std::to_string(b.width));
    }
}

double sum(const Raster& r) {
    double s = 0.0;
    for (double v : r.data) s += v;
    return s;
}

double energy(const Raster& r) {
    double s = 0.0;
    for (double v : r.data) s += v * v;
    return s;
}

double mean(const Raster& r) {
    return r.data.empty() ? 0.0 : sum(r) / static_cast<double>(r.data.size());
}

Raster flip_horizontal(const Raster& r) {
    Raster out(r.height, r.width);
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            out.at(y, x) = r.at(y, r.width - 1 - x);
        }
    }
    return out;
}

Raster flip_vertical(const Raster& r) {
    Raster out(r.height, r.width);
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            out.at(y, x) = r.at(r.height - 1 - y, x);
        }
    }
    return out;
}

std::string role_name(Role role) {
    switch (role) {
        case Role::Reference: return "reference";
        case Role::Train: return "train";
        case Role::Test: return "test";
    }
    return "unknown";
}

Role parse_role(const std::string& name) {
    if (name == "reference") return Role::Reference;
    if (name == "train") return Role::Train;
    if (name == "test") return Role::Test;
    throw FormatError("unknown role \"" + name + "\" (expected reference|train|test)");
}

}  // namespace camid
