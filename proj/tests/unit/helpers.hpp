#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "camid/raster.hpp"
#include "camid/rng.hpp"

namespace camid::test {

inline Raster make_raster(std::initializer_list<std::initializer_list<double>> rows) {
    Raster r(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (double v : row) r.at(y, x++) = v;
        ++y;
    }
    return r;
}

inline Raster random_raster(int h, int w, std::uint64_t seed, double sigma = 1.0) {
    Raster r(h, w);
    Rng rng(seed);
    for (double& v : r.data) v = rng.normal(0.0, sigma);
    return r;
}

inline double max_abs_diff(const Raster& a, const Raster& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    return worst;
}

// Unique scratch directory under the build tree, wiped on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("camid_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }
    std::string file(const std::string& name) const { return (dir_ / name).string(); }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path dir_;
};

}  // namespace camid::test
