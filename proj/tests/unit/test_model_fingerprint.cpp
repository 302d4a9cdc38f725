#include <doctest.h>

#include <cmath>

#include "camid/io.hpp"
#include "camid/model_fingerprint.hpp"
#include "helpers.hpp"

using namespace camid;
using camid::test::TempDir;
using camid::test::make_raster;
using camid::test::max_abs_diff;
using camid::test::random_raster;

namespace {
Raster tile_to(const Raster& tile, int h, int w) {
    Raster out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(y, x) = tile.at(y % tile.height, x % tile.width);
    }
    return out;
}

double variance(const Raster& r) {
    const double m = mean(r);
    double s = 0.0;
    for (double v : r.data) s += (v - m) * (v - m);
    return s / static_cast<double>(r.size());
}
}  // namespace

TEST_CASE("folding an exactly periodic signal is the identity") {
    const Raster tile = random_raster(4, 4, 3, 1.0);
    const Raster periodic = tile_to(tile, 16, 20);
    const Raster folded = fold_periodic(periodic, 4);
    CHECK(max_abs_diff(folded, periodic) <= 1e-12);
}

TEST_CASE("fold output is exactly P-periodic") {
    const Raster w = random_raster(32, 24, 9);
    const Raster folded = fold_periodic(w, 8);
    for (int y = 0; y + 8 < folded.height; ++y) {
        for (int x = 0; x < folded.width; ++x) {
            CHECK(folded.at(y, x) == folded.at(y + 8, x));
        }
    }
    for (int y = 0; y < folded.height; ++y) {
        for (int x = 0; x + 8 < folded.width; ++x) {
            CHECK(folded.at(y, x) == folded.at(y, x + 8));
        }
    }
}

TEST_CASE("fold is linear in the residual") {
    const Raster w1 = random_raster(24, 24, 30);
    const Raster w2 = random_raster(24, 24, 31);
    const double a = 2.5, b = -1.25;
    Raster combo(24, 24);
    for (std::size_t i = 0; i < combo.size(); ++i) combo.data[i] = a * w1.data[i] + b * w2.data[i];
    const Raster lhs = fold_periodic(combo, 6);
    const Raster f1 = fold_periodic(w1, 6), f2 = fold_periodic(w2, 6);
    Raster rhs(24, 24);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.data[i] = a * f1.data[i] + b * f2.data[i];
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("fold suppresses white noise by about P^2 / (H W)") {
    // Each phase bin averages (H*W)/P^2 = 256 independent samples.
    double ratio_sum = 0.0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const Raster w = random_raster(128, 128, seed, 1.0);
        const Raster folded = fold_periodic(w, 8);
        ratio_sum += variance(folded) / variance(w);
    }
    const double mean_ratio = ratio_sum / 10.0;
    CHECK(mean_ratio > 0.5 / 256.0);
    CHECK(mean_ratio < 2.0 / 256.0);
}

TEST_CASE("fold brings the output closer to an embedded periodic artifact") {
    const Raster tile = random_raster(8, 8, 55, 1.0);
    const Raster artifact = tile_to(tile, 64, 64);
    for (std::uint64_t seed = 200; seed < 203; ++seed) {
        Raster noisy(64, 64);
        const Raster noise = random_raster(64, 64, seed, 1.0);
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            noisy.data[i] = artifact.data[i] + noise.data[i];
        }
        const Raster folded = fold_periodic(noisy, 8);
        auto mse = [&](const Raster& x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                s += (x.data[i] - artifact.data[i]) * (x.data[i] - artifact.data[i]);
            }
            return s / static_cast<double>(x.size());
        };
        CHECK(mse(folded) < mse(noisy));
    }
}

TEST_CASE("fold validates dimensions") {
    CHECK_THROWS_AS(fold_periodic(Raster(15, 32, 0.0), 8), DimensionError);
    CHECK_THROWS_AS(fold_periodic(Raster(32, 15, 0.0), 8), DimensionError);
    CHECK_THROWS_AS(fold_periodic(Raster(32, 32, 0.0), 1), ArgumentError);
}

TEST_CASE("surrogate extraction folds the image residual") {
    ImagePlane img;
    img.plane = random_raster(32, 32, 42, 10.0);
    for (double& v : img.plane.data) v += 128.0;
    ExtractorConfig cfg;
    cfg.period = 8;
    const Raster fp = extract_surrogate(img, cfg);
    const NoiseResidual residual = extract_residual(img, cfg.denoiser);
    CHECK(max_abs_diff(fp, fold_periodic(residual.plane, 8)) <= 1e-12);
    CHECK(cfg.id() == "surrogate-p8");
}

TEST_CASE("external noiseprints load by basename and validate dimensions") {
    TempDir tmp("external_np");
    const Raster np = random_raster(16, 16, 5);
    save_plane(np, tmp.file("img_0001.plane"));

    ExtractorConfig cfg;
    cfg.kind = ExtractorKind::External;
    cfg.external_dir = tmp.path().string();

    const Raster image_plane(16, 16, 100.0);
    const Raster loaded = load_external_noiseprint("/data/img_0001.pgm", cfg, image_plane);
    CHECK(max_abs_diff(loaded, np) <= 1e-6);  // f32 storage

    CHECK_THROWS_WITH_AS(load_external_noiseprint("/data/missing.pgm", cfg, image_plane),
                         doctest::Contains("missing.plane"), LookupError);

    const Raster wrong_size(8, 8, 0.0);
    CHECK_THROWS_AS(load_external_noiseprint("/data/img_0001.pgm", cfg, wrong_size),
                    DimensionError);
}

TEST_CASE("model reference estimation averages fingerprints") {
    const Raster x = make_raster({{1.0, 2.0}, {3.0, 4.0}});
    std::vector<Raster> single{x};
    const ModelPattern one = estimate_model_reference(single, "m0", "surrogate-p8");
    CHECK(one.plane.data == x.data);
    CHECK(one.n_images == 1);
    CHECK(one.model_id == "m0");
    CHECK(one.extractor_id == "surrogate-p8");

    Raster neg = x;
    for (double& v : neg.data) v = -v;
    std::vector<Raster> cancel{x, neg};
    const ModelPattern zero = estimate_model_reference(cancel, "m0", "surrogate-p8");
    for (double v : zero.plane.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(estimate_model_reference({}, "m0", "x"), ArgumentError);
}

TEST_CASE("model reference is permutation invariant") {
    std::vector<Raster> fps;
    for (std::uint64_t s = 0; s < 5; ++s) fps.push_back(random_raster(8, 8, 300 + s));
    const ModelPattern fwd = estimate_model_reference(fps, "m", "e");
    std::vector<Raster> shuffled{fps[4], fps[2], fps[0], fps[3], fps[1]};
    const ModelPattern rev = estimate_model_reference(shuffled, "m", "e");
    CHECK(max_abs_diff(fwd.plane, rev.plane) <= 1e-12);
}
