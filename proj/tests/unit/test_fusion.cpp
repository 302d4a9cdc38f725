#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include "camid/fusion.hpp"
#include "camid/rng.hpp"
#include "helpers.hpp"

using namespace camid;
using camid::test::TempDir;

namespace {

// Independent bivariate normal log-density: explicit 2x2 inverse and
// determinant, no shared code with the library.
double oracle_log_pdf(Vec2 x, Vec2 mu, double sxx, double sxy, double syy) {
    const double det = sxx * syy - sxy * sxy;
    const double dx = x[0] - mu[0];
    const double dy = x[1] - mu[1];
    const double quad = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
}

FusionModel identity_lrt(const GaussianParams& h0, const GaussianParams& h1) {
    FusionModel model;
    model.kind = FusionMethod::Lrt;
    model.gaussians = HypothesisGaussians{h0, h1};
    model.trained = true;
    return model;
}

std::vector<LabeledPair> two_cluster_pairs(int per_class, Vec2 mu0, Vec2 mu1, double sigma,
                                           std::uint64_t seed) {
    std::vector<LabeledPair> pairs;
    Rng rng(seed);
    for (int i = 0; i < per_class; ++i) {
        pairs.push_back({{mu1[0] + sigma * rng.normal(), mu1[1] + sigma * rng.normal()}, Label::H1});
        pairs.push_back({{mu0[0] + sigma * rng.normal(), mu0[1] + sigma * rng.normal()}, Label::H0});
    }
    return pairs;
}

}  // namespace

TEST_CASE("standardize_fit basics") {
    const std::vector<LabeledPair> pairs{{{0.0, 0.0}, Label::H0}, {{2.0, 2.0}, Label::H1}};
    const Standardization s = standardize_fit(pairs);
    CHECK(s.mean[0] == 1.0);
    CHECK(s.mean[1] == 1.0);
    CHECK(s.scale[0] == 1.0);  // population std of {0,2} is 1
    CHECK(s.scale[1] == 1.0);
    const Vec2 z = standardize_apply({2.0, 2.0}, s);
    CHECK(z[0] == 1.0);
    CHECK(z[1] == 1.0);
}

TEST_CASE("constant coordinate maps to zero with unit scale") {
    const std::vector<LabeledPair> pairs{{{5.0, 1.0}, Label::H0},
                                         {{5.0, 2.0}, Label::H1},
                                         {{5.0, 3.0}, Label::H0}};
    const Standardization s = standardize_fit(pairs);
    CHECK(s.scale[0] == 1.0);
    CHECK(standardize_apply({5.0, 2.0}, s)[0] == 0.0);
}

TEST_CASE("standardization round-trips") {
    Rng rng(5);
    std::vector<LabeledPair> pairs;
    for (int i = 0; i < 40; ++i) {
        pairs.push_back({{rng.normal(3.0, 2.0), rng.normal(-1.0, 0.5)},
                         i % 2 ? Label::H0 : Label::H1});
    }
    const Standardization s = standardize_fit(pairs);
    for (const auto& p : pairs) {
        const Vec2 back = standardize_invert(standardize_apply(p.x, s), s);
        CHECK(std::abs(back[0] - p.x[0]) <= 1e-12);
        CHECK(std::abs(back[1] - p.x[1]) <= 1e-12);
    }
}

TEST_CASE("SVM recovers the symmetric separator") {
    const std::vector<LabeledPair> pairs{{{-1.0, 0.0}, Label::H1}, {{1.0, 0.0}, Label::H0}};
    const FusionModel model = train_svm(pairs);
    REQUIRE(model.svm.has_value());
    // Boundary on x0 = 0, oriented toward the H1 side.
    CHECK(model.svm->w[0] < 0.0);
    CHECK(std::abs(model.svm->w[1]) <= 1e-9);
    CHECK(score(model, Vec2{-1.0, 0.0}) > 0.0);
    CHECK(score(model, Vec2{1.0, 0.0}) < 0.0);
    CHECK(std::abs(score(model, Vec2{-1.0, 0.0}) + score(model, Vec2{1.0, 0.0})) <= 1e-9);
}

TEST_CASE("SVM separates linearly separable clusters perfectly") {
    const auto pairs = two_cluster_pairs(100, {2.0, 2.0}, {-2.0, -2.0}, 0.5, 99);
    const FusionModel model = train_svm(pairs);
    for (const auto& p : pairs) {
        const double s = score(model, p.x);
        CHECK((p.label == Label::H1 ? s > 0.0 : s < 0.0));
    }
}

TEST_CASE("score is zero on the hyperplane") {
    const auto pairs = two_cluster_pairs(50, {3.0, 1.0}, {-1.0, -2.0}, 0.7, 123);
    const FusionModel model = train_svm(pairs);
    REQUIRE(model.svm.has_value());
    // Solve w . z + b = 0 in standardized space, map back to raw units.
    const auto& w = model.svm->w;
    const double b = model.svm->b;
    Vec2 z{0.0, 0.0};
    if (std::abs(w[0]) > std::abs(w[1])) {
        z[1] = 0.3;
        z[0] = -(b + w[1] * z[1]) / w[0];
    } else {
        z[0] = 0.3;
        z[1] = -(b + w[0] * z[0]) / w[1];
    }
    const Vec2 raw = standardize_invert(z, model.standardization);
    CHECK(std::abs(score(model, raw)) <= 1e-9);
}

TEST_CASE("SVM training is deterministic") {
    const auto pairs = two_cluster_pairs(80, {1.0, 0.0}, {0.0, 1.0}, 0.6, 7);
    const FusionModel a = train_svm(pairs);
    const FusionModel b = train_svm(pairs);
    CHECK(a.svm->w[0] == b.svm->w[0]);
    CHECK(a.svm->w[1] == b.svm->w[1]);
    CHECK(a.svm->b == b.svm->b);
}

TEST_CASE("SVM rejects single-class input") {
    const std::vector<LabeledPair> pairs{{{0.0, 0.0}, Label::H1}, {{1.0, 1.0}, Label::H1}};
    CHECK_THROWS_AS(train_svm(pairs), TrainingError);
}

TEST_CASE("fit_gaussian_ml matches hand computations") {
    const std::vector<Vec2> identical(5, Vec2{3.0, 4.0});
    const GaussianParams g = fit_gaussian_ml(identical);
    CHECK(g.mean[0] == 3.0);
    CHECK(g.mean[1] == 4.0);
    CHECK(g.cov.xx == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK(g.cov.yy == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK(g.cov.xy == 0.0);

    const std::vector<Vec2> two{{0.0, 0.0}, {2.0, 0.0}};
    CHECK_THROWS_AS(fit_gaussian_ml(two), ArgumentError);

    const std::vector<Vec2> grid{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0},
                                 {0.0, 2.0}, {1.0, 2.0}, {2.0, 2.0}};
    const GaussianParams h = fit_gaussian_ml(grid);
    CHECK(h.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.mean[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.cov.xx == doctest::Approx(2.0 / 3.0 + 1e-9).epsilon(1e-9));
    CHECK(h.cov.yy == doctest::Approx(1.0 + 1e-9).epsilon(1e-9));
    CHECK(std::abs(h.cov.xy) <= 1e-12);
}

TEST_CASE("regularized covariance is SPD even for degenerate data") {
    const std::vector<Vec2> collinear{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
    const GaussianParams g = fit_gaussian_ml(collinear);
    CHECK(min_eigenvalue(g.cov) >= 1e-10);
}

TEST_CASE("lrt_score matches hand examples with identity standardization") {
    GaussianParams h0, h1;
    h0.mean = {0.0, 0.0};
    h0.cov = {1.0, 0.0, 1.0};
    h1.mean = {1.0, 0.0};
    h1.cov = {1.0, 0.0, 1.0};
    const FusionModel model = identity_lrt(h0, h1);
    CHECK(lrt_score(model, {1.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lrt_score(model, {0.0, 0.0}) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("lrt_score matches the density oracle on unequal covariances") {
    GaussianParams h0, h1;
    h0.mean = {0.0, 0.0};
    h0.cov = {1.0, 0.0, 4.0};
    h1.mean = {1.0, 1.0};
    h1.cov = {2.0, 0.0, 1.0};
    const FusionModel model = identity_lrt(h0, h1);
    const Vec2 x{0.5, 0.5};
    const double expect = oracle_log_pdf(x, {1.0, 1.0}, 2.0, 0.0, 1.0) -
                          oracle_log_pdf(x, {0.0, 0.0}, 1.0, 0.0, 4.0);
    CHECK(lrt_score(model, x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("lrt_score matches the density oracle on random draws") {
    Rng rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        auto random_gaussian = [&]() {
            GaussianParams g;
            g.mean = {rng.normal(0.0, 2.0), rng.normal(0.0, 2.0)};
            const double a = 0.2 + rng.uniform01() * 3.0;
            const double c = 0.2 + rng.uniform01() * 3.0;
            const double b = (rng.uniform01() - 0.5) * 2.0 * 0.9 * std::sqrt(a * c);
            g.cov = {a, b, c};
            return g;
        };
        const GaussianParams h0 = random_gaussian();
        const GaussianParams h1 = random_gaussian();
        const FusionModel model = identity_lrt(h0, h1);
        const Vec2 x{rng.normal(0.0, 3.0), rng.normal(0.0, 3.0)};
        const double expect =
            oracle_log_pdf(x, h1.mean, h1.cov.xx, h1.cov.xy, h1.cov.yy) -
            oracle_log_pdf(x, h0.mean, h0.cov.xx, h0.cov.xy, h0.cov.yy);
        CHECK(lrt_score(model, x) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("fld_fit matches hand and oracle solutions") {
    GaussianParams h0, h1;
    h0.mean = {0.0, 0.0};
    h0.cov = {0.5, 0.0, 0.5};
    h1.mean = {2.0, 0.0};
    h1.cov = {0.5, 0.0, 0.5};
    const FusionModel unit = fld_fit(h0, h1, Standardization{});
    CHECK(unit.fld->w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(unit.fld->w[1]) <= 1e-12);

    h0.cov = {2.0, 0.0, 0.5};
    h1.cov = {2.0, 0.0, 0.5};
    h1.mean = {2.0, 1.0};
    const FusionModel scaled = fld_fit(h0, h1, Standardization{});
    CHECK(scaled.fld->w[0] == doctest::Approx(0.4472135954999579).epsilon(1e-9));
    CHECK(scaled.fld->w[1] == doctest::Approx(0.8944271909999159).epsilon(1e-9));
}

TEST_CASE("fld_fit matches an explicit 2x2 solve on random SPD inputs") {
    Rng rng(505);
    for (int trial = 0; trial < 200; ++trial) {
        auto spd = [&]() {
            const double a = 0.3 + rng.uniform01() * 2.0;
            const double c = 0.3 + rng.uniform01() * 2.0;
            const double b = (rng.uniform01() - 0.5) * 1.8 * std::sqrt(a * c) * 0.9;
            return Sym2{a, b, c};
        };
        GaussianParams h0, h1;
        h0.mean = {rng.normal(), rng.normal()};
        h1.mean = {h0.mean[0] + 0.5 + rng.uniform01(), h0.mean[1] + rng.normal()};
        h0.cov = spd();
        h1.cov = spd();
        const FusionModel model = fld_fit(h0, h1, Standardization{});

        // Oracle: explicit 2x2 linear solve by Cramer's rule.
        const double sxx = h0.cov.xx + h1.cov.xx;
        const double sxy = h0.cov.xy + h1.cov.xy;
        const double syy = h0.cov.yy + h1.cov.yy;
        const double det = sxx * syy - sxy * sxy;
        const double dx = h1.mean[0] - h0.mean[0];
        const double dy = h1.mean[1] - h0.mean[1];
        double wx = (syy * dx - sxy * dy) / det;
        double wy = (-sxy * dx + sxx * dy) / det;
        const double norm = std::sqrt(wx * wx + wy * wy);
        wx /= norm;
        wy /= norm;
        if (wx * dx + wy * dy < 0.0) {
            wx = -wx;
            wy = -wy;
        }
        CHECK(std::abs(model.fld->w[0] - wx) <= 1e-9);
        CHECK(std::abs(model.fld->w[1] - wy) <= 1e-9);
        CHECK(model.fld->w[0] * dx + model.fld->w[1] * dy > 0.0);
        CHECK(std::hypot(model.fld->w[0], model.fld->w[1]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fld_fit rejects coincident means") {
    GaussianParams g;
    CHECK_THROWS_AS(fld_fit(g, g, Standardization{}), TrainingError);
}

TEST_CASE("equal-covariance LRT and FLD rank identically") {
    GaussianParams h0, h1;
    h0.mean = {1.0, 2.0};
    h1.mean = {-0.5, 0.5};
    h0.cov = h1.cov = {1.5, 0.4, 0.8};
    const FusionModel lrt = identity_lrt(h0, h1);
    const FusionModel fld = fld_fit(h0, h1, Standardization{});

    Rng rng(606);
    std::vector<double> lrt_scores, fld_scores;
    for (int i = 0; i < 100; ++i) {
        const Vec2 x{rng.normal(0.0, 2.0), rng.normal(1.0, 2.0)};
        lrt_scores.push_back(lrt_score(lrt, x));
        fld_scores.push_back(score(fld, x));
    }
    std::vector<std::size_t> by_lrt(100), by_fld(100);
    for (std::size_t i = 0; i < 100; ++i) by_lrt[i] = by_fld[i] = i;
    std::sort(by_lrt.begin(), by_lrt.end(),
              [&](std::size_t a, std::size_t b) { return lrt_scores[a] < lrt_scores[b]; });
    std::sort(by_fld.begin(), by_fld.end(),
              [&](std::size_t a, std::size_t b) { return fld_scores[a] < fld_scores[b]; });
    CHECK(by_lrt == by_fld);
}

TEST_CASE("MCD stays close to ML on clean Gaussian data") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(900 + seed);
        std::vector<Vec2> xs;
        for (int i = 0; i < 500; ++i) xs.push_back({rng.normal(1.0, 1.0), rng.normal(-2.0, 2.0)});
        McdOptions opts;
        opts.seed = seed;
        const GaussianParams robust = fit_gaussian_mcd(xs, opts);
        const GaussianParams ml = fit_gaussian_ml(xs);
        const double spectral_scale = std::sqrt(std::max(ml.cov.xx, ml.cov.yy));
        const double err = std::hypot(robust.mean[0] - ml.mean[0], robust.mean[1] - ml.mean[1]);
        if (err < 0.2 * spectral_scale) ++ok;
    }
    CHECK(ok == 10);
}

TEST_CASE("MCD shrugs off 30% planted outliers") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(1200 + seed);
        std::vector<Vec2> xs;
        for (int i = 0; i < 350; ++i) xs.push_back({rng.normal(), rng.normal()});
        for (int i = 0; i < 150; ++i) {
            xs.push_back({50.0 + rng.normal(), 50.0 + rng.normal()});
        }
        McdOptions opts;
        opts.seed = seed;
        const GaussianParams robust = fit_gaussian_mcd(xs, opts);
        const GaussianParams ml = fit_gaussian_ml(xs);
        CHECK(std::hypot(robust.mean[0], robust.mean[1]) < 1.0);
        CHECK(std::hypot(ml.mean[0], ml.mean[1]) > 10.0);
    }
}

TEST_CASE("MCD is deterministic in its seed and validates inputs") {
    Rng rng(1500);
    std::vector<Vec2> xs;
    for (int i = 0; i < 60; ++i) xs.push_back({rng.normal(), rng.normal()});
    McdOptions opts;
    opts.seed = 42;
    const GaussianParams a = fit_gaussian_mcd(xs, opts);
    const GaussianParams b = fit_gaussian_mcd(xs, opts);
    CHECK(a.mean[0] == b.mean[0]);
    CHECK(a.cov.xx == b.cov.xx);
    CHECK(a.cov.xy == b.cov.xy);

    const std::vector<Vec2> five(5, Vec2{0.0, 0.0});
    CHECK_THROWS_AS(fit_gaussian_mcd(five, opts), ArgumentError);
}

TEST_CASE("score polarity: baselines negate their distance") {
    FusionModel prnu;
    prnu.kind = FusionMethod::PrnuOnly;
    prnu.trained = true;
    FusionModel np;
    np.kind = FusionMethod::NpOnly;
    np.trained = true;
    const DistancePair pair{0.3, 5.0, {}, {}};
    CHECK(score(prnu, pair) == -0.3);
    CHECK(score(np, pair) == -5.0);

    FusionModel untrained;
    CHECK_THROWS_AS(score(untrained, pair), StateError);
}

TEST_CASE("train_fusion fits every method on plausible distance data") {
    // H1 pairs concentrate at small distances, H0 at large ones.
    std::vector<LabeledPair> pairs;
    Rng rng(3000);
    for (int i = 0; i < 60; ++i) {
        pairs.push_back({{0.2 + 0.1 * rng.normal(), 1.0 + 0.2 * rng.normal()}, Label::H1});
        pairs.push_back({{1.0 + 0.15 * rng.normal(), 3.0 + 0.4 * rng.normal()}, Label::H0});
    }
    for (const auto method : {FusionMethod::Svm, FusionMethod::Lrt, FusionMethod::RobustLrt,
                              FusionMethod::Fld, FusionMethod::RobustFld}) {
        const FusionModel model = train_fusion(method, pairs, {});
        std::vector<double> h0_scores, h1_scores;
        for (const auto& p : pairs) {
            (p.label == Label::H1 ? h1_scores : h0_scores).push_back(score(model, p.x));
        }
        std::size_t wins = 0;
        for (const double s1 : h1_scores) {
            for (const double s0 : h0_scores) wins += s1 > s0;
        }
        // Well-separated clusters: essentially every H1 beats every H0.
        CHECK(wins >= h1_scores.size() * h0_scores.size() * 95 / 100);
    }
}

TEST_CASE("fusion models round-trip through save/load bit-exactly") {
    TempDir tmp("fusm");
    std::vector<LabeledPair> pairs;
    Rng rng(3100);
    for (int i = 0; i < 40; ++i) {
        pairs.push_back({{0.2 + 0.1 * rng.normal(), 1.0 + 0.2 * rng.normal()}, Label::H1});
        pairs.push_back({{1.0 + 0.15 * rng.normal(), 3.0 + 0.4 * rng.normal()}, Label::H0});
    }
    for (const auto method : {FusionMethod::Svm, FusionMethod::Lrt, FusionMethod::RobustLrt,
                              FusionMethod::Fld, FusionMethod::RobustFld, FusionMethod::PrnuOnly,
                              FusionMethod::NpOnly}) {
        const FusionModel model = train_fusion(method, pairs, {});
        const std::string path = tmp.file(method_name(method) + ".fusm");
        save_fusion_model(model, path);
        const FusionModel loaded = load_fusion_model(path);
        CHECK(loaded.kind == model.kind);
        Rng probe(3200);
        for (int i = 0; i < 25; ++i) {
            const Vec2 x{probe.uniform01() * 2.0, probe.uniform01() * 5.0};
            CHECK(score(loaded, x) == score(model, x));
        }
    }
    CHECK_THROWS_AS(load_fusion_model(tmp.file("missing.fusm")), IoError);
}

TEST_CASE("fusion model file rejects corruption") {
    TempDir tmp("fusm_bad");
    const std::string path = tmp.file("bad.fusm");
    std::ofstream(path, std::ios::binary) << "FUSMxxxx";
    CHECK_THROWS_AS(load_fusion_model(path), FormatError);
    const std::string magic = tmp.file("magic.fusm");
    std::ofstream(magic, std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(load_fusion_model(magic), FormatError);
}
