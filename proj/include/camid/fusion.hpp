#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "camid/distance.hpp"
#include "camid/raster.hpp"

namespace camid {

using Vec2 = std::array<double, 2>;

enum class Label : std::uint8_t {
    H0 = 0,  // different device
    H1 = 1,  // same device
};

struct LabeledPair {
    Vec2 x;  // (d_prnu, d_np)
    Label label;
};

// Symmetric 2x2 matrix.
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }
};

Sym2 inverse(const Sym2& m);             // throws ArgumentError if singular
double quad_form(const Sym2& m, Vec2 v);  // v' m v
Vec2 solve(const Sym2& m, Vec2 b);        // m x = b
double min_eigenvalue(const Sym2& m);

struct GaussianParams {
    Vec2 mean{0.0, 0.0};
    Sym2 cov{1.0, 0.0, 1.0};
};

// Log of the bivariate normal density at x.
double gaussian_log_density(Vec2 x, const GaussianParams& params);

// Per-coordinate affine map fitted on training pairs; coordinates with
// zero spread keep scale 1.
struct Standardization {
    Vec2 mean{0.0, 0.0};
    Vec2 scale{1.0, 1.0};
};

Standardization standardize_fit(std::span<const LabeledPair> pairs);
Vec2 standardize_apply(Vec2 x, const Standardization& s);
Vec2 standardize_invert(Vec2 z, const Standardization& s);

enum class FusionMethod : std::uint8_t {
    Svm = 0,
    Lrt = 1,
    RobustLrt = 2,
    Fld = 3,
    RobustFld = 4,
    PrnuOnly = 5,
    NpOnly = 6,
};

std::string method_name(FusionMethod method);
FusionMethod parse_method(const std::string& name);  // svm|lrt|rlrt|fld|rfld|prnu|np

struct SvmParams {
    Vec2 w{0.0, 0.0};
    double b = 0.0;
};

struct FldParams {
    Vec2 w{0.0, 0.0};
};

struct HypothesisGaussians {
    GaussianParams h0;
    GaussianParams h1;
};

// Trained classifier over standardized (d_prnu, d_np) features. Exactly
// one parameter block is populated, matching `kind`; score polarity is
// uniform: higher favors H1 (same device).
struct FusionModel {
    FusionMethod kind = FusionMethod::PrnuOnly;
    Standardization standardization;
    std::optional<SvmParams> svm;
    std::optional<HypothesisGaussians> gaussians;
    std::optional<FldParams> fld;
    bool trained = false;
};

struct SvmOptions {
    double lambda = 1e-3;
    int iters = 2000;
};

struct McdOptions {
    double alpha = 0.5;
    int n_starts = 500;
    std::uint64_t seed = 0;
};

struct TrainOptions {
    SvmOptions svm{};
    McdOptions mcd{};
};

// Linear SVM by deterministic full-batch subgradient descent on the
// regularized hinge loss; features standardized internally.
FusionModel train_svm(std::span<const LabeledPair> pairs, const SvmOptions& opts = {});

// Sample mean and population covariance, regularized to be safely SPD.
// Requires n >= 3.
GaussianParams fit_gaussian_ml(std::span<const Vec2> xs);

// FAST-MCD robust location/scatter for p = 2 with consistency rescaling
// and one reweighting step. Deterministic given opts.seed. Requires
// n >= 10.
GaussianParams fit_gaussian_mcd(std::span<const Vec2> xs, const McdOptions& opts = {});

// Log-likelihood ratio log N(x|H1) - log N(x|H0) of the raw pair x,
// evaluated in the model's standardized space.
double lrt_score(const FusionModel& model, Vec2 x);

// Fisher discriminant w = normalize((S0+S1)^-1 (mu1-mu0)) over
// standardized features; throws TrainingError when mu1 == mu0.
FusionModel fld_fit(const GaussianParams& h0, const GaussianParams& h1,
                    const Standardization& standardization, FusionMethod kind = FusionMethod::Fld);

// Fits any method on labeled pairs. Both labels must be present.
FusionModel train_fusion(FusionMethod method, std::span<const LabeledPair> pairs,
                         const TrainOptions& opts = {});

double score(const FusionModel& model, Vec2 raw_pair);
double score(const FusionModel& model, const DistancePair& pair);

// Model file: magic "FUSM", kind byte, then the f64-LE parameter block
// (standardization, then kind-specific parameters).
void save_fusion_model(const FusionModel& model, const std::string& path);
FusionModel load_fusion_model(const std::string& path);

}  // namespace camid
