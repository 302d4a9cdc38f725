#include "camid/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <vector>

#include "camid/rng.hpp"

namespace camid {

namespace {

// Regularization floor for covariance eigenvalues: absolute 1e-9,
// scaled up when the data variance is itself large.
double cov_epsilon(const Sym2& cov) {
    return 1e-9 * std::max(1.0, 0.5 * cov.trace());
}

Sym2 regularize(Sym2 cov) {
    const double eps = cov_epsilon(cov);
    cov.xx += eps;
    cov.yy += eps;
    return cov;
}

GaussianParams moments(std::span<const Vec2> xs) {
    GaussianParams g;
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    for (const auto& x : xs) {
        g.mean[0] += x[0];
        g.mean[1] += x[1];
    }
    g.mean[0] *= inv_n;
    g.mean[1] *= inv_n;
    g.cov = {0.0, 0.0, 0.0};
    for (const auto& x : xs) {
        const double dx = x[0] - g.mean[0];
        const double dy = x[1] - g.mean[1];
        g.cov.xx += dx * dx;
        g.cov.xy += dx * dy;
        g.cov.yy += dy * dy;
    }
    g.cov.xx *= inv_n;
    g.cov.xy *= inv_n;
    g.cov.yy *= inv_n;
    return g;
}

}  // namespace

Sym2 inverse(const Sym2& m) {
    const double d = m.det();
    if (d == 0.0 || !std::isfinite(d)) {
        throw ArgumentError("Sym2::inverse: singular matrix");
    }
    return {m.yy / d, -m.xy / d, m.xx / d};
}

double quad_form(const Sym2& m, Vec2 v) {
    return m.xx * v[0] * v[0] + 2.0 * m.xy * v[0] * v[1] + m.yy * v[1] * v[1];
}

Vec2 solve(const Sym2& m, Vec2 b) {
    const Sym2 inv = inverse(m);
    return {inv.xx * b[0] + inv.xy * b[1], inv.xy * b[0] + inv.yy * b[1]};
}

double min_eigenvalue(const Sym2& m) {
    const double half_trace = 0.5 * m.trace();
    const double disc = std::sqrt(std::max(0.0, half_trace * half_trace - m.det()));
    return half_trace - disc;
}

double gaussian_log_density(Vec2 x, const GaussianParams& params) {
    const Sym2 inv = inverse(params.cov);
    const Vec2 centered{x[0] - params.mean[0], x[1] - params.mean[1]};
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(params.cov.det()) -
           0.5 * quad_form(inv, centered);
}

Standardization standardize_fit(std::span<const LabeledPair> pairs) {
    Standardization s;
    if (pairs.empty()) return s;
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    for (const auto& p : pairs) {
        s.mean[0] += p.x[0];
        s.mean[1] += p.x[1];
    }
    s.mean[0] *= inv_n;
    s.mean[1] *= inv_n;
    Vec2 var{0.0, 0.0};
    for (const auto& p : pairs) {
        var[0] += (p.x[0] - s.mean[0]) * (p.x[0] - s.mean[0]);
        var[1] += (p.x[1] - s.mean[1]) * (p.x[1] - s.mean[1]);
    }
    for (int c = 0; c < 2; ++c) {
        const double sd = std::sqrt(var[c] * inv_n);
        s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Vec2 standardize_apply(Vec2 x, const Standardization& s) {
    return {(x[0] - s.mean[0]) / s.scale[0], (x[1] - s.mean[1]) / s.scale[1]};
}

Vec2 standardize_invert(Vec2 z, const Standardization& s) {
    return {z[0] * s.scale[0] + s.mean[0], z[1] * s.scale[1] + s.mean[1]};
}

std::string method_name(FusionMethod method) {
    switch (method) {
        case FusionMethod::Svm: return "svm";
        case FusionMethod::Lrt: return "lrt";
        case FusionMethod::RobustLrt: return "rlrt";
        case FusionMethod::Fld: return "fld";
        case FusionMethod::RobustFld: return "rfld";
        case FusionMethod::PrnuOnly: return "prnu";
        case FusionMethod::NpOnly: return "np";
    }
    return "unknown";
}

FusionMethod parse_method(const std::string& name) {
    if (name == "svm") return FusionMethod::Svm;
    if (name == "lrt") return FusionMethod::Lrt;
    if (name == "rlrt") return FusionMethod::RobustLrt;
    if (name == "fld") return FusionMethod::Fld;
    if (name == "rfld") return FusionMethod::RobustFld;
    if (name == "prnu") return FusionMethod::PrnuOnly;
    if (name == "np") return FusionMethod::NpOnly;
    throw ArgumentError("unknown fusion method \"" + name +
                        "\" (expected svm|lrt|rlrt|fld|rfld|prnu|np)");
}

namespace {

void require_both_labels(std::span<const LabeledPair> pairs, const char* what) {
    bool h0 = false, h1 = false;
    for (const auto& p : pairs) {
        (p.label == Label::H1 ? h1 : h0) = true;
        if (h0 && h1) return;
    }
    throw TrainingError(std::string(what) + ": training data must contain both H0 and H1 pairs");
}

}  // namespace

FusionModel train_svm(std::span<const LabeledPair> pairs, const SvmOptions& opts) {
    if (pairs.size() < 2) throw TrainingError("train_svm: need at least 2 pairs");
    require_both_labels(pairs, "train_svm");
    if (!(opts.lambda > 0.0) || opts.iters < 1) {
        throw ArgumentError("train_svm: lambda must be > 0 and iters >= 1");
    }

    FusionModel model;
    model.kind = FusionMethod::Svm;
    model.standardization = standardize_fit(pairs);

    std::vector<Vec2> xs(pairs.size());
    std::vector<double> ys(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        xs[i] = standardize_apply(pairs[i].x, model.standardization);
        ys[i] = pairs[i].label == Label::H1 ? 1.0 : -1.0;
    }

    // Full-batch subgradient descent with 1/(lambda t) steps, fixed
    // sample order; seed-free and reproducible.
    Vec2 w{0.0, 0.0};
    double b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    for (int t = 1; t <= opts.iters; ++t) {
        Vec2 grad_w{opts.lambda * w[0], opts.lambda * w[1]};
        double grad_b = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double margin = ys[i] * (w[0] * xs[i][0] + w[1] * xs[i][1] + b);
            if (margin < 1.0) {
                grad_w[0] -= ys[i] * xs[i][0] * inv_n;
                grad_w[1] -= ys[i] * xs[i][1] * inv_n;
                grad_b -= ys[i] * inv_n;
            }
        }
        const double step = 1.0 / (opts.lambda * static_cast<double>(t));
        w[0] -= step * grad_w[0];
        w[1] -= step * grad_w[1];
        b -= step * grad_b;
    }

    model.svm = SvmParams{w, b};
    model.trained = true;
    return model;
}

GaussianParams fit_gaussian_ml(std::span<const Vec2> xs) {
    if (xs.size() < 3) {
        throw ArgumentError("fit_gaussian_ml: need at least 3 samples, got " +
                            std::to_string(xs.size()));
    }
    GaussianParams g = moments(xs);
    g.cov = regularize(g.cov);
    return g;
}

namespace {

// chi-square(2) inverse CDF and the chi-square(4) CDF have closed forms,
// which is all the MCD consistency factors need at p = 2.
double chi2_2_quantile(double prob) {
    return -2.0 * std::log(1.0 - prob);
}

double chi2_4_cdf(double q) {
    return 1.0 - std::exp(-0.5 * q) * (1.0 + 0.5 * q);
}

double mcd_consistency_factor(double coverage) {
    if (coverage >= 1.0) return 1.0;
    const double q = chi2_2_quantile(coverage);
    return coverage / chi2_4_cdf(q);
}

struct McdCandidate {
    GaussianParams params;
    double det = std::numeric_limits<double>::infinity();
};

// One C-step: keep the h points with smallest Mahalanobis distance,
// refit moments.
McdCandidate c_step(std::span<const Vec2> xs, const GaussianParams& params, std::size_t h,
                    std::vector<std::size_t>& order, std::vector<double>& dist2) {
    const Sym2 inv = inverse(params.cov);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Vec2 c{xs[i][0] - params.mean[0], xs[i][1] - params.mean[1]};
        dist2[i] = quad_form(inv, c);
        order[i] = i;
    }
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return dist2[a] != dist2[b] ? dist2[a] < dist2[b] : a < b;
                     });
    std::vector<Vec2> subset(h);
    for (std::size_t i = 0; i < h; ++i) subset[i] = xs[order[i]];
    McdCandidate cand;
    cand.params = moments(subset);
    cand.det = cand.params.cov.det();
    return cand;
}

}  // namespace

GaussianParams fit_gaussian_mcd(std::span<const Vec2> xs, const McdOptions& opts) {
    constexpr int p = 2;
    const std::size_t n = xs.size();
    if (n < 10) {
        throw ArgumentError("fit_gaussian_mcd: need at least 10 samples, got " +
                            std::to_string(n));
    }
    if (!(opts.alpha >= 0.5 && opts.alpha <= 1.0)) {
        throw ArgumentError("fit_gaussian_mcd: alpha must lie in [0.5, 1]");
    }
    const std::size_t h_min = (n + p + 1) / 2;
    const std::size_t h = std::clamp(
        static_cast<std::size_t>(opts.alpha * static_cast<double>(n + p + 1)), h_min, n);

    Rng rng(mix_keys({opts.seed, hash_string("fast-mcd")}));
    std::vector<std::size_t> order(n);
    std::vector<double> dist2(n);

    McdCandidate best;
    for (int start = 0; start < std::max(1, opts.n_starts); ++start) {
        // Elemental (p+1)-subset, grown until its covariance is
        // nonsingular.
        std::vector<std::size_t> idx = rng.sample_without_replacement(n, p + 1);
        std::vector<Vec2> subset;
        subset.reserve(idx.size());
        for (auto i : idx) subset.push_back(xs[i]);
        GaussianParams params = moments(subset);
        while (params.cov.det() <= 0.0 && subset.size() < n) {
            const std::size_t extra = rng.below(n);
            subset.push_back(xs[extra]);
            params = moments(subset);
        }
        if (params.cov.det() <= 0.0) break;  // all points collinear

        McdCandidate cand;
        cand.params = params;
        cand.det = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 100; ++iter) {
            McdCandidate next = c_step(xs, cand.params, h, order, dist2);
            if (next.params.cov.det() <= 0.0) {
                cand = next;
                break;
            }
            const bool converged = next.det >= cand.det * (1.0 - 1e-12);
            cand = next;
            if (converged) break;
        }
        if (cand.det < best.det) best = cand;
    }

    if (!std::isfinite(best.det)) {
        throw ArgumentError("fit_gaussian_mcd: could not find a nonsingular h-subset");
    }

    // Consistency rescaling of the raw h-subset scatter.
    GaussianParams raw = best.params;
    const double coverage = static_cast<double>(h) / static_cast<double>(n);
    const double c_raw = mcd_consistency_factor(coverage);
    raw.cov.xx *= c_raw;
    raw.cov.xy *= c_raw;
    raw.cov.yy *= c_raw;

    // One reweighting step at the chi-square(2) 0.975 quantile.
    GaussianParams result = raw;
    if (raw.cov.det() > 0.0) {
        const double cutoff = chi2_2_quantile(0.975);
        const Sym2 inv = inverse(raw.cov);
        std::vector<Vec2> kept;
        kept.reserve(n);
        for (const auto& x : xs) {
            const Vec2 c{x[0] - raw.mean[0], x[1] - raw.mean[1]};
            if (quad_form(inv, c) <= cutoff) kept.push_back(x);
        }
        if (kept.size() > static_cast<std::size_t>(p)) {
            result = moments(kept);
            const double c_rw = 0.975 / chi2_4_cdf(cutoff);
            result.cov.xx *= c_rw;
            result.cov.xy *= c_rw;
            result.cov.yy *= c_rw;
        }
    }
    result.cov = regularize(result.cov);
    return result;
}

double lrt_score(const FusionModel& model, Vec2 x) {
    if (!model.trained || !model.gaussians ||
        (model.kind != FusionMethod::Lrt && model.kind != FusionMethod::RobustLrt)) {
        throw StateError("lrt_score: model is not a trained LRT model");
    }
    const Vec2 z = standardize_apply(x, model.standardization);
    return gaussian_log_density(z, model.gaussians->h1) -
           gaussian_log_density(z, model.gaussians->h0);
}

FusionModel fld_fit(const GaussianParams& h0, const GaussianParams& h1,
                    const Standardization& standardization, FusionMethod kind) {
    if (kind != FusionMethod::Fld && kind != FusionMethod::RobustFld) {
        throw ArgumentError("fld_fit: kind must be fld or rfld");
    }
    const Vec2 delta{h1.mean[0] - h0.mean[0], h1.mean[1] - h0.mean[1]};
    if (delta[0] == 0.0 && delta[1] == 0.0) {
        throw TrainingError("fld_fit: class means coincide");
    }
    const Sym2 pooled{h0.cov.xx + h1.cov.xx, h0.cov.xy + h1.cov.xy, h0.cov.yy + h1.cov.yy};
    Vec2 w = solve(pooled, delta);
    const double norm = std::sqrt(w[0] * w[0] + w[1] * w[1]);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw TrainingError("fld_fit: degenerate discriminant direction");
    }
    w[0] /= norm;
    w[1] /= norm;
    if (w[0] * delta[0] + w[1] * delta[1] < 0.0) {
        w[0] = -w[0];
        w[1] = -w[1];
    }

    FusionModel model;
    model.kind = kind;
    model.standardization = standardization;
    model.fld = FldParams{w};
    model.gaussians = HypothesisGaussians{h0, h1};
    model.trained = true;
    return model;
}

namespace {

HypothesisGaussians fit_class_gaussians(std::span<const LabeledPair> pairs,
                                        const Standardization& s, bool robust,
                                        const McdOptions& mcd) {
    std::vector<Vec2> h0, h1;
    for (const auto& p : pairs) {
        auto& dst = p.label == Label::H1 ? h1 : h0;
        dst.push_back(standardize_apply(p.x, s));
    }
    HypothesisGaussians g;
    if (robust) {
        McdOptions mcd_h0 = mcd;
        McdOptions mcd_h1 = mcd;
        // Distinct per-class streams so class sizes do not couple.
        mcd_h0.seed = mix_keys({mcd.seed, hash_string("h0")});
        mcd_h1.seed = mix_keys({mcd.seed, hash_string("h1")});
        g.h0 = fit_gaussian_mcd(h0, mcd_h0);
        g.h1 = fit_gaussian_mcd(h1, mcd_h1);
    } else {
        g.h0 = fit_gaussian_ml(h0);
        g.h1 = fit_gaussian_ml(h1);
    }
    return g;
}

}  // namespace

FusionModel train_fusion(FusionMethod method, std::span<const LabeledPair> pairs,
                         const TrainOptions& opts) {
    switch (method) {
        case FusionMethod::PrnuOnly:
        case FusionMethod::NpOnly: {
            // Single-distance baselines carry no fitted parameters.
            FusionModel model;
            model.kind = method;
            model.trained = true;
            return model;
        }
        case FusionMethod::Svm:
            return train_svm(pairs, opts.svm);
        case FusionMethod::Lrt:
        case FusionMethod::RobustLrt: {
            require_both_labels(pairs, "train_fusion");
            FusionModel model;
            model.kind = method;
            model.standardization = standardize_fit(pairs);
            model.gaussians = fit_class_gaussians(pairs, model.standardization,
                                                  method == FusionMethod::RobustLrt, opts.mcd);
            model.trained = true;
            return model;
        }
        case FusionMethod::Fld:
        case FusionMethod::RobustFld: {
            require_both_labels(pairs, "train_fusion");
            const Standardization s = standardize_fit(pairs);
            const HypothesisGaussians g =
                fit_class_gaussians(pairs, s, method == FusionMethod::RobustFld, opts.mcd);
            return fld_fit(g.h0, g.h1, s, method);
        }
    }
    throw ArgumentError("train_fusion: unknown method");
}

double score(const FusionModel& model, Vec2 raw_pair) {
    if (!model.trained) throw StateError("score: model is not trained");
    switch (model.kind) {
        case FusionMethod::PrnuOnly:
            return -raw_pair[0];
        case FusionMethod::NpOnly:
            return -raw_pair[1];
        case FusionMethod::Svm: {
            if (!model.svm) throw StateError("score: SVM parameters missing");
            const Vec2 z = standardize_apply(raw_pair, model.standardization);
            return model.svm->w[0] * z[0] + model.svm->w[1] * z[1] + model.svm->b;
        }
        case FusionMethod::Lrt:
        case FusionMethod::RobustLrt:
            return lrt_score(model, raw_pair);
        case FusionMethod::Fld:
        case FusionMethod::RobustFld: {
            if (!model.fld) throw StateError("score: FLD parameters missing");
            // w is oriented so w'(mu1 - mu0) > 0; the projection already
            // scores H1 higher on average.
            const Vec2 z = standardize_apply(raw_pair, model.standardization);
            return model.fld->w[0] * z[0] + model.fld->w[1] * z[1];
        }
    }
    throw StateError("score: unknown model kind");
}

double score(const FusionModel& model, const DistancePair& pair) {
    return score(model, Vec2{pair.d_prnu, pair.d_np});
}

// --- model file ------------------------------------------------------

namespace {

void put_f64le(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

double get_f64le(const std::vector<std::uint8_t>& bytes, std::size_t pos) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[pos + static_cast<std::size_t>(i)];
    return std::bit_cast<double>(bits);
}

std::size_t param_count(FusionMethod kind) {
    switch (kind) {
        case FusionMethod::Svm: return 3;
        case FusionMethod::Lrt:
        case FusionMethod::RobustLrt: return 10;
        case FusionMethod::Fld:
        case FusionMethod::RobustFld: return 12;  // w plus the fitted gaussians
        case FusionMethod::PrnuOnly:
        case FusionMethod::NpOnly: return 0;
    }
    return 0;
}

void put_gaussians(std::vector<std::uint8_t>& out, const HypothesisGaussians& g) {
    for (const auto* gp : {&g.h0, &g.h1}) {
        put_f64le(out, gp->mean[0]);
        put_f64le(out, gp->mean[1]);
        put_f64le(out, gp->cov.xx);
        put_f64le(out, gp->cov.xy);
        put_f64le(out, gp->cov.yy);
    }
}

HypothesisGaussians get_gaussians(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    HypothesisGaussians g;
    for (auto* gp : {&g.h0, &g.h1}) {
        gp->mean[0] = get_f64le(bytes, pos); pos += 8;
        gp->mean[1] = get_f64le(bytes, pos); pos += 8;
        gp->cov.xx = get_f64le(bytes, pos); pos += 8;
        gp->cov.xy = get_f64le(bytes, pos); pos += 8;
        gp->cov.yy = get_f64le(bytes, pos); pos += 8;
    }
    return g;
}

}  // namespace

void save_fusion_model(const FusionModel& model, const std::string& path) {
    if (!model.trained) throw StateError("save_fusion_model: model is not trained");
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'F', 'U', 'S', 'M'});
    out.push_back(static_cast<std::uint8_t>(model.kind));
    put_f64le(out, model.standardization.mean[0]);
    put_f64le(out, model.standardization.mean[1]);
    put_f64le(out, model.standardization.scale[0]);
    put_f64le(out, model.standardization.scale[1]);
    switch (model.kind) {
        case FusionMethod::Svm:
            put_f64le(out, model.svm->w[0]);
            put_f64le(out, model.svm->w[1]);
            put_f64le(out, model.svm->b);
            break;
        case FusionMethod::Lrt:
        case FusionMethod::RobustLrt:
            put_gaussians(out, *model.gaussians);
            break;
        case FusionMethod::Fld:
        case FusionMethod::RobustFld:
            put_f64le(out, model.fld->w[0]);
            put_f64le(out, model.fld->w[1]);
            put_gaussians(out, *model.gaussians);
            break;
        case FusionMethod::PrnuOnly:
        case FusionMethod::NpOnly:
            break;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open \"" + path + "\" for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("short write to \"" + path + "\"");
}

FusionModel load_fusion_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open \"" + path + "\" for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 5 || std::memcmp(bytes.data(), "FUSM", 4) != 0) {
        throw FormatError("\"" + path + "\": not a fusion model file (bad magic)");
    }
    const std::uint8_t kind_byte = bytes[4];
    if (kind_byte > static_cast<std::uint8_t>(FusionMethod::NpOnly)) {
        throw FormatError("\"" + path + "\": unknown model kind " + std::to_string(kind_byte));
    }
    FusionModel model;
    model.kind = static_cast<FusionMethod>(kind_byte);
    const std::size_t expected = 5 + 8 * (4 + param_count(model.kind));
    if (bytes.size() != expected) {
        throw FormatError("\"" + path + "\": expected " + std::to_string(expected) +
                          " bytes for a " + method_name(model.kind) + " model, found " +
                          std::to_string(bytes.size()));
    }
    std::size_t pos = 5;
    model.standardization.mean[0] = get_f64le(bytes, pos); pos += 8;
    model.standardization.mean[1] = get_f64le(bytes, pos); pos += 8;
    model.standardization.scale[0] = get_f64le(bytes, pos); pos += 8;
    model.standardization.scale[1] = get_f64le(bytes, pos); pos += 8;
    if (!(model.standardization.scale[0] > 0.0) || !(model.standardization.scale[1] > 0.0)) {
        throw FormatError("\"" + path + "\": standardization scales must be positive");
    }
    switch (model.kind) {
        case FusionMethod::Svm: {
            SvmParams svm;
            svm.w[0] = get_f64le(bytes, pos); pos += 8;
            svm.w[1] = get_f64le(bytes, pos); pos += 8;
            svm.b = get_f64le(bytes, pos); pos += 8;
            model.svm = svm;
            break;
        }
        case FusionMethod::Lrt:
        case FusionMethod::RobustLrt:
            model.gaussians = get_gaussians(bytes, pos);
            break;
        case FusionMethod::Fld:
        case FusionMethod::RobustFld: {
            FldParams fld;
            fld.w[0] = get_f64le(bytes, pos); pos += 8;
            fld.w[1] = get_f64le(bytes, pos); pos += 8;
            model.fld = fld;
            model.gaussians = get_gaussians(bytes, pos);
            break;
        }
        case FusionMethod::PrnuOnly:
        case FusionMethod::NpOnly:
            break;
    }
    model.trained = true;
    return model;
}

}  // namespace camid
