// camid: camera source identification toolkit.
//
// Pipeline subcommands: simulate -> fingerprint -> train -> evaluate /
// match. All stages exchange file artifacts (.plane rasters, .pat
// patterns, fusion model files, CSV reports) and every randomized step
// takes an explicit --seed, so reruns are byte-identical.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "camid/evaluation.hpp"
#include "camid/fingerprint.hpp"
#include "camid/io.hpp"
#include "camid/simulator.hpp"

namespace {

using namespace camid;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConfig = 4;

int exit_code_for(const Error& e) {
    if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    return kExitData;
}

struct SimulateArgs {
    SimConfig cfg;
    std::string out_dir;
};

struct FingerprintArgs {
    std::string manifest_path;
    std::string device_id;
    std::string model_id;
    std::string kind = "device";
    std::string estimator = "avg";
    std::string postprocess_flag = "on";
    std::string extractor = "surrogate";
    std::string noiseprint_dir;
    std::string out_path;
    DenoiserConfig denoiser;
    int period = 8;
};

struct TrainArgs {
    std::string pairs_path;
    std::string method = "fld";
    std::string out_path;
    SvmOptions svm;
    McdOptions mcd;
};

struct EvaluateArgs {
    std::string manifest_path;
    std::string conditions = "64:1,64:10,256:10";
    std::vector<std::string> methods{"prnu", "np", "svm", "lrt", "rlrt", "fld", "rfld"};
    std::string out_dir = "eval_out";
    std::uint64_t seed = 0;
    int threads = 0;
    std::string estimator = "avg";
    std::string postprocess_flag = "on";
    DenoiserConfig denoiser;
    int period = 8;
    std::string noiseprint_dir;
    SvmOptions svm;
    McdOptions mcd;
};

struct MatchArgs {
    std::string image_path;
    std::vector<std::string> device_patterns;
    std::vector<std::string> model_patterns;
    std::string model_path;
    int d = 64;
    DenoiserConfig denoiser;
    int period = 8;
    std::string noiseprint_dir;
};

ExtractorConfig make_extractor(const std::string& kind, int period, const DenoiserConfig& denoiser,
                               const std::string& noiseprint_dir) {
    ExtractorConfig cfg;
    if (kind == "surrogate") {
        cfg.kind = ExtractorKind::SurrogatePeriodic;
    } else if (kind == "external") {
        cfg.kind = ExtractorKind::External;
        if (noiseprint_dir.empty()) {
            throw UsageError("external extractor requires --noiseprint-dir");
        }
    } else {
        throw UsageError("unknown extractor \"" + kind + "\" (expected surrogate|external)");
    }
    cfg.period = period;
    cfg.denoiser = denoiser;
    cfg.external_dir = noiseprint_dir;
    return cfg;
}

bool parse_on_off(const std::string& value, const char* flag) {
    if (value == "on") return true;
    if (value == "off") return false;
    throw UsageError(std::string(flag) + " must be on|off, got \"" + value + "\"");
}

int run_simulate(const SimulateArgs& args) {
    const DatasetManifest manifest = generate_dataset(args.cfg, args.out_dir);
    std::cout << "wrote " << manifest.records.size() << " images and manifest.json to "
              << args.out_dir << "\n";
    return kExitOk;
}

int run_fingerprint(const FingerprintArgs& args) {
    if (args.kind != "device" && args.kind != "model") {
        throw UsageError("--kind must be device|model");
    }
    const bool want_device = args.kind == "device";
    if (want_device && args.device_id.empty()) {
        throw UsageError("device fingerprint requires --device");
    }
    if (!want_device && args.device_id.empty() && args.model_id.empty()) {
        throw UsageError("model fingerprint requires --device or --model");
    }
    const DatasetManifest manifest = load_manifest(args.manifest_path);
    const auto base_dir = std::filesystem::path(args.manifest_path).parent_path();

    std::vector<ManifestRecord> selected;
    for (const auto& rec : manifest.records) {
        if (rec.role != Role::Reference) continue;
        if (!args.device_id.empty() && rec.device_id != args.device_id) continue;
        if (!args.model_id.empty() && rec.model_id != args.model_id) continue;
        selected.push_back(rec);
    }
    if (selected.empty()) {
        throw ConfigError("no reference-role images match the requested device/model");
    }

    if (want_device) {
        const bool use_ml = args.estimator == "ml";
        if (!use_ml && args.estimator != "avg") {
            throw UsageError("--estimator must be avg|ml");
        }
        std::vector<NoiseResidual> residuals;
        std::vector<ImagePlane> images;
        residuals.reserve(selected.size());
        for (const auto& rec : selected) {
            ImagePlane img = load_image(rec, base_dir);
            residuals.push_back(extract_residual(img, args.denoiser));
            if (use_ml) images.push_back(std::move(img));
        }
        DevicePattern pattern =
            use_ml ? estimate_prnu_ml(residuals, images) : estimate_prnu_average(residuals);
        if (parse_on_off(args.postprocess_flag, "--postprocess")) {
            pattern = postprocess(pattern);
        }
        save_pattern(pattern, args.out_path);
        std::cout << "device pattern for " << pattern.device_id << " from " << pattern.n_images
                  << " image(s) -> " << args.out_path << "\n";
        return kExitOk;
    }

    const ExtractorConfig extractor =
        make_extractor(args.extractor, args.period, args.denoiser, args.noiseprint_dir);
    std::vector<Raster> fingerprints;
    fingerprints.reserve(selected.size());
    std::string model_id = args.model_id;
    for (const auto& rec : selected) {
        const ImagePlane img = load_image(rec, base_dir);
        fingerprints.push_back(extract_model_fingerprint(img, extractor));
        if (model_id.empty()) model_id = rec.model_id;
    }
    const ModelPattern pattern = estimate_model_reference(fingerprints, model_id, extractor.id());
    save_pattern(pattern, args.out_path);
    std::cout << "model pattern for " << pattern.model_id << " from " << pattern.n_images
              << " image(s) -> " << args.out_path << "\n";
    return kExitOk;
}

std::vector<LabeledPair> load_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open \"" + path + "\" for reading");
    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        LabeledPair pair{};
        std::string label;
        if (!(row >> pair.x[0] >> pair.x[1] >> label)) {
            if (line_no == 1) continue;  // header
            throw FormatError("\"" + path + "\": bad pair on line " + std::to_string(line_no));
        }
        if (label == "1" || label == "H1") {
            pair.label = Label::H1;
        } else if (label == "0" || label == "H0") {
            pair.label = Label::H0;
        } else {
            throw FormatError("\"" + path + "\": bad label \"" + label + "\" on line " +
                              std::to_string(line_no));
        }
        pairs.push_back(pair);
    }
    if (pairs.empty()) throw FormatError("\"" + path + "\": no pairs found");
    return pairs;
}

int run_train(const TrainArgs& args) {
    const auto pairs = load_pairs_csv(args.pairs_path);
    TrainOptions opts;
    opts.svm = args.svm;
    opts.mcd = args.mcd;
    const FusionModel model = train_fusion(parse_method(args.method), pairs, opts);
    save_fusion_model(model, args.out_path);
    std::cout << "trained " << method_name(model.kind) << " on " << pairs.size() << " pairs -> "
              << args.out_path << "\n";
    return kExitOk;
}

int run_evaluate(const EvaluateArgs& args) {
    const DatasetManifest manifest = load_manifest(args.manifest_path);
    const FileImageSource source(std::filesystem::path(args.manifest_path).parent_path());
    const std::vector<EvalCondition> conditions = parse_conditions(args.conditions);
    std::vector<FusionMethod> methods;
    methods.reserve(args.methods.size());
    for (const auto& name : args.methods) methods.push_back(parse_method(name));

    GridOptions opts;
    opts.pipeline.denoiser = args.denoiser;
    opts.pipeline.extractor = make_extractor(args.noiseprint_dir.empty() ? "surrogate" : "external",
                                             args.period, args.denoiser, args.noiseprint_dir);
    if (args.estimator == "ml") {
        opts.estimator = PrnuEstimator::MaximumLikelihood;
    } else if (args.estimator != "avg") {
        throw UsageError("--estimator must be avg|ml");
    }
    opts.postprocess_refs = parse_on_off(args.postprocess_flag, "--postprocess");
    opts.train.svm = args.svm;
    opts.train.mcd = args.mcd;
    opts.threads = args.threads;

    const EvalReport report = run_grid(source, manifest, conditions, methods, args.seed, opts);
    write_report(report, args.out_dir);
    std::cout << "wrote report.csv and " << report.cells.size() << " ROC file(s) to "
              << args.out_dir << "\n";
    return kExitOk;
}

int run_match(const MatchArgs& args) {
    if (args.device_patterns.empty()) {
        throw UsageError("match: no candidate device patterns given");
    }
    const FusionModel model = load_fusion_model(args.model_path);

    std::vector<DevicePattern> devices;
    devices.reserve(args.device_patterns.size());
    for (const auto& path : args.device_patterns) {
        devices.push_back(load_device_pattern(path));
    }
    {
        std::vector<std::string> ids;
        for (const auto& d : devices) ids.push_back(d.device_id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw ConfigError("match: duplicate device ids among the candidate patterns");
        }
    }
    std::map<std::string, ModelPattern> models_by_id;
    for (const auto& path : args.model_patterns) {
        ModelPattern p = load_model_pattern(path);
        models_by_id[p.model_id] = std::move(p);
    }

    PipelineConfig cfg;
    cfg.denoiser = args.denoiser;
    cfg.extractor = make_extractor(args.noiseprint_dir.empty() ? "surrogate" : "external",
                                   args.period, args.denoiser, args.noiseprint_dir);

    const ImagePlane image = load_image(args.image_path);
    const TestFeatures features = compute_test_features(image, cfg);

    struct Row {
        DistancePair pair;
        double score = 0.0;
    };
    std::vector<Row> rows;
    rows.reserve(devices.size());
    for (const auto& device : devices) {
        const auto it = models_by_id.find(device.model_id);
        if (it == models_by_id.end()) {
            throw ConfigError("match: no model pattern for model \"" + device.model_id +
                              "\" (device \"" + device.device_id + "\")");
        }
        Row row;
        row.pair = distance_pair(features, device, it->second, args.d);
        row.score = score(model, row.pair);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.score > b.score;
    });

    std::printf("%-24s %-16s %12s %12s %12s\n", "device", "model", "d_prnu", "d_np", "score");
    for (const auto& row : rows) {
        std::printf("%-24s %-16s %12.6f %12.6f %12.6f\n", row.pair.ref_meta.device_id.c_str(),
                    row.pair.ref_meta.model_id.c_str(), row.pair.d_prnu, row.pair.d_np, row.score);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camid: PRNU + camera-model fingerprint source identification"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic camera dataset");
    simulate->add_option("--models", sim.cfg.n_models, "Number of camera models")
        ->capture_default_str();
    simulate->add_option("--devices-per-model", sim.cfg.devices_per_model, "Devices per model")
        ->capture_default_str();
    simulate->add_option("--images", sim.cfg.images_per_device, "Images per device")
        ->capture_default_str();
    simulate->add_option("--size", sim.cfg.image_size, "Image side length in pixels")
        ->capture_default_str();
    simulate->add_option("--prnu-strength", sim.cfg.prnu_strength, "PRNU sigma_K (multiplicative)")
        ->capture_default_str();
    simulate->add_option("--artifact-period", sim.cfg.artifact_period,
                         "Model artifact period in pixels")
        ->capture_default_str();
    simulate->add_option("--artifact-strength", sim.cfg.artifact_strength,
                         "Model artifact sigma (luminance)")
        ->capture_default_str();
    simulate->add_option("--scene-smoothness", sim.cfg.scene_smoothness,
                         "Scene box-blur radius in pixels")
        ->capture_default_str();
    simulate->add_option("--noise-sigma", sim.cfg.sensor_noise_sigma,
                         "Sensor noise sigma (luminance)")
        ->capture_default_str();
    simulate->add_option("--seed", sim.cfg.seed, "Simulation seed")->capture_default_str();
    simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();

    FingerprintArgs fp;
    auto* fingerprint = app.add_subcommand("fingerprint", "Estimate a reference pattern");
    fingerprint->add_option("--manifest", fp.manifest_path, "Dataset manifest JSON")->required();
    fingerprint->add_option("--device", fp.device_id, "Device id to estimate");
    fingerprint->add_option("--model", fp.model_id, "Model id (model patterns only)");
    fingerprint->add_option("--kind", fp.kind, "Pattern kind: device|model")
        ->capture_default_str();
    fingerprint->add_option("--estimator", fp.estimator, "PRNU estimator: avg|ml")
        ->capture_default_str();
    fingerprint->add_option("--postprocess", fp.postprocess_flag,
                            "Zero-mean + DFT Wiener cleanup: on|off")
        ->capture_default_str();
    fingerprint->add_option("--extractor", fp.extractor, "Model extractor: surrogate|external")
        ->capture_default_str();
    fingerprint->add_option("--period", fp.period, "Surrogate folding period")
        ->capture_default_str();
    fingerprint->add_option("--noiseprint-dir", fp.noiseprint_dir,
                            "Directory of external noiseprint .plane files");
    fingerprint->add_option("--denoise-window", fp.denoiser.window, "Denoiser window (odd)")
        ->capture_default_str();
    fingerprint->add_option("--denoise-sigma2", fp.denoiser.noise_variance,
                            "Denoiser noise variance")
        ->capture_default_str();
    fingerprint->add_option("--out", fp.out_path, "Output .pat file")->required();

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a fusion classifier on distance pairs");
    train->add_option("--pairs-in", tr.pairs_path, "CSV of d_prnu,d_np,label (label 0/1)")
        ->required();
    train->add_option("--method", tr.method, "svm|lrt|rlrt|fld|rfld")->capture_default_str();
    train->add_option("--svm-lambda", tr.svm.lambda, "SVM regularization")->capture_default_str();
    train->add_option("--svm-iters", tr.svm.iters, "SVM subgradient iterations")
        ->capture_default_str();
    train->add_option("--mcd-alpha", tr.mcd.alpha, "MCD support fraction")->capture_default_str();
    train->add_option("--mcd-starts", tr.mcd.n_starts, "MCD random starts")->capture_default_str();
    train->add_option("--seed", tr.mcd.seed, "Seed for the MCD starts")->capture_default_str();
    train->add_option("--out", tr.out_path, "Output model file")->required();

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Run closed-set and open-set grids");
    evaluate->add_option("--manifest", ev.manifest_path, "Dataset manifest JSON")->required();
    evaluate->add_option("--conditions", ev.conditions, "Comma list of d:N conditions")
        ->capture_default_str();
    evaluate->add_option("--methods", ev.methods, "Methods to evaluate")->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "Evaluation seed")->capture_default_str();
    evaluate->add_option("--threads", ev.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    evaluate->add_option("--estimator", ev.estimator, "PRNU estimator: avg|ml")
        ->capture_default_str();
    evaluate->add_option("--postprocess", ev.postprocess_flag, "Reference cleanup: on|off")
        ->capture_default_str();
    evaluate->add_option("--denoise-window", ev.denoiser.window, "Denoiser window (odd)")
        ->capture_default_str();
    evaluate->add_option("--denoise-sigma2", ev.denoiser.noise_variance,
                         "Denoiser noise variance")
        ->capture_default_str();
    evaluate->add_option("--period", ev.period, "Surrogate folding period")->capture_default_str();
    evaluate->add_option("--noiseprint-dir", ev.noiseprint_dir,
                         "Use external noiseprints from this directory");
    evaluate->add_option("--svm-lambda", ev.svm.lambda, "SVM regularization")
        ->capture_default_str();
    evaluate->add_option("--svm-iters", ev.svm.iters, "SVM subgradient iterations")
        ->capture_default_str();
    evaluate->add_option("--mcd-alpha", ev.mcd.alpha, "MCD support fraction")
        ->capture_default_str();
    evaluate->add_option("--mcd-starts", ev.mcd.n_starts, "MCD random starts")
        ->capture_default_str();
    evaluate->add_option("--out-dir", ev.out_dir, "Report output directory")
        ->capture_default_str();

    MatchArgs ma;
    auto* match = app.add_subcommand("match", "Rank candidate devices for one test image");
    match->add_option("--image", ma.image_path, "Test image (.pgm/.ppm/.plane)")->required();
    match->add_option("--device-pattern", ma.device_patterns, "Candidate device .pat file(s)")
        ->required();
    match->add_option("--model-pattern", ma.model_patterns, "Model .pat file(s), matched by model id")
        ->required();
    match->add_option("--fusion-model", ma.model_path, "Trained fusion model file")->required();
    match->add_option("--d", ma.d, "Center crop size")->capture_default_str();
    match->add_option("--denoise-window", ma.denoiser.window, "Denoiser window (odd)")
        ->capture_default_str();
    match->add_option("--denoise-sigma2", ma.denoiser.noise_variance, "Denoiser noise variance")
        ->capture_default_str();
    match->add_option("--period", ma.period, "Surrogate folding period")->capture_default_str();
    match->add_option("--noiseprint-dir", ma.noiseprint_dir,
                      "Use external noiseprints from this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (fingerprint->parsed()) return run_fingerprint(fp);
        if (train->parsed()) return run_train(tr);
        if (evaluate->parsed()) return run_evaluate(ev);
        if (match->parsed()) return run_match(ma);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
