#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "camid/distance.hpp"
#include "camid/fusion.hpp"
#include "camid/raster.hpp"

namespace camid {

struct EvalCondition {
    int crop_d = 64;
    int n_ref = 1;
    int repetitions = 10;
};

// Applies the default repetition rule: 10 when n_ref < 100, else 1.
EvalCondition make_condition(int crop_d, int n_ref);

struct RocPoint {
    double p_fa = 0.0;
    double p_d = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // threshold sweep, monotone in both axes
    double auc = 0.5;
};

// ROC by sweeping thresholds over the sorted unique scores; AUC by the
// Mann-Whitney pair statistic (ties count 1/2), which equals the
// trapezoidal area under the swept curve.
RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels);

using Scorer = std::function<double(const DistancePair&)>;

Scorer make_scorer(const FusionModel& model);

struct DeviceRefs {
    DevicePattern device;
    ModelPattern model;
};

using ReferenceSet = std::map<std::string, DeviceRefs>;  // keyed by device_id

// Fraction of test images whose argmax-score device matches their true
// device; ties break toward the lexicographically lowest device_id.
double closed_set_accuracy(const ReferenceSet& refs, std::span<const ImagePlane> tests,
                           const Scorer& scorer, int d, const PipelineConfig& cfg);

// Scores every (test, candidate-device) combination, H1 iff same device.
RocResult open_set_evaluate(const ReferenceSet& refs, std::span<const ImagePlane> tests,
                            const Scorer& scorer, int d, const PipelineConfig& cfg);

// Resolves manifest records to pixel data; lets the grid run over files
// or over in-memory synthetic datasets.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    virtual ImagePlane load(const ManifestRecord& record) const = 0;
};

class FileImageSource : public ImageSource {
public:
    explicit FileImageSource(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}
    ImagePlane load(const ManifestRecord& record) const override;

private:
    std::filesystem::path base_dir_;
};

struct EvalCell {
    EvalCondition condition;
    FusionMethod method = FusionMethod::PrnuOnly;
    double accuracy = 0.0;        // closed-set, averaged over repetitions
    double auc = 0.0;             // open-set, averaged over repetitions
    std::vector<RocPoint> roc;    // pooled over repetitions
    int n_devices = 0;
    int n_tests = 0;              // per repetition
    int n_train_pairs = 0;        // per repetition
};

struct EvalReport {
    std::vector<EvalCell> cells;
};

struct GridOptions {
    PipelineConfig pipeline{};
    PrnuEstimator estimator = PrnuEstimator::Average;
    bool postprocess_refs = true;
    TrainOptions train{};
    int threads = 0;  // 0 = hardware concurrency
};

// Full protocol: per condition and repetition, sample n_ref
// reference-role images per device (deterministic in seed and repetition
// index), estimate device and model references from those same images,
// fit every method on train-role pairs, then evaluate the closed-set and
// open-set scenarios on test-role images.
EvalReport run_grid(const ImageSource& source, const DatasetManifest& manifest,
                    std::span<const EvalCondition> conditions,
                    std::span<const FusionMethod> methods, std::uint64_t seed,
                    const GridOptions& opts = {});

// report.csv plus one roc_d<d>_N<n>_<method>.csv per cell.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

// "64:1,256:10" -> conditions with default repetitions.
std::vector<EvalCondition> parse_conditions(const std::string& text);

}  // namespace camid
