#include "camid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "camid/fingerprint.hpp"
#include "camid/io.hpp"
#include "camid/parallel.hpp"
#include "camid/rng.hpp"

namespace camid {

EvalCondition make_condition(int crop_d, int n_ref) {
    EvalCondition c;
    c.crop_d = crop_d;
    c.n_ref = n_ref;
    c.repetitions = n_ref < 100 ? 10 : 1;
    return c;
}

RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) {
        throw ArgumentError("roc_auc: scores and labels differ in length");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (const Label l : labels) (l == Label::H1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw ArgumentError("roc_auc: both classes must be present");
    }
    for (const double s : scores) {
        if (!std::isfinite(s)) throw ArgumentError("roc_auc: non-finite score");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    // Descending threshold sweep; each unique score contributes one
    // operating point. Pair counting in the same pass: positives beat
    // all negatives with strictly smaller scores, ties count half.
    RocResult result;
    result.points.reserve(scores.size() + 1);
    result.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double wins2 = 0.0;  // 2 * (#(pos > neg) + 0.5 * #ties)
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t block_pos = 0, block_neg = 0;
        const double value = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == value; ++i) {
            (labels[order[i]] == Label::H1 ? block_pos : block_neg) += 1;
        }
        // Negatives seen so far score strictly higher than this block.
        const std::size_t neg_above = fp;
        wins2 += 2.0 * static_cast<double>(block_pos) *
                     static_cast<double>(n_neg - neg_above - block_neg) +
                 static_cast<double>(block_pos) * static_cast<double>(block_neg);
        tp += block_pos;
        fp += block_neg;
        result.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                 static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    result.auc = wins2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return result;
}

Scorer make_scorer(const FusionModel& model) {
    return [model](const DistancePair& pair) { return score(model, pair); };
}

namespace {

std::vector<std::string> sorted_device_ids(const ReferenceSet& refs) {
    std::vector<std::string> ids;
    ids.reserve(refs.size());
    for (const auto& [id, _] : refs) ids.push_back(id);  // std::map is already ordered
    return ids;
}

}  // namespace

double closed_set_accuracy(const ReferenceSet& refs, std::span<const ImagePlane> tests,
                           const Scorer& scorer, int d, const PipelineConfig& cfg) {
    if (refs.size() < 2) throw ConfigError("closed_set_accuracy: need at least 2 devices");
    if (tests.empty()) throw ConfigError("closed_set_accuracy: no test images");
    for (const auto& img : tests) {
        if (refs.find(img.meta.device_id) == refs.end()) {
            throw ConfigError("closed_set_accuracy: test image from device \"" +
                              img.meta.device_id + "\" has no reference");
        }
    }
    const auto ids = sorted_device_ids(refs);
    std::size_t correct = 0;
    for (const auto& img : tests) {
        const TestFeatures features = compute_test_features(img, cfg);
        std::string best_id;
        double best_score = 0.0;
        for (const auto& id : ids) {
            const auto& ref = refs.at(id);
            const double s = scorer(distance_pair(features, ref.device, ref.model, d));
            // Strict > keeps the lexicographically lowest id on ties.
            if (best_id.empty() || s > best_score) {
                best_score = s;
                best_id = id;
            }
        }
        if (best_id == img.meta.device_id) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(tests.size());
}

RocResult open_set_evaluate(const ReferenceSet& refs, std::span<const ImagePlane> tests,
                            const Scorer& scorer, int d, const PipelineConfig& cfg) {
    if (refs.empty()) throw ConfigError("open_set_evaluate: no reference devices");
    if (tests.empty()) throw ConfigError("open_set_evaluate: no test images");
    const auto ids = sorted_device_ids(refs);
    std::vector<double> scores;
    std::vector<Label> labels;
    scores.reserve(tests.size() * ids.size());
    labels.reserve(tests.size() * ids.size());
    for (const auto& img : tests) {
        const TestFeatures features = compute_test_features(img, cfg);
        for (const auto& id : ids) {
            const auto& ref = refs.at(id);
            scores.push_back(scorer(distance_pair(features, ref.device, ref.model, d)));
            labels.push_back(id == img.meta.device_id ? Label::H1 : Label::H0);
        }
    }
    return roc_auc(scores, labels);
}

ImagePlane FileImageSource::load(const ManifestRecord& record) const {
    return load_image(record, base_dir_);
}

namespace {

struct DeviceEntry {
    std::string device_id;
    std::string model_id;
    std::vector<std::size_t> reference_records;
};

struct GridDataset {
    std::vector<DeviceEntry> devices;             // sorted by device_id
    std::vector<std::size_t> train_records;
    std::vector<std::size_t> test_records;
};

GridDataset index_manifest(const DatasetManifest& manifest) {
    GridDataset ds;
    std::map<std::string, DeviceEntry> by_device;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& rec = manifest.records[i];
        auto& entry = by_device[rec.device_id];
        if (entry.device_id.empty()) {
            entry.device_id = rec.device_id;
            entry.model_id = rec.model_id;
        } else if (entry.model_id != rec.model_id) {
            throw ConfigError("device \"" + rec.device_id + "\" appears under models \"" +
                              entry.model_id + "\" and \"" + rec.model_id + "\"");
        }
        switch (rec.role) {
            case Role::Reference: entry.reference_records.push_back(i); break;
            case Role::Train: ds.train_records.push_back(i); break;
            case Role::Test: ds.test_records.push_back(i); break;
        }
    }
    for (auto& [id, entry] : by_device) ds.devices.push_back(std::move(entry));
    return ds;
}

// Cropped per-image features for one condition.
struct CroppedFeatures {
    Raster residual;
    Raster fingerprint;
    PairMeta meta;
};

CroppedFeatures crop_features(const TestFeatures& f, int d) {
    CroppedFeatures c;
    c.residual = crop_center(f.residual.plane, d);
    c.fingerprint = crop_center(f.fingerprint, d);
    c.meta = {f.meta.model_id, f.meta.device_id};
    return c;
}

struct CroppedRefs {
    Raster device_plane;
    Raster model_plane;
    PairMeta meta;
};

DistancePair pair_from_cropped(const CroppedFeatures& f, const CroppedRefs& r) {
    DistancePair pair;
    pair.d_prnu = 1.0 - ncc(f.residual, r.device_plane);
    double s = 0.0;
    for (std::size_t i = 0; i < f.fingerprint.size(); ++i) {
        const double diff = r.model_plane.data[i] - f.fingerprint.data[i];
        s += diff * diff;
    }
    pair.d_np = s / static_cast<double>(f.fingerprint.size());
    pair.test_meta = f.meta;
    pair.ref_meta = r.meta;
    return pair;
}

struct RepetitionOutcome {
    // Indexed by method.
    std::vector<double> accuracy;
    std::vector<double> auc;
    std::vector<std::vector<double>> open_scores;
    std::vector<Label> open_labels;
    int n_train_pairs = 0;
};

}  // namespace

EvalReport run_grid(const ImageSource& source, const DatasetManifest& manifest,
                    std::span<const EvalCondition> conditions,
                    std::span<const FusionMethod> methods, std::uint64_t seed,
                    const GridOptions& opts) {
    if (conditions.empty()) throw ConfigError("run_grid: no conditions");
    if (methods.empty()) throw ConfigError("run_grid: no methods");
    const GridDataset ds = index_manifest(manifest);
    if (ds.devices.size() < 2) throw ConfigError("run_grid: need at least 2 devices");
    if (ds.train_records.empty()) throw ConfigError("run_grid: manifest has no train images");
    if (ds.test_records.empty()) throw ConfigError("run_grid: manifest has no test images");

    for (const auto& cond : conditions) {
        if (cond.crop_d < 8) throw ConfigError("run_grid: crop_d must be >= 8");
        if (cond.n_ref < 1) throw ConfigError("run_grid: n_ref must be >= 1");
        if (cond.repetitions < 1) throw ConfigError("run_grid: repetitions must be >= 1");
        for (const auto& dev : ds.devices) {
            if (dev.reference_records.size() < static_cast<std::size_t>(cond.n_ref)) {
                throw ConfigError("run_grid: device \"" + dev.device_id + "\" has only " +
                                  std::to_string(dev.reference_records.size()) +
                                  " reference images, condition needs " +
                                  std::to_string(cond.n_ref) + " (short by " +
                                  std::to_string(cond.n_ref - dev.reference_records.size()) +
                                  ")");
            }
        }
    }

    EvalReport report;
    for (const auto& cond : conditions) {
        const int d = cond.crop_d;

        // Features of train/test images do not depend on the repetition;
        // compute the cropped versions once per condition.
        auto features_of = [&](const std::vector<std::size_t>& records) {
            std::vector<CroppedFeatures> out(records.size());
            parallel_for(static_cast<std::int64_t>(records.size()), opts.threads,
                         [&](std::int64_t i) {
                             const auto& rec = manifest.records[records[static_cast<std::size_t>(i)]];
                             const ImagePlane img = source.load(rec);
                             out[static_cast<std::size_t>(i)] =
                                 crop_features(compute_test_features(img, opts.pipeline), d);
                         });
            return out;
        };
        const std::vector<CroppedFeatures> train_features = features_of(ds.train_records);
        const std::vector<CroppedFeatures> test_features = features_of(ds.test_records);

        std::vector<RepetitionOutcome> outcomes(static_cast<std::size_t>(cond.repetitions));
        for (int rep = 0; rep < cond.repetitions; ++rep) {
            // Per-repetition reference resampling: deterministic stream
            // keyed by (seed, repetition, device), independent of the
            // condition list and of threading.
            std::vector<CroppedRefs> refs(ds.devices.size());
            parallel_for(static_cast<std::int64_t>(ds.devices.size()), opts.threads,
                         [&](std::int64_t di) {
                const auto& dev = ds.devices[static_cast<std::size_t>(di)];
                Rng rng(mix_keys({seed, hash_string("reference-sample"),
                                  static_cast<std::uint64_t>(rep), hash_string(dev.device_id)}));
                const auto picks = rng.sample_without_replacement(dev.reference_records.size(),
                                                                  static_cast<std::size_t>(cond.n_ref));
                std::vector<NoiseResidual> residuals;
                std::vector<ImagePlane> images;
                std::vector<Raster> fingerprints;
                residuals.reserve(picks.size());
                fingerprints.reserve(picks.size());
                const bool need_images = opts.estimator == PrnuEstimator::MaximumLikelihood;
                for (const auto pick : picks) {
                    const auto& rec = manifest.records[dev.reference_records[pick]];
                    ImagePlane img = source.load(rec);
                    TestFeatures f = compute_test_features(img, opts.pipeline);
                    fingerprints.push_back(std::move(f.fingerprint));
                    residuals.push_back(std::move(f.residual));
                    if (need_images) images.push_back(std::move(img));
                }
                DevicePattern device_pattern =
                    need_images ? estimate_prnu_ml(residuals, images)
                                : estimate_prnu_average(residuals);
                if (opts.postprocess_refs) device_pattern = postprocess(device_pattern);
                const ModelPattern model_pattern = estimate_model_reference(
                    fingerprints, dev.model_id, opts.pipeline.extractor.id());

                CroppedRefs& slot = refs[static_cast<std::size_t>(di)];
                slot.device_plane = crop_center(device_pattern.plane, d);
                slot.model_plane = crop_center(model_pattern.plane, d);
                slot.meta = {dev.model_id, dev.device_id};
            });

            // Training pairs: every train image against every device.
            std::vector<LabeledPair> train_pairs;
            train_pairs.reserve(train_features.size() * refs.size());
            for (const auto& f : train_features) {
                for (const auto& r : refs) {
                    const DistancePair pair = pair_from_cropped(f, r);
                    train_pairs.push_back(
                        {{pair.d_prnu, pair.d_np},
                         f.meta.device_id == r.meta.device_id ? Label::H1 : Label::H0});
                }
            }

            TrainOptions train_opts = opts.train;
            train_opts.mcd.seed =
                mix_keys({seed, hash_string("mcd"), static_cast<std::uint64_t>(rep)});
            std::vector<FusionModel> models(methods.size());
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                models[mi] = train_fusion(methods[mi], train_pairs, train_opts);
            }

            // Score all test pairs once per method.
            RepetitionOutcome& outcome = outcomes[static_cast<std::size_t>(rep)];
            outcome.accuracy.assign(methods.size(), 0.0);
            outcome.auc.assign(methods.size(), 0.0);
            outcome.open_scores.assign(methods.size(), {});
            outcome.n_train_pairs = static_cast<int>(train_pairs.size());
            for (auto& v : outcome.open_scores) v.reserve(test_features.size() * refs.size());
            outcome.open_labels.reserve(test_features.size() * refs.size());

            std::vector<std::vector<double>> scores(
                methods.size(), std::vector<double>(test_features.size() * refs.size()));
            parallel_for(static_cast<std::int64_t>(test_features.size()), opts.threads,
                         [&](std::int64_t ti) {
                const auto& f = test_features[static_cast<std::size_t>(ti)];
                for (std::size_t ri = 0; ri < refs.size(); ++ri) {
                    const DistancePair pair = pair_from_cropped(f, refs[ri]);
                    const Vec2 x{pair.d_prnu, pair.d_np};
                    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                        scores[mi][static_cast<std::size_t>(ti) * refs.size() + ri] =
                            score(models[mi], x);
                    }
                }
            });

            for (std::size_t ti = 0; ti < test_features.size(); ++ti) {
                for (std::size_t ri = 0; ri < refs.size(); ++ri) {
                    outcome.open_labels.push_back(
                        test_features[ti].meta.device_id == refs[ri].meta.device_id ? Label::H1
                                                                                    : Label::H0);
                }
            }
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                std::size_t correct = 0;
                for (std::size_t ti = 0; ti < test_features.size(); ++ti) {
                    std::size_t best = 0;
                    for (std::size_t ri = 1; ri < refs.size(); ++ri) {
                        if (scores[mi][ti * refs.size() + ri] >
                            scores[mi][ti * refs.size() + best]) {
                            best = ri;
                        }
                    }
                    if (refs[best].meta.device_id == test_features[ti].meta.device_id) ++correct;
                }
                outcome.accuracy[mi] =
                    static_cast<double>(correct) / static_cast<double>(test_features.size());
                outcome.auc[mi] = roc_auc(scores[mi], outcome.open_labels).auc;
                outcome.open_scores[mi] = std::move(scores[mi]);
            }
        }

        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            EvalCell cell;
            cell.condition = cond;
            cell.method = methods[mi];
            cell.n_devices = static_cast<int>(ds.devices.size());
            cell.n_tests = static_cast<int>(test_features.size());
            cell.n_train_pairs = outcomes.front().n_train_pairs;
            std::vector<double> pooled_scores;
            std::vector<Label> pooled_labels;
            for (const auto& outcome : outcomes) {
                cell.accuracy += outcome.accuracy[mi];
                cell.auc += outcome.auc[mi];
                pooled_scores.insert(pooled_scores.end(), outcome.open_scores[mi].begin(),
                                     outcome.open_scores[mi].end());
                pooled_labels.insert(pooled_labels.end(), outcome.open_labels.begin(),
                                     outcome.open_labels.end());
            }
            cell.accuracy /= static_cast<double>(outcomes.size());
            cell.auc /= static_cast<double>(outcomes.size());
            cell.roc = roc_auc(pooled_scores, pooled_labels).points;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create \"" + out_dir.string() + "\": " + ec.message());

    std::ofstream csv(out_dir / "report.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot open report.csv for writing");
    csv << "d,n_ref,repetitions,method,closed_accuracy,open_auc,n_devices,n_tests,n_train_pairs\n";
    for (const auto& cell : report.cells) {
        csv << cell.condition.crop_d << ',' << cell.condition.n_ref << ','
            << cell.condition.repetitions << ',' << method_name(cell.method) << ','
            << format_double(cell.accuracy) << ',' << format_double(cell.auc) << ','
            << cell.n_devices << ',' << cell.n_tests << ',' << cell.n_train_pairs << '\n';
    }
    if (!csv) throw IoError("short write to report.csv");
    csv.close();

    for (const auto& cell : report.cells) {
        char name[128];
        std::snprintf(name, sizeof(name), "roc_d%d_N%d_%s.csv", cell.condition.crop_d,
                      cell.condition.n_ref, method_name(cell.method).c_str());
        std::ofstream roc(out_dir / name, std::ios::trunc);
        if (!roc) throw IoError(std::string("cannot open ") + name + " for writing");
        roc << "p_fa,p_d\n";
        for (const auto& pt : cell.roc) {
            roc << format_double(pt.p_fa) << ',' << format_double(pt.p_d) << '\n';
        }
        if (!roc) throw IoError(std::string("short write to ") + name);
    }
}

std::vector<EvalCondition> parse_conditions(const std::string& text) {
    std::vector<EvalCondition> conditions;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw UsageError("bad condition \"" + item + "\" (expected d:N, e.g. 64:10)");
        }
        try {
            const int d = std::stoi(item.substr(0, colon));
            const int n = std::stoi(item.substr(colon + 1));
            conditions.push_back(make_condition(d, n));
        } catch (const std::exception&) {
            throw UsageError("bad condition \"" + item + "\" (expected d:N, e.g. 64:10)");
        }
        pos = comma + 1;
    }
    if (conditions.empty()) throw UsageError("no conditions given");
    return conditions;
}

}  // namespace camid
