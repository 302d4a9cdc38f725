#pragma once

#include "camid/denoise.hpp"
#include "camid/model_fingerprint.hpp"
#include "camid/raster.hpp"

namespace camid {

// End-to-end settings for turning a test image into its two features.
struct PipelineConfig {
    DenoiserConfig denoiser{};
    ExtractorConfig extractor{};
};

// d x d block with top-left corner (floor((H-d)/2), floor((W-d)/2)).
// Reference and test rasters of a comparison must be cropped with this
// same rule so fingerprint pixels stay aligned.
Raster crop_center(const Raster& plane, int d);

// <a,b> / (||a|| * ||b||); throws DegenerateInputError on a zero-norm
// operand.
double ncc(const Raster& a, const Raster& b);

// 1 - NCC between the center crops; in [0, 2].
double d_prnu(const NoiseResidual& test_residual, const DevicePattern& ref, int d);

// Mean squared error between the center crops; >= 0.
double d_np(const Raster& test_fingerprint, const ModelPattern& ref, int d);

struct PairMeta {
    std::string model_id;
    std::string device_id;
};

// The 2-D feature fed to every fusion classifier.
struct DistancePair {
    double d_prnu = 0.0;
    double d_np = 0.0;
    PairMeta test_meta;
    PairMeta ref_meta;
};

// Residual + model fingerprint of one test image, computed once and
// reused against many references.
struct TestFeatures {
    NoiseResidual residual;
    Raster fingerprint;
    ImageMeta meta;
};

TestFeatures compute_test_features(const ImagePlane& image, const PipelineConfig& cfg);

DistancePair distance_pair(const TestFeatures& features, const DevicePattern& device_ref,
                           const ModelPattern& model_ref, int d);

DistancePair distance_pair(const ImagePlane& test_image, const DevicePattern& device_ref,
                           const ModelPattern& model_ref, const PipelineConfig& cfg, int d);

}  // namespace camid
