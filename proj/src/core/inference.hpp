#pragma once

#include <cstdint>
#include <string>

#include "core/image.hpp"
#include "core/net.hpp"

namespace sdap {

enum class Pipeline { pd, pd_enhance, nrsg, nrsg_enhance };

Pipeline pipeline_from_string(const std::string& s);
const char* to_string(Pipeline p);

struct InferenceSpec {
    Pipeline pipeline = Pipeline::pd;
    int stride_test = 2;
    int n = 1;  // RSG passes, nrsg pipelines only

    void validate() const {
        if (stride_test < 1) raise(ErrorCode::invalid_argument, "stride_test must be >= 1");
        if (n < 1) raise(ErrorCode::invalid_argument, "n must be >= 1");
    }
};

// pad -> pd_split -> model on each sub -> pd_merge -> crop -> clip
ImageGrid denoise_pd(const BsnNet<float>& net, const ImageGrid& img, int stride);

// denoise_pd followed by one full-resolution pass with the same weights
ImageGrid denoise_enhance(const BsnNet<float>& net, const ImageGrid& img, int stride);

// one RSG pass with the plan drawn from `plan_seed`
ImageGrid denoise_rsg_single(const BsnNet<float>& net, const ImageGrid& img, int stride,
                             std::uint64_t plan_seed);

// n fresh-plan RSG passes averaged (exact mean, fixed order); optional
// enhancement applies the model once to the average
ImageGrid denoise_nrsg(const BsnNet<float>& net, const ImageGrid& img, int stride, int n,
                       std::uint64_t seed, bool enhance);

// seed used to derive the plan of pass k of an n-RSG run
std::uint64_t nrsg_pass_seed(std::uint64_t seed, int pass);

ImageGrid run_pipeline(const BsnNet<float>& net, const ImageGrid& img, const InferenceSpec& spec,
                       std::uint64_t seed);

}  // namespace sdap
