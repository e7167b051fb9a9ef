#include "core/inference.hpp"

#include "core/sampling.hpp"
#include "core/tensor.hpp"

namespace sdap {

Pipeline pipeline_from_string(const std::string& s) {
    if (s == "pd") return Pipeline::pd;
    if (s == "pd_enhance") return Pipeline::pd_enhance;
    if (s == "nrsg") return Pipeline::nrsg;
    if (s == "nrsg_enhance") return Pipeline::nrsg_enhance;
    raise(ErrorCode::invalid_argument, "unknown pipeline '" + s + "'");
}

const char* to_string(Pipeline p) {
    switch (p) {
        case Pipeline::pd: return "pd";
        case Pipeline::pd_enhance: return "pd_enhance";
        case Pipeline::nrsg: return "nrsg";
        case Pipeline::nrsg_enhance: return "nrsg_enhance";
    }
    return "?";
}

namespace {

// model applied to every sub-sample in one batch; stack is replaced in place
void denoise_stack(const BsnNet<float>& net, SubsampleStack& stack) {
    const int s2 = static_cast<int>(stack.subs.size());
    const ImageGrid& first = stack.subs[0];
    Tensor<float> batch(s2, first.channels, first.height, first.width);
    for (int k = 0; k < s2; ++k) {
        const Tensor<float> t = image_to_tensor<float>(stack.subs[k]);
        std::copy(t.v.begin(), t.v.end(), batch.plane(k, 0));
    }
    const Tensor<float> out = net.forward(batch);
    for (int k = 0; k < s2; ++k) stack.subs[k] = tensor_to_image(out, k);
}

ImageGrid full_pass(const BsnNet<float>& net, const ImageGrid& img) {
    const Tensor<float> out = net.forward(image_to_tensor<float>(img));
    return tensor_to_image(out, 0);
}

}  // namespace

ImageGrid denoise_pd(const BsnNet<float>& net, const ImageGrid& img, int stride) {
    if (img.channels != net.config().in_channels)
        raise(ErrorCode::shape, "image has " + std::to_string(img.channels) +
                                    " channels, model expects " +
                                    std::to_string(net.config().in_channels));
    auto [padded, crop] = pad_to_multiple(img, stride);
    SubsampleStack stack = pd_split(padded, stride);
    denoise_stack(net, stack);
    return clipped(crop_to(pd_merge(stack), crop));
}

ImageGrid denoise_enhance(const BsnNet<float>& net, const ImageGrid& img, int stride) {
    return clipped(full_pass(net, denoise_pd(net, img, stride)));
}

std::uint64_t nrsg_pass_seed(std::uint64_t seed, int pass) {
    return derive_seed(seed, {0x6e727367ULL, static_cast<std::uint64_t>(pass)});
}

ImageGrid denoise_rsg_single(const BsnNet<float>& net, const ImageGrid& img, int stride,
                             std::uint64_t plan_seed) {
    if (img.channels != net.config().in_channels)
        raise(ErrorCode::shape, "channel mismatch in denoise_rsg_single");
    auto [padded, crop] = pad_to_multiple(img, stride);
    Rng rng(plan_seed);
    const SamplingPlan plan = make_rsg_plan(stride, padded.height, padded.width, rng);
    SubsampleStack stack = rsg_split(padded, plan);
    denoise_stack(net, stack);
    return clipped(crop_to(rsg_merge(stack), crop));
}

ImageGrid denoise_nrsg(const BsnNet<float>& net, const ImageGrid& img, int stride, int n,
                       std::uint64_t seed, bool enhance) {
    if (n < 1) raise(ErrorCode::invalid_argument, "n must be >= 1");
    std::vector<double> acc(static_cast<std::size_t>(img.height) * img.width * img.channels, 0.0);
    for (int pass = 0; pass < n; ++pass) {
        const ImageGrid single = denoise_rsg_single(net, img, stride, nrsg_pass_seed(seed, pass));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(single.values[i]);
    }
    ImageGrid avg(img.height, img.width, img.channels);
    for (std::size_t i = 0; i < acc.size(); ++i)
        avg.values[i] = static_cast<float>(acc[i] / static_cast<double>(n));
    avg = clipped(avg);
    if (!enhance) return avg;
    return clipped(full_pass(net, avg));
}

ImageGrid run_pipeline(const BsnNet<float>& net, const ImageGrid& img, const InferenceSpec& spec,
                       std::uint64_t seed) {
    spec.validate();
    switch (spec.pipeline) {
        case Pipeline::pd: return denoise_pd(net, img, spec.stride_test);
        case Pipeline::pd_enhance: return denoise_enhance(net, img, spec.stride_test);
        case Pipeline::nrsg: return denoise_nrsg(net, img, spec.stride_test, spec.n, seed, false);
        case Pipeline::nrsg_enhance:
            return denoise_nrsg(net, img, spec.stride_test, spec.n, seed, true);
    }
    raise(ErrorCode::invalid_argument, "bad pipeline");
}

}  // namespace sdap
