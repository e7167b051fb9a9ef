#include "core/sampling.hpp"

#include <numeric>

namespace sdap {

SamplingPlan identity_plan(int stride, int height, int width) {
    if (stride < 1) raise(ErrorCode::invalid_argument, "stride must be >= 1");
    if (height % stride != 0 || width % stride != 0)
        raise(ErrorCode::shape, "dimensions " + std::to_string(height) + "x" + std::to_string(width) +
                                    " not divisible by stride " + std::to_string(stride) +
                                    "; pad_to_multiple first");
    SamplingPlan plan;
    plan.stride = stride;
    plan.grid_h = height / stride;
    plan.grid_w = width / stride;
    plan.identity = true;
    return plan;
}

SamplingPlan make_rsg_plan(int stride, int height, int width, Rng& rng) {
    SamplingPlan plan = identity_plan(stride, height, width);
    if (stride == 1) return plan;  // single-element cells: identity is the only permutation
    plan.identity = false;
    const int s2 = plan.subs();
    plan.perms.resize(static_cast<std::size_t>(plan.cells()) * s2);
    for (int cell = 0; cell < plan.cells(); ++cell) {
        std::uint16_t* p = plan.perms.data() + static_cast<std::size_t>(cell) * s2;
        std::iota(p, p + s2, std::uint16_t{0});
        // Fisher-Yates, uniform over all s^2! permutations
        for (int i = s2 - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(p[i], p[j]);
        }
    }
    return plan;
}

namespace {

void check_plan_shape(const ImageGrid& img, const SamplingPlan& plan) {
    if (img.height != plan.grid_h * plan.stride || img.width != plan.grid_w * plan.stride)
        raise(ErrorCode::shape, "image " + img.shape_str() + " does not match plan grid " +
                                    std::to_string(plan.grid_h) + "x" + std::to_string(plan.grid_w) +
                                    " at stride " + std::to_string(plan.stride));
}

}  // namespace

SubsampleStack rsg_split(const ImageGrid& img, const SamplingPlan& plan) {
    check_plan_shape(img, plan);
    const int s = plan.stride, c = img.channels;
    SubsampleStack stack;
    stack.plan = plan;
    stack.original_height = img.height;
    stack.original_width = img.width;
    stack.subs.reserve(plan.subs());
    for (int k = 0; k < plan.subs(); ++k) stack.subs.emplace_back(plan.grid_h, plan.grid_w, c);
    for (int u = 0; u < plan.grid_h; ++u)
        for (int v = 0; v < plan.grid_w; ++v) {
            const int cell = u * plan.grid_w + v;
            for (int k = 0; k < plan.subs(); ++k) {
                const int p = plan.cell_pos(cell, k);
                const int sy = u * s + p / s, sx = v * s + p % s;
                for (int ch = 0; ch < c; ++ch) stack.subs[k].at(u, v, ch) = img.at(sy, sx, ch);
            }
        }
    return stack;
}

ImageGrid rsg_merge(const SubsampleStack& stack) {
    const SamplingPlan& plan = stack.plan;
    if (static_cast<int>(stack.subs.size()) != plan.subs())
        raise(ErrorCode::invalid_argument, "stack has " + std::to_string(stack.subs.size()) +
                                               " subs, plan expects " + std::to_string(plan.subs()));
    for (const ImageGrid& sub : stack.subs)
        if (sub.height != plan.grid_h || sub.width != plan.grid_w)
            raise(ErrorCode::shape, "sub-sample shape " + sub.shape_str() + " does not match plan");
    const int s = plan.stride, c = stack.subs[0].channels;
    ImageGrid out(plan.grid_h * s, plan.grid_w * s, c);
    for (int u = 0; u < plan.grid_h; ++u)
        for (int v = 0; v < plan.grid_w; ++v) {
            const int cell = u * plan.grid_w + v;
            for (int k = 0; k < plan.subs(); ++k) {
                const int p = plan.cell_pos(cell, k);
                const int sy = u * s + p / s, sx = v * s + p % s;
                for (int ch = 0; ch < c; ++ch) out.at(sy, sx, ch) = stack.subs[k].at(u, v, ch);
            }
        }
    return out;
}

SubsampleStack pd_split(const ImageGrid& img, int stride) {
    return rsg_split(img, identity_plan(stride, img.height, img.width));
}

ImageGrid pd_merge(const SubsampleStack& stack) {
    if (!stack.plan.identity)
        raise(ErrorCode::invalid_argument, "pd_merge on a shuffled stack; use rsg_merge");
    return rsg_merge(stack);
}

namespace {

// edge-inclusive reflection, folds as often as needed for tiny images
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

}  // namespace

std::pair<ImageGrid, CropRecord> pad_to_multiple(const ImageGrid& img, int stride) {
    if (stride < 1) raise(ErrorCode::invalid_argument, "stride must be >= 1");
    CropRecord crop{img.height, img.width};
    const int ph = (stride - img.height % stride) % stride;
    const int pw = (stride - img.width % stride) % stride;
    if (ph == 0 && pw == 0) return {img, crop};
    ImageGrid out(img.height + ph, img.width + pw, img.channels);
    for (int y = 0; y < out.height; ++y) {
        const int sy = reflect_index(y, img.height);
        for (int x = 0; x < out.width; ++x) {
            const int sx = reflect_index(x, img.width);
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return {out, crop};
}

ImageGrid crop_to(const ImageGrid& img, const CropRecord& crop) {
    if (crop.height == img.height && crop.width == img.width) return img;
    if (crop.height > img.height || crop.width > img.width)
        raise(ErrorCode::shape, "crop larger than image");
    ImageGrid out(crop.height, crop.width, img.channels);
    for (int y = 0; y < crop.height; ++y)
        for (int x = 0; x < crop.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, x, c);
    return out;
}

}  // namespace sdap
