#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"
#include "core/rng.hpp"

namespace sdap {

// Describes how an image decomposes into stride^2 sub-samples: one
// permutation of {0..s^2-1} per s x s cell, mapping sub-sample index to the
// row-major position inside the cell. The identity permutation everywhere
// reproduces pixel-shuffle downsampling (PD); independent random
// permutations give random sub-samples generation (RSG).
struct SamplingPlan {
    int stride = 1;
    int grid_h = 0;  // H / stride
    int grid_w = 0;  // W / stride
    std::vector<std::uint16_t> perms;  // [cell][sub_index] -> within-cell position
    bool identity = false;

    int cells() const { return grid_h * grid_w; }
    int subs() const { return stride * stride; }
    // within-cell source position of sub-sample k for cell (u,v)
    int cell_pos(int cell, int k) const {
        return identity ? k : perms[static_cast<std::size_t>(cell) * subs() + k];
    }
    // absolute source pixel of sub-sample k at sub coordinate (u,v)
    void source(int k, int u, int v, int& sy, int& sx) const {
        const int p = cell_pos(u * grid_w + v, k);
        sy = u * stride + p / stride;
        sx = v * stride + p % stride;
    }
};

SamplingPlan identity_plan(int stride, int height, int width);
SamplingPlan make_rsg_plan(int stride, int height, int width, Rng& rng);

struct SubsampleStack {
    std::vector<ImageGrid> subs;  // stride^2 grids of (H/s) x (W/s) x C
    SamplingPlan plan;
    int original_height = 0;
    int original_width = 0;
};

SubsampleStack pd_split(const ImageGrid& img, int stride);
ImageGrid pd_merge(const SubsampleStack& stack);
SubsampleStack rsg_split(const ImageGrid& img, const SamplingPlan& plan);
ImageGrid rsg_merge(const SubsampleStack& stack);

// Reflect-pad (edge-inclusive) on bottom/right to the next multiple of
// stride; the crop record restores the original size exactly.
struct CropRecord {
    int height = 0;  // original size
    int width = 0;
};

std::pair<ImageGrid, CropRecord> pad_to_multiple(const ImageGrid& img, int stride);
ImageGrid crop_to(const ImageGrid& img, const CropRecord& crop);

}  // namespace sdap
