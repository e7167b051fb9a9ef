#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace sdap {

// H x W x C grid of 32-bit reals, interleaved channels. Pixel values live in
// [0,1] after ingestion; intermediate buffers (noisy training data, raw
// network outputs) may leave that range and are clipped only at pipeline
// boundaries (save, metrics).
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> values;  // height*width*channels, row-major, channel-interleaved

    ImageGrid() = default;
    ImageGrid(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          values(static_cast<std::size_t>(h) * w * c, fill) {
        if (h < 1 || w < 1 || (c != 1 && c != 3))
            raise(ErrorCode::invalid_argument, "ImageGrid: bad shape " + shape_str());
    }

    float& at(int y, int x, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t size() const { return values.size(); }
    bool same_shape(const ImageGrid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    std::string shape_str() const {
        return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
    }
};

ImageGrid clipped(const ImageGrid& img);

// ---- file I/O (8-bit PNG / PGM / PPM) ----

ImageGrid load_image(const std::string& path);
void save_image(const ImageGrid& img, const std::string& path);

// ---- synthetic noise ----

enum class NoiseKind { awgn, correlated };
enum class SeedMode { fixed, per_epoch_random };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::awgn;
    double sigma = 25.0;  // std in 0..255 units; divided by 255 internally
    SeedMode seed_mode = SeedMode::fixed;
    int correlation_scale = 2;  // upsampling factor, correlated kind only

    void validate() const {
        if (sigma < 0) raise(ErrorCode::invalid_argument, "NoiseSpec: sigma must be >= 0");
        if (kind == NoiseKind::correlated && correlation_scale < 2)
            raise(ErrorCode::invalid_argument, "NoiseSpec: correlation_scale must be >= 2");
    }
};

// Output is intentionally unclipped. Under SeedMode::fixed the noise field is
// a pure function of (rng_seed, image_index); per_epoch_random mixes in the
// epoch as well.
ImageGrid add_noise(const ImageGrid& clean, const NoiseSpec& spec, int epoch, int image_index,
                    std::uint64_t rng_seed);

// ---- patch extraction ----

struct PatchSampler {
    int patch_size = 160;
    int patches_per_epoch = 25600;
    std::uint64_t rng_seed = 0;
};

ImageGrid sample_patch(const ImageGrid& img, int patch_size, Rng& rng);

// ---- synthetic clean images for desk-scale experiments ----

ImageGrid make_synthetic_clean(int height, int width, int channels, Rng& rng);

}  // namespace sdap
