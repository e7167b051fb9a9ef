#include "core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace sdap {

ImageGrid clipped(const ImageGrid& img) {
    ImageGrid out = img;
    for (float& v : out.values) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    std::transform(tail.begin(), tail.end(), tail.begin(), [](unsigned char c) { return std::tolower(c); });
    return tail == suf;
}

ImageGrid load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) raise(ErrorCode::io, "cannot open image file: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        raise(ErrorCode::io, "not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) raise(ErrorCode::runtime, "libpng init failed for " + path);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::io, "PNG decode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth > 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::io, "unsupported bit depth " + std::to_string(bit_depth) + " in " + path +
                                 " (only 8-bit images are supported)");
    }
    // normalize palette / low bit depth / alpha to plain 8-bit gray or rgb
    png_set_expand(png);
    if (bit_depth < 8) png_set_packing(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int color = png_get_color_type(png, info);
    int c = 0;
    switch (color) {
        case PNG_COLOR_TYPE_GRAY: c = 1; break;
        case PNG_COLOR_TYPE_RGB: c = 3; break;
        default:
            png_destroy_read_struct(&png, &info, nullptr);
            raise(ErrorCode::io, "unsupported PNG color type in " + path);
    }

    std::vector<png_byte> row(static_cast<std::size_t>(w) * c);
    ImageGrid img(h, w, c);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); ++i)
            img.values[static_cast<std::size_t>(y) * row.size() + i] = row[i] / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const ImageGrid& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) raise(ErrorCode::io, "cannot write image file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) raise(ErrorCode::runtime, "libpng init failed for " + path);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::io, "PNG encode failed: " + path);
    }
    png_init_io(png, fp.get());
    const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            const float v = std::clamp(img.values[static_cast<std::size_t>(y) * row.size() + i], 0.0f, 1.0f);
            // round half-up
            row[i] = static_cast<png_byte>(std::floor(v * 255.0f + 0.5f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// PGM (P5) / PPM (P6), 8-bit binary
ImageGrid load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io, "cannot open image file: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") raise(ErrorCode::io, "unsupported PNM magic in " + path);
    auto next_int = [&in, &path]() {
        int v;
        while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
        if (!(in >> v)) raise(ErrorCode::io, "truncated PNM header: " + path);
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255)
        raise(ErrorCode::io, "unsupported bit depth (maxval " + std::to_string(maxval) + ") in " + path);
    in.ignore(1);  // single whitespace before raster
    const int c = magic == "P5" ? 1 : 3;
    ImageGrid img(h, w, c);
    std::vector<unsigned char> raw(img.size());
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        raise(ErrorCode::io, "truncated PNM raster: " + path);
    for (std::size_t i = 0; i < raw.size(); ++i) img.values[i] = raw[i] / 255.0f;
    return img;
}

void save_pnm(const ImageGrid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, "cannot write image file: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(img.values[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::floor(v * 255.0f + 0.5f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) raise(ErrorCode::io, "short write: " + path);
}

}  // namespace

ImageGrid load_image(const std::string& path) {
    if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm"))
        return load_pnm(path);
    return load_png(path);
}

void save_image(const ImageGrid& img, const std::string& path) {
    if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm") || has_suffix(path, ".pnm"))
        save_pnm(img, path);
    else
        save_png(img, path);
}

namespace {

// Catmull-Rom kernel (a = -0.5), the usual bicubic choice.
inline double cubic_weight(double t) {
    const double a = -0.5;
    t = std::fabs(t);
    if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
    return 0.0;
}

// Bicubic upsample of a (lh x lw) field by factor k, evaluated at the (h x w)
// pixel centers, clamped at the borders.
void bicubic_upsample(const std::vector<double>& low, int lh, int lw, int k, int h, int w,
                      std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        const double sy = (y + 0.5) / k - 0.5;
        const int iy = static_cast<int>(std::floor(sy));
        double wy[4];
        for (int t = 0; t < 4; ++t) wy[t] = cubic_weight(sy - (iy - 1 + t));
        for (int x = 0; x < w; ++x) {
            const double sx = (x + 0.5) / k - 0.5;
            const int ix = static_cast<int>(std::floor(sx));
            double acc = 0.0;
            for (int ty = 0; ty < 4; ++ty) {
                const int yy = std::clamp(iy - 1 + ty, 0, lh - 1);
                double rowacc = 0.0;
                for (int tx = 0; tx < 4; ++tx) {
                    const int xx = std::clamp(ix - 1 + tx, 0, lw - 1);
                    rowacc += cubic_weight(sx - (ix - 1 + tx)) * low[static_cast<std::size_t>(yy) * lw + xx];
                }
                acc += wy[ty] * rowacc;
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
}

}  // namespace

ImageGrid add_noise(const ImageGrid& clean, const NoiseSpec& spec, int epoch, int image_index,
                    std::uint64_t rng_seed) {
    spec.validate();
    ImageGrid out = clean;
    if (spec.sigma == 0.0) return out;

    const std::uint64_t epoch_tag =
        spec.seed_mode == SeedMode::per_epoch_random ? static_cast<std::uint64_t>(epoch) : 0ULL;
    Rng rng(derive_seed(rng_seed, {0x6e6f6973ULL, static_cast<std::uint64_t>(image_index), epoch_tag}));
    const double target_std = spec.sigma / 255.0;

    if (spec.kind == NoiseKind::awgn) {
        for (float& v : out.values) v += static_cast<float>(target_std * rng.normal());
        return out;
    }

    // correlated: per-channel low-resolution Gaussian field, bicubic upsample,
    // then renormalize so the empirical per-image variance is (sigma/255)^2
    const int k = spec.correlation_scale;
    const int lh = (clean.height + k - 1) / k + 1;
    const int lw = (clean.width + k - 1) / k + 1;
    std::vector<double> low(static_cast<std::size_t>(lh) * lw);
    std::vector<double> up;
    for (int c = 0; c < clean.channels; ++c) {
        for (double& v : low) v = rng.normal();
        bicubic_upsample(low, lh, lw, k, clean.height, clean.width, up);
        double mean = 0.0;
        for (double v : up) mean += v;
        mean /= static_cast<double>(up.size());
        double var = 0.0;
        for (double v : up) var += (v - mean) * (v - mean);
        var /= static_cast<double>(up.size());
        const double scale = var > 0.0 ? target_std / std::sqrt(var) : 0.0;
        for (int y = 0; y < clean.height; ++y)
            for (int x = 0; x < clean.width; ++x)
                out.at(y, x, c) += static_cast<float>((up[static_cast<std::size_t>(y) * clean.width + x] - mean) * scale);
    }
    return out;
}

ImageGrid sample_patch(const ImageGrid& img, int patch_size, Rng& rng) {
    if (patch_size < 1) raise(ErrorCode::invalid_argument, "patch_size must be >= 1");
    if (img.height < patch_size || img.width < patch_size)
        raise(ErrorCode::shape, "image " + img.shape_str() + " smaller than patch " + std::to_string(patch_size));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - patch_size + 1)));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - patch_size + 1)));
    ImageGrid patch(patch_size, patch_size, img.channels);
    for (int y = 0; y < patch_size; ++y)
        for (int x = 0; x < patch_size; ++x)
            for (int c = 0; c < img.channels; ++c) patch.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return patch;
}

ImageGrid make_synthetic_clean(int height, int width, int channels, Rng& rng) {
    // smooth low-frequency base plus a few hard-edged shapes; enough structure
    // for denoising trends without shipping a dataset
    ImageGrid img(height, width, channels);
    const int grid = 8;
    const int gh = height / grid + 2, gw = width / grid + 2;
    std::vector<double> coarse(static_cast<std::size_t>(gh) * gw * channels);
    for (double& v : coarse) v = rng.uniform01();
    for (int y = 0; y < height; ++y) {
        const double fy = static_cast<double>(y) / grid;
        const int iy = static_cast<int>(fy);
        const double ty = fy - iy;
        for (int x = 0; x < width; ++x) {
            const double fx = static_cast<double>(x) / grid;
            const int ix = static_cast<int>(fx);
            const double tx = fx - ix;
            for (int c = 0; c < channels; ++c) {
                auto g = [&](int yy, int xx) {
                    return coarse[(static_cast<std::size_t>(yy) * gw + xx) * channels + c];
                };
                const double v = (1 - ty) * ((1 - tx) * g(iy, ix) + tx * g(iy, ix + 1)) +
                                 ty * ((1 - tx) * g(iy + 1, ix) + tx * g(iy + 1, ix + 1));
                img.at(y, x, c) = static_cast<float>(0.15 + 0.7 * v);
            }
        }
    }
    const int nshapes = 3 + static_cast<int>(rng.below(4));
    for (int s = 0; s < nshapes; ++s) {
        const bool disk = rng.below(2) == 0;
        const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(height)));
        const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
        const int r = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(2, height / 6))));
        float delta[3];
        for (int c = 0; c < channels; ++c) delta[c] = static_cast<float>(0.5 * (rng.uniform01() - 0.5));
        for (int y = std::max(0, cy - r); y < std::min(height, cy + r + 1); ++y)
            for (int x = std::max(0, cx - r); x < std::min(width, cx + r + 1); ++x) {
                const bool inside = disk ? (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r : true;
                if (!inside) continue;
                for (int c = 0; c < channels; ++c)
                    img.at(y, x, c) = std::clamp(img.at(y, x, c) + delta[c], 0.02f, 0.98f);
            }
    }
    return img;
}

}  // namespace sdap
