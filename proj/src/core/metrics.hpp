#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace sdap {

enum class SsimChannelMode { rgb_mean, luma };

// PSNR in dB over clipped [0,1] values, data range 1.0, capped at 100.
double psnr(const ImageGrid& a, const ImageGrid& b);

// Single-scale SSIM: 11x11 Gaussian window (std 1.5), k1=0.01, k2=0.03,
// data range 1.0, windows fully inside the image, channel mean (or luma).
double ssim(const ImageGrid& a, const ImageGrid& b,
            SsimChannelMode mode = SsimChannelMode::rgb_mean);

struct QualityRow {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct QualityReport {
    std::vector<QualityRow> rows;
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;

    void add(const std::string& name, double p, double s);
    void finalize();
};

// per-image rows plus an aggregate "mean" row
void write_csv(const QualityReport& report, const std::string& path);

}  // namespace sdap
