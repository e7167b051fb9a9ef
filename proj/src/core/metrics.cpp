#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sdap {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_shapes(const ImageGrid& a, const ImageGrid& b) {
    if (!a.same_shape(b))
        raise(ErrorCode::shape, "metric inputs differ: " + a.shape_str() + " vs " + b.shape_str());
}

std::vector<double> gaussian_window() {
    std::vector<double> w(kWindow);
    const int r = kWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - r;
        w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// horizontal then vertical pass, valid region only
void separable_filter(const std::vector<double>& src, int h, int w, const std::vector<double>& win,
                      std::vector<double>& tmp, std::vector<double>& dst) {
    const int r = kWindow / 2;
    const int vw = w - 2 * r;
    const int vh = h - 2 * r;
    tmp.assign(static_cast<std::size_t>(h) * vw, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += win[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * vw + x] = acc;
        }
    dst.assign(static_cast<std::size_t>(vh) * vw, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWindow; ++i) acc += win[i] * tmp[static_cast<std::size_t>(y + i) * vw + x];
            dst[static_cast<std::size_t>(y) * vw + x] = acc;
        }
}

double ssim_plane(const std::vector<double>& pa, const std::vector<double>& pb, int h, int w) {
    static const std::vector<double> win = gaussian_window();
    const std::size_t n = pa.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
    }
    std::vector<double> tmp, mu_a, mu_b, m_aa, m_bb, m_ab;
    separable_filter(pa, h, w, win, tmp, mu_a);
    separable_filter(pb, h, w, win, tmp, mu_b);
    separable_filter(aa, h, w, win, tmp, m_aa);
    separable_filter(bb, h, w, win, tmp, m_bb);
    separable_filter(ab, h, w, win, tmp, m_ab);

    const double c1 = kK1 * kK1;  // (k1 * L)^2 with L = 1
    const double c2 = kK2 * kK2;
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

}  // namespace

double psnr(const ImageGrid& a, const ImageGrid& b) {
    check_shapes(a, b);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double av = std::clamp(a.values[i], 0.0f, 1.0f);
        const double bv = std::clamp(b.values[i], 0.0f, 1.0f);
        mse += (av - bv) * (av - bv);
    }
    mse /= static_cast<double>(a.values.size());
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageGrid& a, const ImageGrid& b, SsimChannelMode mode) {
    check_shapes(a, b);
    if (a.height < kWindow || a.width < kWindow)
        raise(ErrorCode::shape, "image " + a.shape_str() + " smaller than the " +
                                    std::to_string(kWindow) + "x" + std::to_string(kWindow) +
                                    " SSIM window");
    const std::size_t npix = static_cast<std::size_t>(a.height) * a.width;
    std::vector<double> pa(npix), pb(npix);

    if (mode == SsimChannelMode::luma && a.channels == 3) {
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                auto luma = [&](const ImageGrid& g) {
                    return 0.299 * std::clamp(g.at(y, x, 0), 0.0f, 1.0f) +
                           0.587 * std::clamp(g.at(y, x, 1), 0.0f, 1.0f) +
                           0.114 * std::clamp(g.at(y, x, 2), 0.0f, 1.0f);
                };
                pa[static_cast<std::size_t>(y) * a.width + x] = luma(a);
                pb[static_cast<std::size_t>(y) * a.width + x] = luma(b);
            }
        return ssim_plane(pa, pb, a.height, a.width);
    }

    double acc = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                pa[static_cast<std::size_t>(y) * a.width + x] = std::clamp(a.at(y, x, c), 0.0f, 1.0f);
                pb[static_cast<std::size_t>(y) * a.width + x] = std::clamp(b.at(y, x, c), 0.0f, 1.0f);
            }
        acc += ssim_plane(pa, pb, a.height, a.width);
    }
    return acc / a.channels;
}

void QualityReport::add(const std::string& name, double p, double s) {
    rows.push_back({name, p, s});
}

void QualityReport::finalize() {
    mean_psnr_db = 0.0;
    mean_ssim = 0.0;
    if (rows.empty()) return;
    for (const auto& r : rows) {
        mean_psnr_db += r.psnr_db;
        mean_ssim += r.ssim;
    }
    mean_psnr_db /= static_cast<double>(rows.size());
    mean_ssim /= static_cast<double>(rows.size());
}

void write_csv(const QualityReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::io, "cannot write report: " + path);
    out << "image,psnr_db,ssim\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& r : report.rows) out << r.name << "," << r.psnr_db << "," << r.ssim << "\n";
    out << "mean," << report.mean_psnr_db << "," << report.mean_ssim << "\n";
    if (!out) raise(ErrorCode::io, "short write: " + path);
}

}  // namespace sdap
