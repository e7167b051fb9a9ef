#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/image.hpp"
#include "test_util.hpp"

using namespace sdap;

TEST_CASE("8-bit scale mapping is exact") {
    testutil::TempDir tmp("scale");
    ImageGrid img(1, 3, 1);
    img.values = {1.0f, 0.0f, 128.0f / 255.0f};
    save_image(img, tmp.file("px.png"));
    const ImageGrid back = load_image(tmp.file("px.png"));
    CHECK(back.values[0] == 1.0f);
    CHECK(back.values[1] == 0.0f);
    CHECK(back.values[2] == 128.0f / 255.0f);
}

TEST_CASE("save rounds half-up and clips") {
    testutil::TempDir tmp("round");
    ImageGrid img(1, 3, 1);
    img.values = {0.5f, -0.1f, 1.7f};
    save_image(img, tmp.file("r.pgm"));
    const ImageGrid back = load_image(tmp.file("r.pgm"));
    CHECK(back.values[0] == 128.0f / 255.0f);  // round(127.5) half-up -> byte 128
    CHECK(back.values[1] == 0.0f);
    CHECK(back.values[2] == 1.0f);
}

TEST_CASE("load/save round trip within 1/510 per value") {
    for (const char* name : {"rt.png", "rt.pgm", "rt.ppm"}) {
        testutil::TempDir tmp("rt");
        const int c = std::string(name).ends_with(".ppm") ? 3 : 1;
        const ImageGrid img = testutil::random_image(13, 17, c, 42);
        save_image(img, tmp.file(name));
        const ImageGrid back = load_image(tmp.file(name));
        REQUIRE(back.same_shape(img));
        for (std::size_t i = 0; i < img.values.size(); ++i)
            CHECK(std::abs(back.values[i] - img.values[i]) <= 1.0f / 510.0f + 1e-7f);
    }
}

TEST_CASE("png color round trip") {
    testutil::TempDir tmp("rgb");
    const ImageGrid img = testutil::random_image(9, 7, 3, 7);
    save_image(img, tmp.file("c.png"));
    const ImageGrid back = load_image(tmp.file("c.png"));
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        CHECK(std::abs(back.values[i] - img.values[i]) <= 1.0f / 510.0f + 1e-7f);
}

TEST_CASE("unreadable file names the path") {
    CHECK_THROWS_WITH_AS(load_image("/nonexistent/nope.png"),
                         doctest::Contains("/nonexistent/nope.png"), Error);
}

TEST_CASE("16-bit png is rejected as unsupported depth") {
    testutil::TempDir tmp("deep");
    // hand-rolled 1x1 16-bit grayscale PNG via libpng is overkill; a PNM with
    // maxval 65535 exercises the same ingestion contract
    {
        std::ofstream out(tmp.file("deep.pgm"), std::ios::binary);
        out << "P5\n1 1\n65535\n";
        out.put(0);
        out.put(0);
    }
    CHECK_THROWS_WITH_AS(load_image(tmp.file("deep.pgm")), doctest::Contains("bit depth"), Error);
}

TEST_CASE("awgn: sigma=0 is the identity") {
    const ImageGrid clean = testutil::random_image(8, 8, 1, 1);
    NoiseSpec spec;
    spec.sigma = 0.0;
    const ImageGrid noisy = add_noise(clean, spec, 3, 0, 99);
    CHECK(noisy.values == clean.values);
}

TEST_CASE("awgn: fixed mode is a pure function of (seed, image index)") {
    const ImageGrid clean = testutil::random_image(16, 16, 1, 2);
    NoiseSpec spec;
    spec.sigma = 25.0;
    spec.seed_mode = SeedMode::fixed;
    const ImageGrid a = add_noise(clean, spec, 0, 4, 1234);
    const ImageGrid b = add_noise(clean, spec, 9, 4, 1234);  // epoch must not matter
    CHECK(a.values == b.values);
    const ImageGrid c = add_noise(clean, spec, 0, 5, 1234);  // image index must matter
    CHECK(a.values != c.values);

    spec.seed_mode = SeedMode::per_epoch_random;
    const ImageGrid d = add_noise(clean, spec, 0, 4, 1234);
    const ImageGrid e = add_noise(clean, spec, 1, 4, 1234);
    CHECK(d.values != e.values);
}

TEST_CASE("awgn: empirical std within 1% of sigma/255 over 1e6 samples") {
    const int side = 1000;
    const ImageGrid clean(side, side, 1, 0.5f);
    NoiseSpec spec;
    spec.sigma = 25.0;
    const ImageGrid noisy = add_noise(clean, spec, 0, 0, 31337);
    double mean = 0.0;
    for (std::size_t i = 0; i < noisy.values.size(); ++i)
        mean += noisy.values[i] - clean.values[i];
    mean /= static_cast<double>(noisy.values.size());
    double var = 0.0;
    for (std::size_t i = 0; i < noisy.values.size(); ++i) {
        const double d = (noisy.values[i] - clean.values[i]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(noisy.values.size());
    const double target = 25.0 / 255.0;
    CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(0.01));
}

TEST_CASE("noise is stored unclipped") {
    const ImageGrid clean(32, 32, 1, 0.01f);
    NoiseSpec spec;
    spec.sigma = 50.0;
    const ImageGrid noisy = add_noise(clean, spec, 0, 0, 7);
    bool below_zero = false;
    for (float v : noisy.values) below_zero |= v < 0.0f;
    CHECK(below_zero);
}

namespace {

double lag1_autocorr(const ImageGrid& noise) {
    double mean = 0.0;
    for (float v : noise.values) mean += v;
    mean /= static_cast<double>(noise.values.size());
    double num = 0.0, den = 0.0;
    for (int y = 0; y < noise.height; ++y)
        for (int x = 0; x + 1 < noise.width; ++x) {
            const double a = noise.at(y, x, 0) - mean;
            const double b = noise.at(y, x + 1, 0) - mean;
            num += a * b;
            den += a * a;
        }
    return num / den;
}

}  // namespace

TEST_CASE("correlated noise: lag-1 autocorrelation exceeds awgn, variance matches") {
    const int side = 400;  // 1.6e5 pixels
    const ImageGrid clean(side, side, 1, 0.0f);
    NoiseSpec awgn_spec;
    awgn_spec.sigma = 25.0;
    NoiseSpec corr_spec;
    corr_spec.kind = NoiseKind::correlated;
    corr_spec.sigma = 25.0;
    corr_spec.correlation_scale = 2;

    const ImageGrid white = add_noise(clean, awgn_spec, 0, 0, 11);
    const ImageGrid corr = add_noise(clean, corr_spec, 0, 0, 11);

    CHECK(lag1_autocorr(corr) > lag1_autocorr(white) + 0.3);

    double var = 0.0;
    for (float v : corr.values) var += static_cast<double>(v) * v;  // clean is zero
    var /= static_cast<double>(corr.values.size());
    const double target = 25.0 / 255.0;
    CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("correlated noise requires scale >= 2") {
    NoiseSpec spec;
    spec.kind = NoiseKind::correlated;
    spec.correlation_scale = 1;
    CHECK_THROWS_AS(add_noise(ImageGrid(4, 4, 1), spec, 0, 0, 1), Error);
}

TEST_CASE("sample_patch: whole image when sizes match") {
    const ImageGrid img = testutil::random_image(6, 6, 1, 3);
    Rng rng(0);
    const ImageGrid p = sample_patch(img, 6, rng);
    CHECK(p.values == img.values);
}

TEST_CASE("sample_patch: reproducible, in bounds, exact sub-grid") {
    const ImageGrid img = testutil::random_image(160, 160, 1, 5);
    Rng r1(77), r2(77);
    const ImageGrid a = sample_patch(img, 80, r1);
    const ImageGrid b = sample_patch(img, 80, r2);
    CHECK(a.values == b.values);

    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(trial);
        const ImageGrid p = sample_patch(img, 80, rng);
        REQUIRE(p.height == 80);
        REQUIRE(p.width == 80);
        // exact sub-grid: locate the crop by matching the first row
        bool found = false;
        for (int y0 = 0; y0 <= 80 && !found; ++y0)
            for (int x0 = 0; x0 <= 80 && !found; ++x0) {
                if (img.at(y0, x0, 0) != p.at(0, 0, 0)) continue;
                bool all = true;
                for (int y = 0; y < 80 && all; y += 7)
                    for (int x = 0; x < 80 && all; x += 7)
                        all = img.at(y0 + y, x0 + x, 0) == p.at(y, x, 0);
                found = all;
            }
        CHECK(found);
    }
}

TEST_CASE("sample_patch: image smaller than patch errors") {
    Rng rng(0);
    CHECK_THROWS_AS(sample_patch(ImageGrid(4, 4, 1), 8, rng), Error);
}

TEST_CASE("synthetic clean images stay in [0,1] and differ by seed") {
    Rng r1(1), r2(2);
    const ImageGrid a = make_synthetic_clean(64, 64, 1, r1);
    const ImageGrid b = make_synthetic_clean(64, 64, 1, r2);
    for (float v : a.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(a.values != b.values);
}
