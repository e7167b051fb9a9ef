#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/net.hpp"
#include "test_util.hpp"

using namespace sdap;

namespace {

Tensor<float> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<float> t(n, c, h, w);
    for (float& v : t.v) v = static_cast<float>(rng.uniform01());
    return t;
}

BsnConfig micro_config(int in_channels = 1) {
    BsnConfig cfg;
    cfg.in_channels = in_channels;
    cfg.base_channels = 8;
    cfg.blocks_per_branch = 1;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("output shape matches input for any size above the minimum") {
    BsnNet<float> net(micro_config(3));
    for (auto [h, w] : {std::pair{8, 8}, {13, 9}, {20, 32}}) {
        const Tensor<float> x = random_tensor(2, 3, h, w, 1);
        const Tensor<float> y = net.forward(x);
        CHECK(y.n == 2);
        CHECK(y.c == 3);
        CHECK(y.h == h);
        CHECK(y.w == w);
    }
}

TEST_CASE("too-small input reports the minimum") {
    BsnNet<float> net(micro_config());
    REQUIRE(net.min_input_size() == 4);  // dilation-3 conv pads 3
    CHECK_THROWS_WITH_AS(net.forward(random_tensor(1, 1, 3, 8, 1)),
                         doctest::Contains("minimum spatial size"), Error);
}

TEST_CASE("same seed gives identical parameters, different seed differs") {
    BsnConfig cfg = micro_config();
    BsnNet<float> a(cfg), b(cfg);
    for (std::size_t i = 0; i < a.convs().size(); ++i) {
        CHECK(a.convs()[i].w == b.convs()[i].w);
        CHECK(a.convs()[i].b == b.convs()[i].b);
    }
    cfg.seed = 4;
    BsnNet<float> c(cfg);
    CHECK(a.convs()[0].w != c.convs()[0].w);
}

TEST_CASE("masked centers are structurally zero") {
    BsnNet<float> net(micro_config());
    int masked_layers = 0;
    for (const auto& cv : net.convs()) {
        if (!cv.masked) continue;
        ++masked_layers;
        const int K = cv.ksize, R = cv.radius();
        for (int oc = 0; oc < cv.out_ch; ++oc)
            for (int ic = 0; ic < cv.in_ch; ++ic)
                CHECK(cv.w[(static_cast<std::size_t>(oc) * cv.in_ch + ic) * K * K + R * K + R] ==
                      0.0f);
    }
    CHECK(masked_layers == 2);
}

TEST_CASE("perturbing a pixel never changes the output at that pixel") {
    BsnNet<float> net(micro_config());
    Tensor<float> x = random_tensor(1, 1, 32, 32, 5);
    const Tensor<float> base = net.forward(x);
    x.at(0, 0, 17, 11) += 0.5f;
    const Tensor<float> bumped = net.forward(x);
    CHECK(bumped.at(0, 0, 17, 11) == base.at(0, 0, 17, 11));
}

TEST_CASE("audit passes on fresh models across trials") {
    BsnNet<float> net(micro_config(3));
    const AuditReport report = blind_spot_audit(net, 100, 42);
    CHECK(report.pass);
    CHECK(report.max_deviation == 0.0);
}

TEST_CASE("negative control: unmasked model fails the audit") {
    BsnConfig cfg = micro_config();
    cfg.masked = false;
    BsnNet<float> net(cfg);
    const AuditReport report = blind_spot_audit(net, 50, 42);
    CHECK_FALSE(report.pass);
    CHECK(report.max_deviation > 0.0);
    CHECK(report.detail.find("delta") != std::string::npos);
}

TEST_CASE("neighborhood influence: adjacent pixels do reach the output") {
    BsnNet<float> net(micro_config());
    Tensor<float> x = random_tensor(1, 1, 24, 24, 6);
    const Tensor<float> base = net.forward(x);
    x.at(0, 0, 12, 13) += 0.5f;  // neighbor of (12,12)
    const Tensor<float> bumped = net.forward(x);
    CHECK(bumped.at(0, 0, 12, 12) != base.at(0, 0, 12, 12));
}

TEST_CASE("zero input with a zeroed final layer gives zero output") {
    BsnNet<float> net(micro_config());
    auto& tail2 = net.convs().back();
    std::fill(tail2.w.begin(), tail2.w.end(), 0.0f);
    std::fill(tail2.b.begin(), tail2.b.end(), 0.0f);
    const Tensor<float> y = net.forward(Tensor<float>(1, 1, 8, 8));
    for (float v : y.v) CHECK(v == 0.0f);
}

TEST_CASE("batch outputs equal per-item outputs") {
    BsnNet<float> net(micro_config());
    const Tensor<float> batch = random_tensor(3, 1, 10, 10, 7);
    const Tensor<float> joint = net.forward(batch);
    for (int i = 0; i < 3; ++i) {
        Tensor<float> single(1, 1, 10, 10);
        std::copy_n(batch.plane(i, 0), single.v.size(), single.v.begin());
        const Tensor<float> alone = net.forward(single);
        for (std::size_t k = 0; k < alone.v.size(); ++k)
            CHECK(alone.v[k] == joint.plane(i, 0)[k]);
    }
}

TEST_CASE("translation equivariance in the interior") {
    BsnNet<float> net(micro_config());
    const int shift = 2, side = 32;
    const int margin = net.receptive_radius() + shift + 1;
    const Tensor<float> x = random_tensor(1, 1, side, side, 8);
    Tensor<float> xs(1, 1, side, side);
    for (int y = 0; y < side; ++y)
        for (int xx = 0; xx < side; ++xx)
            xs.at(0, 0, y, xx) =
                (y >= shift && xx >= shift) ? x.at(0, 0, y - shift, xx - shift) : 0.0f;
    const Tensor<float> out = net.forward(x);
    const Tensor<float> out_s = net.forward(xs);
    for (int y = margin; y < side - margin; ++y)
        for (int xx = margin; xx < side - margin; ++xx)
            CHECK(out_s.at(0, 0, y, xx) == doctest::Approx(out.at(0, 0, y - shift, xx - shift))
                                               .epsilon(1e-6));
}

TEST_CASE("forward is deterministic") {
    BsnNet<float> net(micro_config());
    const Tensor<float> x = random_tensor(2, 1, 16, 16, 9);
    const Tensor<float> a = net.forward(x);
    const Tensor<float> b = net.forward(x);
    CHECK(a.v == b.v);
}

TEST_CASE("receptive radius follows blocks and dilations") {
    BsnConfig cfg = micro_config();
    cfg.blocks_per_branch = 2;
    BsnNet<float> net(cfg);
    // branch at dilation 3: masked radius 2 + 2 blocks * 3
    CHECK(net.receptive_radius() == 8);
}

TEST_CASE("config validation rejects bad shapes") {
    BsnConfig cfg;
    cfg.in_channels = 2;
    CHECK_THROWS_AS(BsnNet<float>{cfg}, Error);
    cfg = BsnConfig{};
    cfg.base_channels = 7;
    CHECK_THROWS_AS(BsnNet<float>{cfg}, Error);
    cfg = BsnConfig{};
    cfg.blocks_per_branch = 0;
    CHECK_THROWS_AS(BsnNet<float>{cfg}, Error);
}
