#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "core/losses.hpp"
#include "test_util.hpp"

using namespace sdap;

namespace {

template <typename T>
Tensor<T> random_batch(int n, int c, int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<T> t(n, c, h, w);
    for (T& v : t.v) v = static_cast<T>(rng.uniform01());
    return t;
}

const auto identity_model = [](const Tensor<float>& x) { return x; };
const auto zero_model = [](const Tensor<float>& x) { return Tensor<float>(x.n, x.c, x.h, x.w); };

LossSpec spec_of(LossVariant v, int stride, SamplerKind sampler = SamplerKind::pd,
                 double sigma_eps = 0.0) {
    LossSpec s;
    s.variant = v;
    s.stride = stride;
    s.sampler = sampler;
    s.sigma_eps = sigma_eps;
    return s;
}

}  // namespace

TEST_CASE("identity model drives every loss to zero") {
    const Tensor<float> batch = random_batch<float>(2, 1, 10, 10, 1);
    for (LossVariant v : {LossVariant::bsn, LossVariant::apbsn, LossVariant::sdbsn,
                          LossVariant::csdbsn}) {
        for (SamplerKind sk : {SamplerKind::pd, SamplerKind::rsg}) {
            Rng rng(3);
            const float l = loss_value_fn(identity_model, batch, spec_of(v, 2, sk), rng);
            if (v == LossVariant::bsn || v == LossVariant::apbsn) {
                CHECK(l == 0.0f);
            } else {
                CHECK(l >= 0.0f);  // cross-paired targets differ; zero not expected
            }
        }
    }
    // identity pairings specifically
    Rng rng(3);
    CHECK(loss_value_fn(identity_model, batch, spec_of(LossVariant::apbsn, 5), rng) == 0.0f);
}

TEST_CASE("bsn: zero model on constant 0.5 image gives 0.25") {
    Tensor<float> half(2, 1, 8, 8);
    half.fill(0.5f);
    Rng rng(1);
    const float l = loss_value_fn(zero_model, half, spec_of(LossVariant::bsn, 1), rng);
    CHECK(l == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("apbsn: zero model on constant c gives c; stride 1 degenerates to whole image") {
    Tensor<float> c(1, 1, 10, 10);
    c.fill(0.3f);
    Rng rng(1);
    CHECK(loss_value_fn(zero_model, c, spec_of(LossVariant::apbsn, 5), rng) ==
          doctest::Approx(0.3).epsilon(1e-7));

    const Tensor<float> batch = random_batch<float>(1, 1, 8, 8, 2);
    Rng r1(1), r2(1);
    const float s1 = loss_value_fn(zero_model, batch, spec_of(LossVariant::apbsn, 1), r1);
    double mean_abs = 0.0;
    for (float v : batch.v) mean_abs += std::abs(v);
    mean_abs /= batch.v.size();
    CHECK(s1 == doctest::Approx(mean_abs).epsilon(1e-6));
}

TEST_CASE("pbsn with sigma_eps = 0 equals apbsn exactly") {
    const Tensor<float> batch = random_batch<float>(2, 3, 10, 10, 3);
    for (SamplerKind sk : {SamplerKind::pd, SamplerKind::rsg}) {
        Rng r_ref(7);
        const float ref = loss_value_fn(identity_model, batch, spec_of(LossVariant::apbsn, 2, sk),
                                        r_ref);
        for (LossVariant v : {LossVariant::pbsn1, LossVariant::pbsn2, LossVariant::pbsn3}) {
            Rng r(7);
            CHECK(loss_value_fn(identity_model, batch, spec_of(v, 2, sk, 0.0), r) == ref);
        }
        // zero model too: targets must be untouched by a zero-scaled perturbation
        Rng r_z0(7), r_z1(7);
        const float z_ref =
            loss_value_fn(zero_model, batch, spec_of(LossVariant::apbsn, 2, sk), r_z0);
        CHECK(loss_value_fn(zero_model, batch, spec_of(LossVariant::pbsn2, 2, sk, 0.0), r_z1) ==
              z_ref);
    }
}

TEST_CASE("pbsn2 with zero model on zero image recovers the half-normal mean") {
    // E|eps| = sigma/255 * sqrt(2/pi), checked over >= 1e6 pixels
    Tensor<float> zeros(1, 1, 1024, 1024);
    Rng rng(11);
    const double sigma_eps = 25.0;
    const float l =
        loss_value_fn(zero_model, zeros, spec_of(LossVariant::pbsn2, 1, SamplerKind::pd, sigma_eps),
                      rng);
    const double expect = sigma_eps / 255.0 * std::sqrt(2.0 / std::numbers::pi);
    CHECK(l == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("pbsn3 with tied perturbations and identity model gives 0") {
    const Tensor<float> batch = random_batch<float>(1, 1, 8, 8, 4);
    LossSpec spec = spec_of(LossVariant::pbsn3, 2, SamplerKind::pd, 10.0);
    spec.tie_perturbation_pair = true;
    Rng rng(5);
    CHECK(loss_value_fn(identity_model, batch, spec, rng) == 0.0f);

    spec.tie_perturbation_pair = false;
    Rng rng2(5);
    CHECK(loss_value_fn(identity_model, batch, spec, rng2) > 0.0f);
}

TEST_CASE("sdbsn: stride 1 and constant images give zero under identity") {
    const Tensor<float> batch = random_batch<float>(1, 1, 6, 6, 5);
    Rng rng(1);
    CHECK(loss_value_fn(identity_model, batch, spec_of(LossVariant::sdbsn, 1), rng) == 0.0f);

    Tensor<float> c(1, 1, 6, 6);
    c.fill(0.7f);
    Rng rng2(1);
    CHECK(loss_value_fn(identity_model, c, spec_of(LossVariant::sdbsn, 2, SamplerKind::rsg), rng2) ==
          0.0f);
}

TEST_CASE("sdbsn uses exactly the first two sub-samples") {
    // zero model: loss = mean |sub_1| (the target), regardless of sub_0
    const Tensor<float> batch = random_batch<float>(1, 1, 8, 8, 6);
    Rng rng(1);
    const float l = loss_value_fn(zero_model, batch, spec_of(LossVariant::sdbsn, 2), rng);
    // PD sub 1 holds pixels at columns 1 mod 2, rows 0 mod 2
    double expect = 0.0;
    for (int y = 0; y < 8; y += 2)
        for (int x = 1; x < 8; x += 2) expect += std::abs(batch.at(0, 0, y, x));
    expect /= 16.0;
    CHECK(l == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("csdbsn: stride 1 equals apbsn at stride 1; constants give zero") {
    const Tensor<float> batch = random_batch<float>(2, 1, 8, 8, 7);
    Rng r1(2), r2(2);
    CHECK(loss_value_fn(zero_model, batch, spec_of(LossVariant::csdbsn, 1), r1) ==
          loss_value_fn(zero_model, batch, spec_of(LossVariant::apbsn, 1), r2));

    Tensor<float> c(1, 1, 10, 10);
    c.fill(0.42f);
    Rng r3(2);
    CHECK(loss_value_fn(identity_model, c, spec_of(LossVariant::csdbsn, 5, SamplerKind::rsg), r3) ==
          0.0f);
}

TEST_CASE("csdbsn on the 4x4 raster with the PD plan: brute-force oracle") {
    // subs (hand enumeration): s0={0,2,8,10} s1={1,3,9,11} s2={4,6,12,14} s3={5,7,13,15}
    Tensor<float> raster(1, 1, 4, 4);
    for (int i = 0; i < 16; ++i) raster.v[i] = static_cast<float>(i);

    const float subs[4][4] = {{0, 2, 8, 10}, {1, 3, 9, 11}, {4, 6, 12, 14}, {5, 7, 13, 15}};
    double brute = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) brute += std::abs(subs[i][k] - subs[(i + 1) % 4][k]);
    brute /= 16.0;
    CHECK(brute == doctest::Approx(2.5));  // frozen oracle value

    Rng rng(1);
    const float l = loss_value_fn(identity_model, raster, spec_of(LossVariant::csdbsn, 2), rng);
    CHECK(l == doctest::Approx(brute).epsilon(1e-7));
}

TEST_CASE("csdbsn under pd is invariant to rotating the cycle start") {
    // the cyclic sum visits every adjacent pair once, so any rotation of the
    // pairing must give the same mean
    const Tensor<float> batch = random_batch<float>(1, 1, 8, 8, 8);
    Rng rng(1);
    const float l = loss_value_fn(zero_model, batch, spec_of(LossVariant::csdbsn, 2), rng);

    PairBatch<float> pb;
    {
        Rng r(1);
        pb = build_pair_batch(batch, spec_of(LossVariant::csdbsn, 2), r);
    }
    // rotate: pair i against target of pair (i+1)% s^2 -> same multiset of pairs
    double rotated = 0.0;
    const int s2 = 4;
    const std::size_t per = pb.targets.plane_size();
    for (int i = 0; i < s2; ++i) {
        const float* tgt = pb.targets.plane((i + 1) % s2, 0);
        for (std::size_t k = 0; k < per; ++k) rotated += std::abs(0.0 - tgt[k]);
    }
    rotated /= static_cast<double>(s2 * per);
    CHECK(l == doctest::Approx(rotated).epsilon(1e-6));
}

TEST_CASE("losses are nonnegative and zero only at exact fit") {
    const Tensor<float> batch = random_batch<float>(1, 1, 10, 10, 9);
    for (LossVariant v : {LossVariant::bsn, LossVariant::apbsn, LossVariant::pbsn1,
                          LossVariant::sdbsn, LossVariant::csdbsn}) {
        Rng rng(4);
        const float l = loss_value_fn(zero_model, batch, spec_of(v, 2, SamplerKind::pd, 5.0), rng);
        CHECK(l > 0.0f);
    }
}

TEST_CASE("rsg sampler draws a fresh plan per batch item") {
    // two identical items: with rsg their sub-decompositions should differ
    Tensor<float> batch(2, 1, 8, 8);
    const Tensor<float> one = random_batch<float>(1, 1, 8, 8, 10);
    std::copy(one.v.begin(), one.v.end(), batch.plane(0, 0));
    std::copy(one.v.begin(), one.v.end(), batch.plane(1, 0));

    Rng rng(6);
    const PairBatch<float> pb = build_pair_batch(batch, spec_of(LossVariant::apbsn, 2,
                                                                SamplerKind::rsg), rng);
    bool differs = false;
    for (int k = 0; k < 4 && !differs; ++k) {
        const float* a = pb.inputs.plane(k, 0);
        const float* b = pb.inputs.plane(4 + k, 0);
        for (std::size_t i = 0; i < pb.inputs.plane_size(); ++i)
            if (a[i] != b[i]) {
                differs = true;
                break;
            }
    }
    CHECK(differs);
}

TEST_CASE("dimension errors from sampling propagate") {
    const Tensor<float> batch = random_batch<float>(1, 1, 9, 9, 11);
    Rng rng(1);
    CHECK_THROWS_AS(loss_value_fn(identity_model, batch, spec_of(LossVariant::apbsn, 2), rng),
                    Error);
}

TEST_CASE("loss_and_grad matches loss_value and accumulates gradients") {
    BsnConfig cfg;
    cfg.in_channels = 1;
    cfg.base_channels = 8;
    cfg.blocks_per_branch = 1;
    cfg.seed = 2;
    BsnNet<float> net(cfg);
    const Tensor<float> batch = random_batch<float>(2, 1, 10, 10, 12);
    BsnGrads<float> grads;
    grads.init_like(net);

    for (LossVariant v : {LossVariant::bsn, LossVariant::apbsn, LossVariant::csdbsn}) {
        Rng r1(9), r2(9);
        grads.zero();
        const float lg = loss_and_grad(net, batch, spec_of(v, 2), r1, grads);
        const float lv = loss_value(net, batch, spec_of(v, 2), r2);
        CHECK(lg == doctest::Approx(lv).epsilon(1e-6));
        double gsum = 0.0;
        for (const auto& g : grads.gw)
            for (float x : g) gsum += std::abs(x);
        CHECK(gsum > 0.0);
    }
}
