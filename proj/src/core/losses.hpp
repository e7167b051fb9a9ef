#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "core/net.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"
#include "core/tensor.hpp"

namespace sdap {

enum class LossVariant { bsn, apbsn, pbsn1, pbsn2, pbsn3, sdbsn, csdbsn };
enum class SamplerKind { pd, rsg };

inline const char* to_string(LossVariant v) {
    switch (v) {
        case LossVariant::bsn: return "bsn";
        case LossVariant::apbsn: return "apbsn";
        case LossVariant::pbsn1: return "pbsn1";
        case LossVariant::pbsn2: return "pbsn2";
        case LossVariant::pbsn3: return "pbsn3";
        case LossVariant::sdbsn: return "sdbsn";
        case LossVariant::csdbsn: return "csdbsn";
    }
    return "?";
}

inline LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "bsn") return LossVariant::bsn;
    if (s == "apbsn") return LossVariant::apbsn;
    if (s == "pbsn1") return LossVariant::pbsn1;
    if (s == "pbsn2") return LossVariant::pbsn2;
    if (s == "pbsn3") return LossVariant::pbsn3;
    if (s == "sdbsn") return LossVariant::sdbsn;
    if (s == "csdbsn") return LossVariant::csdbsn;
    raise(ErrorCode::config, "unknown loss variant '" + s + "'");
}

inline const char* to_string(SamplerKind s) { return s == SamplerKind::pd ? "pd" : "rsg"; }

inline SamplerKind sampler_from_string(const std::string& s) {
    if (s == "pd") return SamplerKind::pd;
    if (s == "rsg") return SamplerKind::rsg;
    raise(ErrorCode::config, "unknown sampler '" + s + "'");
}

struct LossSpec {
    LossVariant variant = LossVariant::csdbsn;
    int stride = 5;
    double sigma_eps = 0.0;  // perturbation std in 0..255 units, pbsn variants only
    SamplerKind sampler = SamplerKind::rsg;
    bool tie_perturbation_pair = false;  // test fixture: forces eps1 == eps2 in pbsn3

    bool is_pbsn() const {
        return variant == LossVariant::pbsn1 || variant == LossVariant::pbsn2 ||
               variant == LossVariant::pbsn3;
    }
    void validate() const {
        if (stride < 1) raise(ErrorCode::config, "loss stride must be >= 1");
        if (sigma_eps < 0) raise(ErrorCode::config, "sigma_eps must be >= 0");
    }
};

// The denoised/raw pairing every loss reduces over. Row m of `inputs` goes
// through the network and is compared against row m of `targets`; the loss is
// the mean (squared for bsn, absolute otherwise) over every element.
template <typename T>
struct PairBatch {
    Tensor<T> inputs, targets;
    bool squared = false;
};

namespace detail {

// gathers sub-sample k of batch item ni into row `row` of dst
template <typename T>
void gather_sub(const Tensor<T>& batch, int ni, const SamplingPlan& plan, int k, Tensor<T>& dst,
                int row) {
    for (int c = 0; c < batch.c; ++c) {
        const T* src = batch.plane(ni, c);
        T* out = dst.plane(row, c);
        for (int u = 0; u < plan.grid_h; ++u)
            for (int v = 0; v < plan.grid_w; ++v) {
                int sy, sx;
                plan.source(k, u, v, sy, sx);
                out[static_cast<std::size_t>(u) * plan.grid_w + v] =
                    src[static_cast<std::size_t>(sy) * batch.w + sx];
            }
    }
}

}  // namespace detail

// Random-stream consumption order, per batch item: first the RSG plan (only
// when sampler = rsg and stride > 1), then the perturbation fields (only for
// pbsn variants, drawn even when sigma_eps = 0 so the stream advances
// identically across the sigma sweep; pbsn3 draws eps1 fully, then eps2).
template <typename T>
PairBatch<T> build_pair_batch(const Tensor<T>& noisy, const LossSpec& spec, Rng& rng) {
    spec.validate();
    PairBatch<T> pb;

    if (spec.variant == LossVariant::bsn) {
        pb.inputs = noisy;
        pb.targets = noisy;
        pb.squared = true;
        return pb;
    }

    const int s = spec.stride;
    if (noisy.h % s != 0 || noisy.w % s != 0)
        raise(ErrorCode::shape, "batch " + noisy.shape_str() + " not divisible by stride " +
                                    std::to_string(s));
    const int s2 = s * s;
    const int sh = noisy.h / s, sw = noisy.w / s;
    const bool two_only = spec.variant == LossVariant::sdbsn;
    const int pairs_per_item = two_only ? 1 : s2;
    const int rows = noisy.n * pairs_per_item;
    pb.inputs = Tensor<T>(rows, noisy.c, sh, sw);
    pb.targets = Tensor<T>(rows, noisy.c, sh, sw);

    Tensor<T> subs(s2, noisy.c, sh, sw);
    const T eps_scale = static_cast<T>(spec.sigma_eps / 255.0);
    for (int ni = 0; ni < noisy.n; ++ni) {
        const SamplingPlan plan = spec.sampler == SamplerKind::rsg
                                      ? make_rsg_plan(s, noisy.h, noisy.w, rng)
                                      : identity_plan(s, noisy.h, noisy.w);
        for (int k = 0; k < s2; ++k) detail::gather_sub(noisy, ni, plan, k, subs, k);

        const int base = ni * pairs_per_item;
        switch (spec.variant) {
            case LossVariant::apbsn:
            case LossVariant::pbsn1:
            case LossVariant::pbsn2:
            case LossVariant::pbsn3:
                for (int k = 0; k < s2; ++k) {
                    std::copy_n(subs.plane(k, 0), subs.plane_size() * subs.c,
                                pb.inputs.plane(base + k, 0));
                    std::copy_n(subs.plane(k, 0), subs.plane_size() * subs.c,
                                pb.targets.plane(base + k, 0));
                }
                break;
            case LossVariant::sdbsn:
                std::copy_n(subs.plane(0, 0), subs.plane_size() * subs.c, pb.inputs.plane(base, 0));
                std::copy_n(subs.plane(s2 > 1 ? 1 : 0, 0), subs.plane_size() * subs.c,
                            pb.targets.plane(base, 0));
                break;
            case LossVariant::csdbsn:
                for (int k = 0; k < s2; ++k) {
                    std::copy_n(subs.plane(k, 0), subs.plane_size() * subs.c,
                                pb.inputs.plane(base + k, 0));
                    std::copy_n(subs.plane((k + 1) % s2, 0), subs.plane_size() * subs.c,
                                pb.targets.plane(base + k, 0));
                }
                break;
            default: break;
        }

        if (spec.is_pbsn()) {
            const std::size_t item_elems = static_cast<std::size_t>(s2) * subs.c * subs.plane_size();
            T* in_base = pb.inputs.plane(base, 0);
            T* tg_base = pb.targets.plane(base, 0);
            if (spec.variant == LossVariant::pbsn1) {
                for (std::size_t i = 0; i < item_elems; ++i)
                    in_base[i] += eps_scale * static_cast<T>(rng.normal());
            } else if (spec.variant == LossVariant::pbsn2) {
                for (std::size_t i = 0; i < item_elems; ++i)
                    tg_base[i] += eps_scale * static_cast<T>(rng.normal());
            } else {
                std::vector<T> eps1(item_elems);
                for (T& e : eps1) e = static_cast<T>(rng.normal());
                if (spec.tie_perturbation_pair) {
                    for (std::size_t i = 0; i < item_elems; ++i) {
                        in_base[i] += eps_scale * eps1[i];
                        tg_base[i] += eps_scale * eps1[i];
                    }
                } else {
                    for (std::size_t i = 0; i < item_elems; ++i) in_base[i] += eps_scale * eps1[i];
                    for (std::size_t i = 0; i < item_elems; ++i)
                        tg_base[i] += eps_scale * static_cast<T>(rng.normal());
                }
            }
        }
    }
    return pb;
}

// loss value for an arbitrary denoiser (test fixtures pass identity/zero maps)
template <typename T, typename Fn>
T loss_value_fn(Fn&& model, const Tensor<T>& noisy, const LossSpec& spec, Rng& rng) {
    PairBatch<T> pb = build_pair_batch(noisy, spec, rng);
    const Tensor<T> out = std::forward<Fn>(model)(pb.inputs);
    if (!out.same_shape(pb.targets))
        raise(ErrorCode::shape, "model output " + out.shape_str() + " vs targets " +
                                    pb.targets.shape_str());
    double acc = 0.0;
    if (pb.squared) {
        for (std::size_t i = 0; i < out.v.size(); ++i) {
            const double diff = static_cast<double>(out.v[i]) - static_cast<double>(pb.targets.v[i]);
            acc += diff * diff;
        }
    } else {
        for (std::size_t i = 0; i < out.v.size(); ++i)
            acc += std::abs(static_cast<double>(out.v[i]) - static_cast<double>(pb.targets.v[i]));
    }
    return static_cast<T>(acc / static_cast<double>(out.v.size()));
}

template <typename T>
T loss_value(const BsnNet<T>& net, const Tensor<T>& noisy, const LossSpec& spec, Rng& rng) {
    return loss_value_fn([&net](const Tensor<T>& x) { return net.forward(x); }, noisy, spec, rng);
}

// loss plus parameter gradients, accumulated into `grads`
template <typename T>
T loss_and_grad(BsnNet<T>& net, const Tensor<T>& noisy, const LossSpec& spec, Rng& rng,
                BsnGrads<T>& grads) {
    PairBatch<T> pb = build_pair_batch(noisy, spec, rng);
    BsnTrace<T> trace;
    const Tensor<T> out = net.forward(pb.inputs, &trace);
    Tensor<T> d(out.n, out.c, out.h, out.w);
    const T inv = T(1) / static_cast<T>(out.v.size());
    double acc = 0.0;
    if (pb.squared) {
        for (std::size_t i = 0; i < out.v.size(); ++i) {
            const T diff = out.v[i] - pb.targets.v[i];
            acc += static_cast<double>(diff) * static_cast<double>(diff);
            d.v[i] = T(2) * diff * inv;
        }
    } else {
        for (std::size_t i = 0; i < out.v.size(); ++i) {
            const T diff = out.v[i] - pb.targets.v[i];
            acc += std::abs(static_cast<double>(diff));
            d.v[i] = diff > T(0) ? inv : (diff < T(0) ? -inv : T(0));
        }
    }
    net.backward(trace, d, grads);
    return static_cast<T>(acc / static_cast<double>(out.v.size()));
}

}  // namespace sdap
