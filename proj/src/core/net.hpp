#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace sdap {

struct BsnConfig {
    int in_channels = 3;
    int base_channels = 128;
    int blocks_per_branch = 9;
    std::array<int, 2> branch_dilations{2, 3};
    std::uint64_t seed = 1;
    bool masked = true;  // structural center masking; disabled only by test fixtures

    void validate() const {
        if (in_channels != 1 && in_channels != 3)
            raise(ErrorCode::config, "in_channels must be 1 or 3");
        if (base_channels < 2 || base_channels % 2 != 0)
            raise(ErrorCode::config, "base_channels must be even and >= 2");
        if (blocks_per_branch < 1) raise(ErrorCode::config, "blocks_per_branch must be >= 1");
        for (int d : branch_dilations)
            if (d < 1) raise(ErrorCode::config, "branch dilations must be >= 1");
    }
};

inline BsnConfig tiny_bsn_config(int in_channels, std::uint64_t seed = 1) {
    BsnConfig cfg;
    cfg.in_channels = in_channels;
    cfg.base_channels = 32;
    cfg.blocks_per_branch = 2;
    cfg.seed = seed;
    return cfg;
}

template <typename T>
struct Conv2d {
    std::string name;
    int in_ch = 0, out_ch = 0, ksize = 1, dilation = 1;
    bool masked = false;  // center tap structurally zero, skipped in all passes
    std::vector<T> w;     // [out][in][kh][kw]
    std::vector<T> b;     // [out]

    int radius() const { return (ksize - 1) / 2; }
    int pad() const { return dilation * radius(); }
    std::size_t wsize() const {
        return static_cast<std::size_t>(out_ch) * in_ch * ksize * ksize;
    }
};

namespace detail {

constexpr std::size_t kParallelCutoff = 1 << 16;

template <typename T>
void conv_forward(const Conv2d<T>& conv, const Tensor<T>& x, Tensor<T>& y) {
    const int H = x.h, W = x.w, K = conv.ksize, R = conv.radius(), D = conv.dilation;
    const std::size_t work =
        static_cast<std::size_t>(x.n) * conv.out_ch * conv.in_ch * H * W * K * K;
#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
    for (int ni = 0; ni < x.n; ++ni) {
        for (int oc = 0; oc < conv.out_ch; ++oc) {
            T* yp = y.plane(ni, oc);
            std::fill(yp, yp + y.plane_size(), conv.b[oc]);
            for (int ic = 0; ic < conv.in_ch; ++ic) {
                const T* xp = x.plane(ni, ic);
                const T* wk = conv.w.data() + (static_cast<std::size_t>(oc) * conv.in_ch + ic) * K * K;
                for (int kh = 0; kh < K; ++kh) {
                    const int dy = D * (kh - R);
                    const int oy0 = std::max(0, -dy), oy1 = std::min(H, H - dy);
                    for (int kw = 0; kw < K; ++kw) {
                        if (conv.masked && kh == R && kw == R) continue;
                        const T wv = wk[kh * K + kw];
                        const int dx = D * (kw - R);
                        const int ox0 = std::max(0, -dx), ox1 = std::min(W, W - dx);
                        const int len = ox1 - ox0;
                        if (len <= 0) continue;
                        for (int oy = oy0; oy < oy1; ++oy) {
                            T* orow = yp + static_cast<std::size_t>(oy) * W + ox0;
                            const T* irow = xp + static_cast<std::size_t>(oy + dy) * W + (ox0 + dx);
#pragma omp simd
                            for (int i = 0; i < len; ++i) orow[i] += wv * irow[i];
                        }
                    }
                }
            }
        }
    }
}

// dL/dx given dL/dy; dx is overwritten
template <typename T>
void conv_backward_input(const Conv2d<T>& conv, const Tensor<T>& dy, Tensor<T>& dx) {
    const int H = dx.h, W = dx.w, K = conv.ksize, R = conv.radius(), D = conv.dilation;
    const std::size_t work =
        static_cast<std::size_t>(dy.n) * conv.out_ch * conv.in_ch * H * W * K * K;
#pragma omp parallel for collapse(2) schedule(static) if (work > kParallelCutoff)
    for (int ni = 0; ni < dy.n; ++ni) {
        for (int ic = 0; ic < conv.in_ch; ++ic) {
            T* dxp = dx.plane(ni, ic);
            std::fill(dxp, dxp + dx.plane_size(), T(0));
            for (int oc = 0; oc < conv.out_ch; ++oc) {
                const T* dyp = dy.plane(ni, oc);
                const T* wk = conv.w.data() + (static_cast<std::size_t>(oc) * conv.in_ch + ic) * K * K;
                for (int kh = 0; kh < K; ++kh) {
                    const int dyo = D * (kh - R);
                    const int iy0 = std::max(0, dyo), iy1 = std::min(H, H + dyo);
                    for (int kw = 0; kw < K; ++kw) {
                        if (conv.masked && kh == R && kw == R) continue;
                        const T wv = wk[kh * K + kw];
                        const int dxo = D * (kw - R);
                        const int ix0 = std::max(0, dxo), ix1 = std::min(W, W + dxo);
                        const int len = ix1 - ix0;
                        if (len <= 0) continue;
                        for (int iy = iy0; iy < iy1; ++iy) {
                            T* drow = dxp + static_cast<std::size_t>(iy) * W + ix0;
                            const T* grow = dyp + static_cast<std::size_t>(iy - dyo) * W + (ix0 - dxo);
#pragma omp simd
                            for (int i = 0; i < len; ++i) drow[i] += wv * grow[i];
                        }
                    }
                }
            }
        }
    }
}

// accumulates dL/dw, dL/db
template <typename T>
void conv_backward_params(const Conv2d<T>& conv, const Tensor<T>& x, const Tensor<T>& dy,
                          std::vector<T>& gw, std::vector<T>& gb) {
    const int H = x.h, W = x.w, K = conv.ksize, R = conv.radius(), D = conv.dilation;
    const std::size_t work =
        static_cast<std::size_t>(x.n) * conv.out_ch * conv.in_ch * H * W * K * K;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int oc = 0; oc < conv.out_ch; ++oc) {
        T bacc = T(0);
        for (int ni = 0; ni < x.n; ++ni) {
            const T* dyp = dy.plane(ni, oc);
            T s = T(0);
#pragma omp simd reduction(+ : s)
            for (std::size_t i = 0; i < dy.plane_size(); ++i) s += dyp[i];
            bacc += s;
        }
        gb[oc] += bacc;
        for (int ic = 0; ic < conv.in_ch; ++ic) {
            T* gwk = gw.data() + (static_cast<std::size_t>(oc) * conv.in_ch + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
                const int dyo = D * (kh - R);
                const int oy0 = std::max(0, -dyo), oy1 = std::min(H, H - dyo);
                for (int kw = 0; kw < K; ++kw) {
                    if (conv.masked && kh == R && kw == R) continue;
                    const int dxo = D * (kw - R);
                    const int ox0 = std::max(0, -dxo), ox1 = std::min(W, W - dxo);
                    const int len = ox1 - ox0;
                    if (len <= 0) continue;
                    T acc = T(0);
                    for (int ni = 0; ni < x.n; ++ni) {
                        const T* dyp = dy.plane(ni, oc);
                        const T* xp = x.plane(ni, ic);
                        for (int oy = oy0; oy < oy1; ++oy) {
                            const T* grow = dyp + static_cast<std::size_t>(oy) * W + ox0;
                            const T* irow = xp + static_cast<std::size_t>(oy + dyo) * W + (ox0 + dxo);
                            T rowacc = T(0);
#pragma omp simd reduction(+ : rowacc)
                            for (int i = 0; i < len; ++i) rowacc += grow[i] * irow[i];
                            acc += rowacc;
                        }
                    }
                    gwk[kh * K + kw] += acc;
                }
            }
        }
    }
}

template <typename T>
void relu_forward(const Tensor<T>& pre, Tensor<T>& act) {
    act = pre;
    for (T& v : act.v) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& pre, Tensor<T>& d) {
    for (std::size_t i = 0; i < d.v.size(); ++i)
        if (!(pre.v[i] > T(0))) d.v[i] = T(0);
}

}  // namespace detail

template <typename T>
struct BsnTrace {
    struct Block {
        Tensor<T> block_in, dil_pre, dil_act, mix_out;
    };
    struct Branch {
        Tensor<T> entry_pre, entry_act;
        Tensor<T> pre0_pre, pre0_act, pre1_pre, pre1_act;
        std::vector<Block> blocks;
        Tensor<T> body_out;  // activation entering the closing 1x1
        Tensor<T> post_pre, post_act;
    };
    Tensor<T> input;
    Tensor<T> head_pre, head_act;
    std::array<Branch, 2> branches;
    Tensor<T> concat;
    Tensor<T> t0_pre, t0_act, t1_pre, t1_act;

    // smallest |preactivation| seen at any rectifier; finite-difference checks
    // use it to stay away from kinks
    T min_abs_preact = std::numeric_limits<T>::max();
};

template <typename T>
class BsnNet;

template <typename T>
struct BsnGrads {
    std::vector<std::vector<T>> gw, gb;  // parallel to BsnNet::convs()

    void init_like(const BsnNet<T>& net);
    void zero() {
        for (auto& g : gw) std::fill(g.begin(), g.end(), T(0));
        for (auto& g : gb) std::fill(g.begin(), g.end(), T(0));
    }
};

// Blind-spot denoiser: 1x1 entry convolution feeding two parallel branches.
// Branch with dilation d starts with a (2d-1)x(2d-1) convolution whose center
// tap is structurally zero, followed by residual blocks of dilation-d 3x3
// convolutions mixed by 1x1s. Every post-mask offset is a multiple of d while
// the masked kernel only reaches offsets below d, so no composition of taps
// can return to the center pixel: output at p never depends on input at p.
template <typename T>
class BsnNet {
public:
    explicit BsnNet(const BsnConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        build();
        init_params();
    }

    const BsnConfig& config() const { return cfg_; }
    std::vector<Conv2d<T>>& convs() { return convs_; }
    const std::vector<Conv2d<T>>& convs() const { return convs_; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& cv : convs_) n += cv.wsize() + cv.b.size();
        return n;
    }

    // radius of the full receptive field (masked entry + dilated blocks)
    int receptive_radius() const {
        int r = 0;
        for (int d : cfg_.branch_dilations) r = std::max(r, (d - 1) + cfg_.blocks_per_branch * d);
        return r;
    }

    // smallest spatial side forward() accepts: one pixel beyond the widest
    // single-layer reach, so every kernel has at least one in-bounds tap row
    int min_input_size() const {
        int m = 1;
        for (const auto& cv : convs_) m = std::max(m, cv.pad() + 1);
        return m;
    }

    Tensor<T> forward(const Tensor<T>& x, BsnTrace<T>* tr = nullptr) const {
        if (x.c != cfg_.in_channels)
            raise(ErrorCode::shape, "input has " + std::to_string(x.c) + " channels, model expects " +
                                        std::to_string(cfg_.in_channels));
        if (x.h < min_input_size() || x.w < min_input_size())
            raise(ErrorCode::shape, "input " + x.shape_str() + " below minimum spatial size " +
                                        std::to_string(min_input_size()));
        BsnTrace<T> local;
        BsnTrace<T>& t = tr ? *tr : local;
        t.min_abs_preact = std::numeric_limits<T>::max();
        auto note_pre = [&t](const Tensor<T>& pre) {
            for (const T& v : pre.v) t.min_abs_preact = std::min(t.min_abs_preact, std::abs(v));
        };

        t.input = x;
        const int B = cfg_.base_channels;
        t.head_pre = Tensor<T>(x.n, B, x.h, x.w);
        detail::conv_forward(convs_[head_], x, t.head_pre);
        note_pre(t.head_pre);
        detail::relu_forward(t.head_pre, t.head_act);

        for (int b = 0; b < 2; ++b) {
            auto& br = t.branches[b];
            const auto& idx = branch_[b];
            br.entry_pre = Tensor<T>(x.n, B, x.h, x.w);
            detail::conv_forward(convs_[idx.entry], t.head_act, br.entry_pre);
            note_pre(br.entry_pre);
            detail::relu_forward(br.entry_pre, br.entry_act);

            br.pre0_pre = Tensor<T>(x.n, B, x.h, x.w);
            detail::conv_forward(convs_[idx.pre0], br.entry_act, br.pre0_pre);
            note_pre(br.pre0_pre);
            detail::relu_forward(br.pre0_pre, br.pre0_act);

            br.pre1_pre = Tensor<T>(x.n, B, x.h, x.w);
            detail::conv_forward(convs_[idx.pre1], br.pre0_act, br.pre1_pre);
            note_pre(br.pre1_pre);
            detail::relu_forward(br.pre1_pre, br.pre1_act);

            Tensor<T> cur = br.pre1_act;
            br.blocks.resize(idx.blocks.size());
            for (std::size_t j = 0; j < idx.blocks.size(); ++j) {
                auto& blk = br.blocks[j];
                blk.block_in = cur;
                blk.dil_pre = Tensor<T>(x.n, B, x.h, x.w);
                detail::conv_forward(convs_[idx.blocks[j].first], blk.block_in, blk.dil_pre);
                note_pre(blk.dil_pre);
                detail::relu_forward(blk.dil_pre, blk.dil_act);
                blk.mix_out = Tensor<T>(x.n, B, x.h, x.w);
                detail::conv_forward(convs_[idx.blocks[j].second], blk.dil_act, blk.mix_out);
                for (std::size_t i = 0; i < cur.v.size(); ++i)
                    cur.v[i] = blk.block_in.v[i] + blk.mix_out.v[i];
            }
            br.body_out = cur;
            br.post_pre = Tensor<T>(x.n, B, x.h, x.w);
            detail::conv_forward(convs_[idx.post], br.body_out, br.post_pre);
            note_pre(br.post_pre);
            detail::relu_forward(br.post_pre, br.post_act);
        }

        t.concat = Tensor<T>(x.n, 2 * B, x.h, x.w);
        for (int ni = 0; ni < x.n; ++ni)
            for (int b = 0; b < 2; ++b)
                for (int ci = 0; ci < B; ++ci)
                    std::copy_n(t.branches[b].post_act.plane(ni, ci), t.concat.plane_size(),
                                t.concat.plane(ni, b * B + ci));

        t.t0_pre = Tensor<T>(x.n, B, x.h, x.w);
        detail::conv_forward(convs_[tail_[0]], t.concat, t.t0_pre);
        note_pre(t.t0_pre);
        detail::relu_forward(t.t0_pre, t.t0_act);
        t.t1_pre = Tensor<T>(x.n, B / 2, x.h, x.w);
        detail::conv_forward(convs_[tail_[1]], t.t0_act, t.t1_pre);
        note_pre(t.t1_pre);
        detail::relu_forward(t.t1_pre, t.t1_act);
        Tensor<T> out(x.n, cfg_.in_channels, x.h, x.w);
        detail::conv_forward(convs_[tail_[2]], t.t1_act, out);
        return out;
    }

    // accumulates parameter gradients of a scalar loss given dL/d(output)
    void backward(const BsnTrace<T>& t, const Tensor<T>& d_out, BsnGrads<T>& g) const {
        using namespace detail;
        const int B = cfg_.base_channels;
        const int n = t.input.n, h = t.input.h, w = t.input.w;

        Tensor<T> d = d_out;
        conv_backward_params(convs_[tail_[2]], t.t1_act, d, g.gw[tail_[2]], g.gb[tail_[2]]);
        Tensor<T> d1(n, B / 2, h, w);
        conv_backward_input(convs_[tail_[2]], d, d1);
        relu_backward(t.t1_pre, d1);

        conv_backward_params(convs_[tail_[1]], t.t0_act, d1, g.gw[tail_[1]], g.gb[tail_[1]]);
        Tensor<T> d0(n, B, h, w);
        conv_backward_input(convs_[tail_[1]], d1, d0);
        relu_backward(t.t0_pre, d0);

        conv_backward_params(convs_[tail_[0]], t.concat, d0, g.gw[tail_[0]], g.gb[tail_[0]]);
        Tensor<T> dcat(n, 2 * B, h, w);
        conv_backward_input(convs_[tail_[0]], d0, dcat);

        Tensor<T> d_head(n, B, h, w);
        for (int b = 0; b < 2; ++b) {
            const auto& br = t.branches[b];
            const auto& idx = branch_[b];
            Tensor<T> db(n, B, h, w);
            for (int ni = 0; ni < n; ++ni)
                for (int ci = 0; ci < B; ++ci)
                    std::copy_n(dcat.plane(ni, b * B + ci), db.plane_size(), db.plane(ni, ci));
            relu_backward(br.post_pre, db);
            conv_backward_params(convs_[idx.post], br.body_out, db, g.gw[idx.post], g.gb[idx.post]);
            Tensor<T> dcur(n, B, h, w);
            conv_backward_input(convs_[idx.post], db, dcur);

            for (std::size_t j = idx.blocks.size(); j-- > 0;) {
                const auto& blk = br.blocks[j];
                // block output = block_in + mix(relu(dil(block_in)))
                conv_backward_params(convs_[idx.blocks[j].second], blk.dil_act, dcur,
                                     g.gw[idx.blocks[j].second], g.gb[idx.blocks[j].second]);
                Tensor<T> d_dil(n, B, h, w);
                conv_backward_input(convs_[idx.blocks[j].second], dcur, d_dil);
                relu_backward(blk.dil_pre, d_dil);
                conv_backward_params(convs_[idx.blocks[j].first], blk.block_in, d_dil,
                                     g.gw[idx.blocks[j].first], g.gb[idx.blocks[j].first]);
                Tensor<T> d_conv(n, B, h, w);
                conv_backward_input(convs_[idx.blocks[j].first], d_dil, d_conv);
                for (std::size_t i = 0; i < dcur.v.size(); ++i) dcur.v[i] += d_conv.v[i];
            }

            relu_backward(br.pre1_pre, dcur);
            conv_backward_params(convs_[idx.pre1], br.pre0_act, dcur, g.gw[idx.pre1], g.gb[idx.pre1]);
            Tensor<T> dp(n, B, h, w);
            conv_backward_input(convs_[idx.pre1], dcur, dp);
            relu_backward(br.pre0_pre, dp);
            conv_backward_params(convs_[idx.pre0], br.entry_act, dp, g.gw[idx.pre0], g.gb[idx.pre0]);
            Tensor<T> de(n, B, h, w);
            conv_backward_input(convs_[idx.pre0], dp, de);
            relu_backward(br.entry_pre, de);
            conv_backward_params(convs_[idx.entry], t.head_act, de, g.gw[idx.entry], g.gb[idx.entry]);
            Tensor<T> dh(n, B, h, w);
            conv_backward_input(convs_[idx.entry], de, dh);
            for (std::size_t i = 0; i < d_head.v.size(); ++i) d_head.v[i] += dh.v[i];
        }

        relu_backward(t.head_pre, d_head);
        conv_backward_params(convs_[head_], t.input, d_head, g.gw[head_], g.gb[head_]);
        // gradient w.r.t. the image itself is never needed
    }

private:
    void build() {
        const int B = cfg_.base_channels;
        auto add = [this](const std::string& name, int in, int out, int k, int dil, bool masked) {
            Conv2d<T> cv;
            cv.name = name;
            cv.in_ch = in;
            cv.out_ch = out;
            cv.ksize = k;
            cv.dilation = dil;
            cv.masked = masked;
            cv.w.assign(cv.wsize(), T(0));
            cv.b.assign(out, T(0));
            convs_.push_back(std::move(cv));
            return static_cast<int>(convs_.size() - 1);
        };
        head_ = add("head", cfg_.in_channels, B, 1, 1, false);
        for (int b = 0; b < 2; ++b) {
            const int d = cfg_.branch_dilations[b];
            const std::string p = "branch" + std::to_string(b) + ".";
            branch_[b].entry = add(p + "entry", B, B, 2 * d - 1, 1, cfg_.masked);
            branch_[b].pre0 = add(p + "pre0", B, B, 1, 1, false);
            branch_[b].pre1 = add(p + "pre1", B, B, 1, 1, false);
            for (int j = 0; j < cfg_.blocks_per_branch; ++j) {
                const std::string bp = p + "block" + std::to_string(j) + ".";
                const int dil = add(bp + "dil", B, B, 3, d, false);
                const int mix = add(bp + "mix", B, B, 1, 1, false);
                branch_[b].blocks.emplace_back(dil, mix);
            }
            branch_[b].post = add(p + "post", B, B, 1, 1, false);
        }
        tail_[0] = add("tail0", 2 * B, B, 1, 1, false);
        tail_[1] = add("tail1", B, B / 2, 1, 1, false);
        tail_[2] = add("tail2", B / 2, cfg_.in_channels, 1, 1, false);
    }

    void init_params() {
        Rng rng(derive_seed(cfg_.seed, {0x696e6974ULL}));
        for (auto& cv : convs_) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(cv.in_ch) * cv.ksize * cv.ksize);
            for (T& v : cv.w) v = static_cast<T>((2.0 * rng.uniform01() - 1.0) * bound);
            for (T& v : cv.b) v = static_cast<T>((2.0 * rng.uniform01() - 1.0) * bound);
            if (cv.masked) {
                const int R = cv.radius(), K = cv.ksize;
                for (int oc = 0; oc < cv.out_ch; ++oc)
                    for (int ic = 0; ic < cv.in_ch; ++ic)
                        cv.w[(static_cast<std::size_t>(oc) * cv.in_ch + ic) * K * K + R * K + R] = T(0);
            }
        }
    }

    BsnConfig cfg_;
    std::vector<Conv2d<T>> convs_;
    int head_ = 0;
    struct BranchIdx {
        int entry = 0, pre0 = 0, pre1 = 0, post = 0;
        std::vector<std::pair<int, int>> blocks;  // (dilated 3x3, mixing 1x1)
    };
    std::array<BranchIdx, 2> branch_;
    std::array<int, 3> tail_{};
};

template <typename T>
void BsnGrads<T>::init_like(const BsnNet<T>& net) {
    gw.clear();
    gb.clear();
    for (const auto& cv : net.convs()) {
        gw.emplace_back(cv.wsize(), T(0));
        gb.emplace_back(cv.b.size(), T(0));
    }
}

struct AuditReport {
    int trials = 0;
    double max_deviation = 0.0;
    bool pass = false;
    std::string detail;  // names the failing pixel and delta, when any
};

AuditReport blind_spot_audit(const BsnNet<float>& net, int trials, std::uint64_t seed);

}  // namespace sdap
