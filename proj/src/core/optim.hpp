#pragma once

#include <cmath>
#include <vector>

#include "core/net.hpp"

namespace sdap {

// Adam with the usual defaults (moments 0.9/0.999, epsilon 1e-8). State is
// flattened over the network's layer order: weights then bias per layer.
template <typename T>
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void attach(const BsnNet<T>& net) {
        m_.assign(net.param_count(), T(0));
        v_.assign(net.param_count(), T(0));
        steps_ = 0;
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    long steps() const { return steps_; }

    std::vector<T>& moment1() { return m_; }
    std::vector<T>& moment2() { return v_; }
    void restore(std::vector<T> m, std::vector<T> v, long steps) {
        m_ = std::move(m);
        v_ = std::move(v);
        steps_ = steps;
    }

    void step(BsnNet<T>& net, const BsnGrads<T>& grads) {
        if (m_.empty()) attach(net);
        ++steps_;
        std::size_t off = 0;
        auto& convs = net.convs();
        for (std::size_t li = 0; li < convs.size(); ++li) {
            update(convs[li].w, grads.gw[li], off);
            update(convs[li].b, grads.gb[li], off);
        }
    }

private:
    void update(std::vector<T>& param, const std::vector<T>& grad, std::size_t& off) {
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = static_cast<double>(grad[i]);
            const double m = beta1_ * static_cast<double>(m_[off + i]) + (1.0 - beta1_) * g;
            const double v = beta2_ * static_cast<double>(v_[off + i]) + (1.0 - beta2_) * g * g;
            m_[off + i] = static_cast<T>(m);
            v_[off + i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            param[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
        off += param.size();
    }

    double lr_, beta1_, beta2_, eps_;
    long steps_ = 0;
    std::vector<T> m_, v_;
};

}  // namespace sdap
