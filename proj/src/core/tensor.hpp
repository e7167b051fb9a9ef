#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/image.hpp"

namespace sdap {

// Dense NCHW tensor. Training runs in float; gradient verification
// instantiates the same code in double.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

    std::size_t size() const { return v.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
    T* plane(int ni, int ci) { return v.data() + (static_cast<std::size_t>(ni) * c + ci) * plane_size(); }
    const T* plane(int ni, int ci) const {
        return v.data() + (static_cast<std::size_t>(ni) * c + ci) * plane_size();
    }
    T& at(int ni, int ci, int y, int x) { return plane(ni, ci)[static_cast<std::size_t>(y) * w + x]; }
    T at(int ni, int ci, int y, int x) const { return plane(ni, ci)[static_cast<std::size_t>(y) * w + x]; }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
    void fill(T value) { std::fill(v.begin(), v.end(), value); }
};

template <typename T>
Tensor<T> image_to_tensor(const ImageGrid& img) {
    Tensor<T> t(1, img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c) {
        T* p = t.plane(0, c);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                p[static_cast<std::size_t>(y) * img.width + x] = static_cast<T>(img.at(y, x, c));
    }
    return t;
}

template <typename T>
ImageGrid tensor_to_image(const Tensor<T>& t, int item) {
    ImageGrid img(t.h, t.w, t.c);
    for (int c = 0; c < t.c; ++c) {
        const T* p = t.plane(item, c);
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x)
                img.at(y, x, c) = static_cast<float>(p[static_cast<std::size_t>(y) * t.w + x]);
    }
    return img;
}

}  // namespace sdap
