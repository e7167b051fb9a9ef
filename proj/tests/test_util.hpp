#pragma once

#include <filesystem>
#include <string>

#include "core/image.hpp"
#include "core/rng.hpp"

namespace testutil {

// fresh scratch directory under the system temp root, removed on destruction
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        dir_ = std::filesystem::temp_directory_path() /
               ("sdap_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::string path() const { return dir_.string(); }
    std::string file(const std::string& name) const { return (dir_ / name).string(); }

private:
    std::filesystem::path dir_;
};

inline sdap::ImageGrid random_image(int h, int w, int c, std::uint64_t seed) {
    sdap::Rng rng(seed);
    sdap::ImageGrid img(h, w, c);
    for (float& v : img.values) v = static_cast<float>(rng.uniform01());
    return img;
}

// 4x4 grayscale raster 0..15 scaled into [0,1] by /15
inline sdap::ImageGrid raster4x4() {
    sdap::ImageGrid img(4, 4, 1);
    for (int i = 0; i < 16; ++i) img.values[i] = static_cast<float>(i) / 15.0f;
    return img;
}

}  // namespace testutil
