#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace sdap {

// sorted full paths of the supported raster files directly under dir
std::vector<std::string> list_image_files(const std::string& dir);

struct LoadedDir {
    std::vector<std::string> names;  // file stems, for reports
    std::vector<ImageGrid> images;
};

LoadedDir load_image_dir(const std::string& dir);

std::string file_stem(const std::string& path);

}  // namespace sdap
