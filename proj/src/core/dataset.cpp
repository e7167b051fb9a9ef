#include "core/dataset.hpp"

#include <algorithm>
#include <filesystem>

namespace sdap {

namespace fs = std::filesystem;

std::vector<std::string> list_image_files(const std::string& dir) {
    if (!fs::is_directory(dir)) raise(ErrorCode::io, "not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

LoadedDir load_image_dir(const std::string& dir) {
    LoadedDir out;
    for (const std::string& path : list_image_files(dir)) {
        out.names.push_back(file_stem(path));
        out.images.push_back(load_image(path));
    }
    if (out.images.empty()) raise(ErrorCode::io, "no images found in " + dir);
    return out;
}

std::string file_stem(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace sdap
