#pragma once

#include <map>
#include <memory>
#include <string>

#include "core/net.hpp"
#include "core/optim.hpp"

namespace sdap {

// Single-file weights container in the safetensors layout: an 8-byte
// little-endian header size, a JSON header mapping tensor names to
// {dtype, shape, data_offsets}, then the raw tensor bytes. The model config
// and training metadata ride in "__metadata__", so a checkpoint is
// self-describing. Optimizer moments are stored alongside the weights so a
// resumed run continues exactly.
struct Checkpoint {
    std::unique_ptr<BsnNet<float>> net;
    std::map<std::string, std::string> metadata;
    bool has_optimizer = false;
    std::vector<float> optim_m, optim_v;
    long optim_steps = 0;
};

void save_checkpoint(const std::string& path, const BsnNet<float>& net,
                     const std::map<std::string, std::string>& metadata,
                     Adam<float>* optim = nullptr);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace sdap
