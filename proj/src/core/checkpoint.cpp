#include "core/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "core/config.hpp"

namespace sdap {

namespace {

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const BsnNet<float>& net,
                     const std::map<std::string, std::string>& metadata, Adam<float>* optim) {
    json header = json::object();
    json meta = json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    meta["format"] = "sdap.checkpoint.v1";
    meta["config"] = bsn_config_to_json(net.config()).dump();
    if (optim) meta["optim.steps"] = std::to_string(optim->steps());
    header["__metadata__"] = meta;

    struct Blob {
        const float* data;
        std::size_t count;
    };
    std::vector<Blob> blobs;
    std::uint64_t offset = 0;
    auto add_tensor = [&](const std::string& name, const float* data, std::vector<std::int64_t> shape) {
        std::size_t count = 1;
        for (auto d : shape) count *= static_cast<std::size_t>(d);
        header[name] = json{{"dtype", "F32"},
                            {"shape", shape},
                            {"data_offsets", {offset, offset + count * sizeof(float)}}};
        blobs.push_back({data, count});
        offset += count * sizeof(float);
    };
    for (const auto& cv : net.convs()) {
        add_tensor(cv.name + ".weight", cv.w.data(), {cv.out_ch, cv.in_ch, cv.ksize, cv.ksize});
        add_tensor(cv.name + ".bias", cv.b.data(), {static_cast<std::int64_t>(cv.b.size())});
    }
    if (optim) {
        add_tensor("optim.m", optim->moment1().data(),
                   {static_cast<std::int64_t>(optim->moment1().size())});
        add_tensor("optim.v", optim->moment2().data(),
                   {static_cast<std::int64_t>(optim->moment2().size())});
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, "cannot write checkpoint: " + path);
    const std::string htext = header.dump();
    put_u64_le(out, htext.size());
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const Blob& b : blobs)
        out.write(reinterpret_cast<const char*>(b.data),
                  static_cast<std::streamsize>(b.count * sizeof(float)));
    if (!out) raise(ErrorCode::io, "short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::io, "cannot open checkpoint: " + path);
    const std::uint64_t hsize = get_u64_le(in);
    if (!in || hsize == 0 || hsize > (1ULL << 30))
        raise(ErrorCode::io, "corrupt checkpoint header: " + path);
    std::string htext(hsize, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hsize));
    if (!in) raise(ErrorCode::io, "truncated checkpoint: " + path);
    json header;
    try {
        header = json::parse(htext);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::io, "corrupt checkpoint header in " + path + ": " + e.what());
    }
    if (!header.contains("__metadata__") || !header["__metadata__"].contains("config"))
        raise(ErrorCode::io, "checkpoint missing embedded config: " + path);

    Checkpoint ckpt;
    for (const auto& [k, v] : header["__metadata__"].items())
        ckpt.metadata[k] = v.get<std::string>();

    const BsnConfig cfg = bsn_config_from_json(json::parse(ckpt.metadata.at("config")), "checkpoint config");
    ckpt.net = std::make_unique<BsnNet<float>>(cfg);

    const std::streampos data_start = in.tellg();
    auto read_tensor = [&](const std::string& name, float* dst, std::size_t expect) {
        if (!header.contains(name))
            raise(ErrorCode::io, "checkpoint missing tensor '" + name + "': " + path);
        const auto& entry = header.at(name);
        const auto offs = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
        if (offs.size() != 2 || offs[1] - offs[0] != expect * sizeof(float))
            raise(ErrorCode::io, "tensor '" + name + "' size mismatch in " + path);
        in.seekg(data_start + static_cast<std::streamoff>(offs[0]));
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(expect * sizeof(float)));
        if (!in) raise(ErrorCode::io, "truncated tensor '" + name + "' in " + path);
    };
    for (auto& cv : ckpt.net->convs()) {
        read_tensor(cv.name + ".weight", cv.w.data(), cv.wsize());
        read_tensor(cv.name + ".bias", cv.b.data(), cv.b.size());
    }
    if (header.contains("optim.m") && header.contains("optim.v")) {
        const std::size_t p = ckpt.net->param_count();
        ckpt.optim_m.resize(p);
        ckpt.optim_v.resize(p);
        read_tensor("optim.m", ckpt.optim_m.data(), p);
        read_tensor("optim.v", ckpt.optim_v.data(), p);
        ckpt.optim_steps = std::stol(ckpt.metadata.count("optim.steps") ? ckpt.metadata["optim.steps"] : "0");
        ckpt.has_optimizer = true;
    }
    return ckpt;
}

}  // namespace sdap
