#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "texseg/core/tensor.hpp"

// Checkpoints are a binary little-endian parameter blob plus a JSON sidecar
// (<path>.json) carrying {config, iteration, seed}.

namespace texseg {

struct NamedTensor {
    std::string name;
    Tensor* tensor = nullptr;
};

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'T', 'S', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace ckpt_detail

inline void save_param_blob(const std::string& path, const std::vector<NamedTensor>& params) {
    using namespace ckpt_detail;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    f.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(f, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        write_pod<uint16_t>(f, static_cast<uint16_t>(p.name.size()));
        f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_pod<uint8_t>(f, static_cast<uint8_t>(p.tensor->ndim()));
        for (int64_t d : p.tensor->shape()) write_pod<int64_t>(f, d);
        f.write(reinterpret_cast<const char*>(p.tensor->data()),
                static_cast<std::streamsize>(p.tensor->numel() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

// Loads into existing tensors; names, order, and shapes must match.
inline void load_param_blob(const std::string& path, const std::vector<NamedTensor>& params) {
    using namespace ckpt_detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t count = read_pod<uint32_t>(f);
    if (count != params.size())
        throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
    for (const auto& p : params) {
        const uint16_t name_len = read_pod<uint16_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        if (name != p.name)
            throw std::runtime_error("checkpoint: expected parameter " + p.name + ", found " +
                                     name);
        const uint8_t ndim = read_pod<uint8_t>(f);
        std::vector<int64_t> shape(ndim);
        for (auto& d : shape) d = read_pod<int64_t>(f);
        if (shape != p.tensor->shape())
            throw std::runtime_error("checkpoint: shape mismatch for " + name);
        f.read(reinterpret_cast<char*>(p.tensor->data()),
               static_cast<std::streamsize>(p.tensor->numel() * sizeof(double)));
        if (!f) throw std::runtime_error("checkpoint: truncated tensor data for " + name);
    }
}

inline void save_sidecar(const std::string& blob_path, const nlohmann::json& config,
                         int64_t iteration, uint64_t seed) {
    nlohmann::json j;
    j["config"] = config;
    j["iteration"] = iteration;
    j["seed"] = seed;
    std::ofstream f(blob_path + ".json");
    if (!f) throw std::runtime_error("checkpoint: cannot write sidecar for " + blob_path);
    f << j.dump(2) << "\n";
}

inline nlohmann::json load_sidecar(const std::string& blob_path) {
    std::ifstream f(blob_path + ".json");
    if (!f) throw std::runtime_error("checkpoint: missing sidecar " + blob_path + ".json");
    nlohmann::json j;
    f >> j;
    return j;
}

} // namespace texseg
