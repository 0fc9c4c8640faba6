#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texseg/autodiff/ops.hpp"
#include "texseg/core/rng.hpp"

namespace texseg::model {

struct ParamEntry {
    std::string name;
    ad::Var var;
};

inline int64_t param_count(const std::vector<ParamEntry>& params) {
    int64_t n = 0;
    for (const auto& p : params) n += p.var->value.numel();
    return n;
}

// FNV-1a over the raw parameter bytes, in registration order. Used to verify
// the frozen-classifier contract.
inline uint64_t param_hash(const std::vector<ParamEntry>& params) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const unsigned char* p, size_t len) {
        for (size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& p : params) {
        mix(reinterpret_cast<const unsigned char*>(p.name.data()), p.name.size());
        mix(reinterpret_cast<const unsigned char*>(p.var->value.data()),
            static_cast<size_t>(p.var->value.numel()) * sizeof(double));
    }
    return h;
}

// Fan-in scaled normal init (He); biases start at zero.
inline Tensor he_init(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, stddev);
    return t;
}

struct Conv2d {
    ad::Var w, b;
    int stride = 1, pad = 0;

    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int k, int stride_, int pad_, Rng& rng)
        : stride(stride_), pad(pad_) {
        w = ad::parameter(he_init({out_ch, in_ch, k, k},
                                  static_cast<int64_t>(in_ch) * k * k, rng));
        b = ad::parameter(Tensor({out_ch}));
    }

    ad::Var operator()(const ad::Var& x) const { return ad::conv2d(x, w, b, stride, pad); }

    void collect(std::vector<ParamEntry>& out, const std::string& prefix) const {
        out.push_back({prefix + ".w", w});
        out.push_back({prefix + ".b", b});
    }
};

struct Linear {
    ad::Var w, b;

    Linear() = default;
    Linear(int in_dim, int out_dim, Rng& rng) {
        w = ad::parameter(he_init({out_dim, in_dim}, in_dim, rng));
        b = ad::parameter(Tensor({out_dim}));
    }

    ad::Var operator()(const ad::Var& x) const { return ad::affine(x, w, b); }

    void collect(std::vector<ParamEntry>& out, const std::string& prefix) const {
        out.push_back({prefix + ".w", w});
        out.push_back({prefix + ".b", b});
    }
};

} // namespace texseg::model
