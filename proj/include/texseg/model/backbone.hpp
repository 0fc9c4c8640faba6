#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "texseg/model/layers.hpp"

namespace texseg::model {

// Adapter contract for segmentation backbones: channel count m, stride s, and
// a forward map from an RGB image to an (m, ceil(H/s), ceil(W/s)) feature map.
// Real encoders can be plugged in behind this without touching the head.
class Backbone {
public:
    virtual ~Backbone() = default;
    virtual int channels() const = 0;
    virtual int stride() const = 0;
    virtual ad::Var forward(const ad::Var& image) const = 0;
    virtual void collect_params(std::vector<ParamEntry>& out, const std::string& prefix) const = 0;
};

// Four 3x3 conv blocks with two stride-2 downsamples: 3 -> w -> w -> 2w -> 2w,
// overall stride 4. Small enough to train in minutes on a CPU.
class ToyBackbone final : public Backbone {
public:
    ToyBackbone(Rng& rng, int base_width = 32)
        : width_(base_width),
          c1_(3, base_width, 3, 1, 1, rng),
          c2_(base_width, base_width, 3, 2, 1, rng),
          c3_(base_width, 2 * base_width, 3, 2, 1, rng),
          c4_(2 * base_width, 2 * base_width, 3, 1, 1, rng) {}

    int channels() const override { return 2 * width_; }
    int stride() const override { return 4; }

    ad::Var forward(const ad::Var& image) const override {
        if (image.get() == nullptr || image->value.ndim() != 3 || image->value.dim(0) != 3)
            throw std::invalid_argument("backbone: expected (3,H,W) image tensor");
        if (image->value.dim(1) < stride() || image->value.dim(2) < stride())
            throw std::invalid_argument("backbone: image smaller than stride");
        if (!image->value.all_finite())
            throw std::invalid_argument("backbone: non-finite input");
        auto h = ad::relu(c1_(image));
        h = ad::relu(c2_(h));
        h = ad::relu(c3_(h));
        return ad::relu(c4_(h));
    }

    void collect_params(std::vector<ParamEntry>& out, const std::string& prefix) const override {
        c1_.collect(out, prefix + ".c1");
        c2_.collect(out, prefix + ".c2");
        c3_.collect(out, prefix + ".c3");
        c4_.collect(out, prefix + ".c4");
    }

private:
    int width_;
    Conv2d c1_, c2_, c3_, c4_;
};

} // namespace texseg::model
