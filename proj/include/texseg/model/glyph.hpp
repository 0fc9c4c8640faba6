#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "texseg/annotations/geometry.hpp"
#include "texseg/annotations/types.hpp"
#include "texseg/core/checkpoint.hpp"
#include "texseg/model/layers.hpp"

namespace texseg::model {

inline constexpr int kCharPatchSize = 32;
inline constexpr double kCharCropPadding = 0.10; // per side, fraction of bbox extent

// 37-class character classifier: three stride-2 conv blocks, global average
// pooling, and a linear head (~100k parameters). Pre-trained on ground-truth
// char crops, then frozen while it serves as the glyph discriminator.
class GlyphClassifier {
public:
    explicit GlyphClassifier(uint64_t seed = 0) {
        Rng rng(derive_seed(seed, 0x91f));
        c1_ = Conv2d(1, 32, 3, 2, 1, rng);
        c2_ = Conv2d(32, 64, 3, 2, 1, rng);
        c3_ = Conv2d(64, 128, 3, 2, 1, rng);
        fc_ = Linear(128, anno::kNumCharClasses, rng);
    }

    ad::Var forward(const ad::Var& patch) const {
        if (patch->value.ndim() != 3 || patch->value.dim(0) != 1 ||
            patch->value.dim(1) != kCharPatchSize || patch->value.dim(2) != kCharPatchSize)
            throw std::invalid_argument("GlyphClassifier: expected (1,32,32) patch");
        auto h = ad::relu(c1_(patch));
        h = ad::relu(c2_(h));
        h = ad::relu(c3_(h));
        return fc_(ad::global_avg_pool(h)); // 37 logits
    }

    void freeze() {
        frozen_ = true;
        for (auto& p : parameters()) p.var->requires_grad = false;
    }
    bool frozen() const { return frozen_; }

    std::vector<ParamEntry> parameters() const {
        std::vector<ParamEntry> out;
        c1_.collect(out, "glyph.c1");
        c2_.collect(out, "glyph.c2");
        c3_.collect(out, "glyph.c3");
        fc_.collect(out, "glyph.fc");
        return out;
    }

    int64_t parameter_count() const { return param_count(parameters()); }
    uint64_t parameter_hash() const { return param_hash(parameters()); }

    void save(const std::string& path, int64_t iteration, uint64_t seed,
              const nlohmann::json& extra = nlohmann::json::object()) const {
        std::vector<NamedTensor> named;
        for (const auto& p : parameters()) named.push_back({p.name, &p.var->value});
        save_param_blob(path, named);
        nlohmann::json cfg = extra;
        cfg["model"] = {{"type", "glyph_classifier"}, {"classes", anno::kNumCharClasses}};
        save_sidecar(path, cfg, iteration, seed);
    }

    void load(const std::string& path) {
        std::vector<NamedTensor> named;
        for (const auto& p : parameters()) named.push_back({p.name, &p.var->value});
        load_param_blob(path, named);
    }

private:
    Conv2d c1_, c2_, c3_;
    Linear fc_;
    bool frozen_ = false;
};

struct CropRect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool valid = false;
};

// Axis-aligned char-quad bbox expanded by 10% per side, clamped to the map.
inline CropRect char_crop_rect(const anno::QuadPolygon& quad, int height, int width) {
    CropRect r;
    double x0, y0, x1, y1;
    anno::bounding_box(quad, x0, y0, x1, y1);
    const double px = kCharCropPadding * (x1 - x0);
    const double py = kCharCropPadding * (y1 - y0);
    r.x0 = std::clamp(x0 - px, 0.0, static_cast<double>(width));
    r.x1 = std::clamp(x1 + px, 0.0, static_cast<double>(width));
    r.y0 = std::clamp(y0 - py, 0.0, static_cast<double>(height));
    r.y1 = std::clamp(y1 + py, 0.0, static_cast<double>(height));
    r.valid = r.x1 > r.x0 && r.y1 > r.y0;
    return r;
}

struct CharCrop {
    ad::Var patch; // (1,32,32), values in [0,1] for probability inputs
    int class_id = anno::kMiscClass;
    size_t char_index = 0;
};

// Crops the (H,W) foreground map at each char quad and resizes to 32x32.
// Degenerate boxes are skipped; n_skipped reports how many.
inline std::vector<CharCrop> char_crop(const ad::Var& fg_map,
                                       const std::vector<anno::CharRecord>& chars,
                                       int* n_skipped = nullptr) {
    if (fg_map->value.ndim() != 2) throw std::invalid_argument("char_crop: expected (H,W) map");
    const int H = static_cast<int>(fg_map->value.dim(0));
    const int W = static_cast<int>(fg_map->value.dim(1));
    std::vector<CharCrop> out;
    int skipped = 0;
    for (size_t i = 0; i < chars.size(); ++i) {
        const CropRect r = char_crop_rect(chars[i].quad, H, W);
        if (!r.valid) {
            ++skipped;
            continue;
        }
        CharCrop crop;
        crop.patch = ad::reshape(
            ad::crop_resize(fg_map, r.x0, r.y0, r.x1, r.y1, kCharPatchSize, kCharPatchSize),
            {1, kCharPatchSize, kCharPatchSize});
        crop.class_id = chars[i].class_id;
        crop.char_index = i;
        out.push_back(std::move(crop));
    }
    if (n_skipped) *n_skipped = skipped;
    return out;
}

struct DiscriminatorResult {
    ad::Var loss;             // scalar
    bool disabled = false;    // no char annotations available
    int n_crops = 0;
};

// Mean classifier cross-entropy over char crops of the foreground probability
// map. The classifier must be frozen; gradients flow into the map only.
inline DiscriminatorResult discriminator_loss(const ad::Var& fg_prob,
                                              const std::vector<anno::CharRecord>& chars,
                                              const GlyphClassifier& clf) {
    if (!clf.frozen())
        throw std::logic_error("discriminator_loss: classifier must be frozen");
    DiscriminatorResult res;
    if (chars.empty()) {
        res.disabled = true;
        res.loss = ad::constant(Tensor::scalar(0.0));
        return res;
    }
    std::vector<CharCrop> crops = char_crop(fg_prob, chars);
    if (crops.empty()) {
        res.disabled = true;
        res.loss = ad::constant(Tensor::scalar(0.0));
        return res;
    }
    ad::Var sum;
    for (const CharCrop& crop : crops) {
        ad::Var logits = ad::reshape(clf.forward(crop.patch), {anno::kNumCharClasses, 1});
        ad::Var ce = ad::cross_entropy(logits, {crop.class_id}, {}, /*input_is_probs=*/false);
        sum = sum ? ad::add(sum, ce) : ce;
    }
    res.loss = ad::scale(sum, 1.0 / static_cast<double>(crops.size()));
    res.n_crops = static_cast<int>(crops.size());
    return res;
}

} // namespace texseg::model
