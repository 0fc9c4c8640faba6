#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "texseg/annotations/geometry.hpp"
#include "texseg/annotations/io.hpp"
#include "texseg/core/image.hpp"
#include "texseg/core/rng.hpp"

namespace texseg::harness {

// A sample with its image and derived grids loaded, ready for training/eval.
struct LoadedSample {
    anno::SampleRecord record;
    ImageU8 image;
    MaskGrid ignore; // union of rasterized quads of ignore=true words
    int source_root = 0;

    std::vector<anno::CharRecord> active_chars() const {
        std::vector<anno::CharRecord> chars;
        for (const auto& w : record.words) {
            if (w.ignore) continue;
            for (const auto& c : w.chars) chars.push_back(c);
        }
        return chars;
    }
};

struct LoadedDataset {
    std::vector<LoadedSample> samples;
    std::vector<std::string> roots;
};

inline LoadedSample load_full_sample(const std::filesystem::path& root,
                                     const anno::SampleRecord& rec, int source_root) {
    LoadedSample s;
    (void)root;
    s.record = rec;
    s.image = anno::load_image(rec);
    s.ignore = MaskGrid(rec.height, rec.width);
    for (const auto& w : rec.words) {
        if (!w.ignore) continue;
        const auto raster = anno::rasterize_quad(w.quad, rec.height, rec.width);
        for (int r = 0; r < rec.height; ++r)
            for (int c = 0; c < rec.width; ++c)
                if (raster.mask.at(r, c)) s.ignore.at(r, c) = 1;
    }
    s.source_root = source_root;
    return s;
}

// Loads the given split from every root and concatenates (union training).
inline LoadedDataset load_union_dataset(const std::vector<std::string>& roots,
                                        anno::Split split) {
    if (roots.empty()) throw std::invalid_argument("no dataset roots configured");
    LoadedDataset ds;
    ds.roots = roots;
    for (size_t ri = 0; ri < roots.size(); ++ri) {
        for (const auto& rec : anno::load_dataset(roots[ri], split))
            ds.samples.push_back(load_full_sample(roots[ri], rec, static_cast<int>(ri)));
    }
    return ds;
}

// Deterministic shuffled-epoch sampler over the concatenated samples; every
// sample is visited once per epoch-equivalent.
class EpochSampler {
public:
    EpochSampler(size_t n, uint64_t seed) : n_(n), rng_(seed) { refill(); }

    size_t next() {
        if (cursor_ >= order_.size()) refill();
        return order_[cursor_++];
    }

private:
    void refill() {
        order_.resize(n_);
        for (size_t i = 0; i < n_; ++i) order_[i] = i;
        rng_.shuffle(order_);
        cursor_ = 0;
    }

    size_t n_;
    Rng rng_;
    std::vector<size_t> order_;
    size_t cursor_ = 0;
};

// Random crop window + horizontal flip, the default augmentation policy.
struct CropView {
    ImageU8 image;
    MaskGrid word_mask;
    MaskGrid ignore;
    std::vector<anno::CharRecord> chars; // quads in crop coordinates
};

inline CropView make_crop_view(const LoadedSample& s, int crop, bool flip, Rng& rng) {
    const int H = s.record.height, W = s.record.width;
    const int ch = std::min(crop, H), cw = std::min(crop, W);
    const int r0 = H > ch ? static_cast<int>(rng.uniform_int(0, H - ch)) : 0;
    const int c0 = W > cw ? static_cast<int>(rng.uniform_int(0, W - cw)) : 0;

    CropView v;
    v.image = texseg::crop(s.image, r0, c0, ch, cw);
    v.word_mask = texseg::crop(s.record.masks.word_mask, r0, c0, ch, cw);
    v.ignore = texseg::crop(s.ignore, r0, c0, ch, cw);
    for (const auto& c : s.active_chars()) {
        anno::CharRecord shifted = c;
        for (auto& p : shifted.quad.vertices) {
            p.x -= c0;
            p.y -= r0;
        }
        double x0, y0, x1, y1;
        anno::bounding_box(shifted.quad, x0, y0, x1, y1);
        if (x1 <= 0 || y1 <= 0 || x0 >= cw || y0 >= ch) continue; // outside the crop
        v.chars.push_back(std::move(shifted));
    }
    if (flip) {
        v.image = texseg::hflip(v.image);
        v.word_mask = v.word_mask.hflip();
        v.ignore = v.ignore.hflip();
        for (auto& c : v.chars)
            for (auto& p : c.quad.vertices) p.x = static_cast<double>(cw) - p.x;
    }
    return v;
}

} // namespace texseg::harness
