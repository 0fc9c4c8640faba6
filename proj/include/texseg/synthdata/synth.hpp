#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "texseg/annotations/io.hpp"
#include "texseg/annotations/types.hpp"
#include "texseg/core/image.hpp"
#include "texseg/core/rng.hpp"
#include "texseg/synthdata/glyph_atlas.hpp"

namespace texseg::synth {

struct SynthConfig {
    int height = 128;
    int width = 128;
    int words_min = 1, words_max = 3;
    int chars_min = 1, chars_max = 3;
    int glyph_height_min = 35, glyph_height_max = 49; // px; integer scale = height / 7
    double contrast_min = 0.45, contrast_max = 1.0;   // |luminance difference| in [0,1]
    double effect_prob = 0.0;                         // hard shadow per word
    int shadow_dx = 2, shadow_dy = 2;
    double rotation_max_deg = 0.0;
    int noise_amplitude = 3;
    int clutter_rects = 0;
    uint64_t seed = 0;

    void validate() const {
        if (height < 64 || width < 64)
            throw std::invalid_argument("SynthConfig: H, W must be >= 64");
        if (words_min < 0 || words_min > words_max)
            throw std::invalid_argument("SynthConfig: bad words range");
        if (chars_min < 1 || chars_min > chars_max)
            throw std::invalid_argument("SynthConfig: bad chars range");
        if (glyph_height_min < kGlyphRows || glyph_height_min > glyph_height_max)
            throw std::invalid_argument("SynthConfig: bad glyph height range");
        if (contrast_min < 0.0 || contrast_min > contrast_max || contrast_max > 1.0)
            throw std::invalid_argument("SynthConfig: bad contrast range");
        if (words_max * chars_max > anno::kMaxCharInstances)
            throw std::invalid_argument("SynthConfig: too many char instances for the mask format");
    }
};

inline SynthConfig easy_preset() { return SynthConfig{}; }

inline SynthConfig hard_preset() {
    SynthConfig cfg;
    cfg.glyph_height_min = 21;
    cfg.glyph_height_max = 35;
    cfg.contrast_min = 0.15;
    cfg.contrast_max = 0.6;
    cfg.effect_prob = 0.6;
    cfg.rotation_max_deg = 15.0;
    cfg.noise_amplitude = 8;
    cfg.clutter_rects = 4;
    return cfg;
}

struct RenderedSample {
    anno::SampleRecord record;
    ImageU8 image;
};

namespace detail {

struct Rgb {
    uint8_t r = 0, g = 0, b = 0;
};

inline double luminance(const Rgb& c) {
    return (0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0;
}

inline Rgb random_color(Rng& rng) {
    return {static_cast<uint8_t>(rng.uniform_int(0, 255)),
            static_cast<uint8_t>(rng.uniform_int(0, 255)),
            static_cast<uint8_t>(rng.uniform_int(0, 255))};
}

// Foreground color whose luminance contrast against bg falls in range; falls
// back to black/white when rejection sampling runs out.
inline Rgb contrasting_color(Rng& rng, const Rgb& bg, double cmin, double cmax) {
    for (int i = 0; i < 64; ++i) {
        Rgb c = random_color(rng);
        const double d = std::abs(luminance(c) - luminance(bg));
        if (d >= cmin && d <= cmax) return c;
    }
    return luminance(bg) < 0.5 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
}

struct PlacedWord {
    std::vector<int> glyph_classes;
    int scale = 1;         // glyph cell is 5k x 7k
    double theta = 0.0;    // radians, clockwise in the y-down frame
    double cx = 0, cy = 0; // cell center in image coordinates
    double cell_w = 0, cell_h = 0;
    bool has_effect = false;
    Rgb color;

    void update_cell_size() {
        const double k = scale;
        const double n = static_cast<double>(glyph_classes.size());
        cell_w = k * (6.0 * n - 1.0);
        cell_h = k * kGlyphRows;
    }

    // image coords -> cell coords
    void to_cell(double px, double py, double& qx, double& qy) const {
        const double dx = px - cx, dy = py - cy;
        const double ct = std::cos(theta), st = std::sin(theta);
        qx = ct * dx + st * dy + cell_w / 2.0;
        qy = -st * dx + ct * dy + cell_h / 2.0;
    }

    anno::Point to_world(double qx, double qy) const {
        const double dx = qx - cell_w / 2.0, dy = qy - cell_h / 2.0;
        const double ct = std::cos(theta), st = std::sin(theta);
        return {cx + ct * dx - st * dy, cy + st * dx + ct * dy};
    }

    // -1 when the point carries no ink, else the char index inside the word.
    int ink_owner(double qx, double qy) const {
        if (qy < 0.0 || qy >= cell_h || qx < 0.0 || qx >= cell_w) return -1;
        const double k = static_cast<double>(scale);
        const int ci = static_cast<int>(qx / (6.0 * k));
        if (ci < 0 || ci >= static_cast<int>(glyph_classes.size())) return -1;
        const double lx = qx - ci * 6.0 * k;
        if (lx >= 5.0 * k) return -1; // inter-char gap
        const int col = std::min(static_cast<int>(lx / k), kGlyphCols - 1);
        const int row = std::min(static_cast<int>(qy / k), kGlyphRows - 1);
        return glyph_atlas().glyph(glyph_classes[static_cast<size_t>(ci)]).ink(row, col) ? ci : -1;
    }

    void half_extents(double& hx, double& hy) const {
        const double ac = std::abs(std::cos(theta)), as = std::abs(std::sin(theta));
        hx = 0.5 * (ac * cell_w + as * cell_h);
        hy = 0.5 * (as * cell_w + ac * cell_h);
    }

    anno::QuadPolygon cell_quad(double x0, double x1) const {
        anno::QuadPolygon q;
        q.vertices[0] = to_world(x0, 0.0);
        q.vertices[1] = to_world(x1, 0.0);
        q.vertices[2] = to_world(x1, cell_h);
        q.vertices[3] = to_world(x0, cell_h);
        return q;
    }
};

// Attempts to lay out `target_words` words without overlap; nullopt on failure.
inline std::optional<std::vector<PlacedWord>> try_layout(const SynthConfig& cfg, Rng& rng,
                                                         int target_words) {
    const double margin = 2.0;
    const int kmin = std::max(1, cfg.glyph_height_min / kGlyphRows);
    const int kmax = std::max(kmin, cfg.glyph_height_max / kGlyphRows);
    const double pad_x = std::abs(cfg.shadow_dx) + 1.0;
    const double pad_y = std::abs(cfg.shadow_dy) + 1.0;

    std::vector<PlacedWord> placed;
    for (int wi = 0; wi < target_words; ++wi) {
        PlacedWord w;
        w.scale = static_cast<int>(rng.uniform_int(kmin, kmax));
        int chars = static_cast<int>(rng.uniform_int(cfg.chars_min, cfg.chars_max));
        w.theta = cfg.rotation_max_deg > 0.0
                      ? rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg) * M_PI / 180.0
                      : 0.0;
        w.has_effect = cfg.effect_prob > 0.0 && rng.bernoulli(cfg.effect_prob);
        for (int i = 0; i < chars; ++i)
            w.glyph_classes.push_back(static_cast<int>(rng.uniform_int(0, kAtlasSize - 1)));

        // shrink until the rotated cell (plus shadow) fits on the canvas
        for (;;) {
            w.update_cell_size();
            double hx, hy;
            w.half_extents(hx, hy);
            const bool fits = (2.0 * (hx + pad_x + margin) <= cfg.width) &&
                              (2.0 * (hy + pad_y + margin) <= cfg.height);
            if (fits) break;
            if (w.glyph_classes.size() > 1)
                w.glyph_classes.pop_back();
            else if (w.scale > 1)
                --w.scale;
            else
                return std::nullopt;
        }

        double hx, hy;
        w.half_extents(hx, hy);
        const double lo_x = hx + pad_x + margin, hi_x = cfg.width - hx - pad_x - margin;
        const double lo_y = hy + pad_y + margin, hi_y = cfg.height - hy - pad_y - margin;

        bool ok = false;
        for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
            w.cx = rng.uniform(lo_x, hi_x);
            w.cy = rng.uniform(lo_y, hi_y);
            ok = true;
            for (const PlacedWord& other : placed) {
                double ohx, ohy;
                other.half_extents(ohx, ohy);
                if (std::abs(w.cx - other.cx) < hx + ohx + 2.0 * pad_x &&
                    std::abs(w.cy - other.cy) < hy + ohy + 2.0 * pad_y) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) return std::nullopt;
        placed.push_back(std::move(w));
    }
    return placed;
}

} // namespace detail

// Deterministic render of one sample. Annotations and masks come from the
// same placement math as the pixels, never re-estimated from the render.
inline RenderedSample render_sample(const SynthConfig& cfg, uint64_t sample_seed,
                                    const std::string& sample_id = "sample") {
    cfg.validate();
    using detail::PlacedWord;
    using detail::Rgb;

    const int H = cfg.height, W = cfg.width;
    const int sdx = cfg.shadow_dx, sdy = cfg.shadow_dy;

    // Placement failures regenerate the sample with fewer words; each attempt
    // draws from its own deterministic stream.
    std::vector<PlacedWord> words;
    Rng rng(0);
    for (uint64_t attempt = 0;; ++attempt) {
        rng = Rng(derive_seed(sample_seed, attempt));
        int target = static_cast<int>(rng.uniform_int(cfg.words_min, cfg.words_max));
        target = std::max(cfg.words_min > 0 ? 1 : 0, target - static_cast<int>(attempt));
        auto layout = detail::try_layout(cfg, rng, target);
        if (layout) {
            words = std::move(*layout);
            break;
        }
        if (attempt > 64)
            throw std::runtime_error("render_sample: cannot place any word; check config");
    }

    // background with low-amplitude noise, then optional clutter
    const Rgb bg = detail::random_color(rng);
    ImageU8 image(H, W, 3);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const int n = cfg.noise_amplitude > 0
                              ? static_cast<int>(rng.uniform_int(-cfg.noise_amplitude,
                                                                 cfg.noise_amplitude))
                              : 0;
            image.at(r, c, 0) = static_cast<uint8_t>(std::clamp(bg.r + n, 0, 255));
            image.at(r, c, 1) = static_cast<uint8_t>(std::clamp(bg.g + n, 0, 255));
            image.at(r, c, 2) = static_cast<uint8_t>(std::clamp(bg.b + n, 0, 255));
        }
    }
    for (int i = 0; i < cfg.clutter_rects; ++i) {
        const int rh = static_cast<int>(rng.uniform_int(4, H / 3));
        const int rw = static_cast<int>(rng.uniform_int(4, W / 3));
        const int r0 = static_cast<int>(rng.uniform_int(0, H - rh));
        const int c0 = static_cast<int>(rng.uniform_int(0, W - rw));
        const Rgb col = detail::random_color(rng);
        for (int r = r0; r < r0 + rh; ++r)
            for (int c = c0; c < c0 + rw; ++c) {
                image.at(r, c, 0) = col.r;
                image.at(r, c, 1) = col.g;
                image.at(r, c, 2) = col.b;
            }
    }

    anno::SampleRecord rec;
    rec.sample_id = sample_id;
    rec.height = H;
    rec.width = W;
    rec.masks.word_mask = MaskGrid(H, W);
    rec.masks.word_effect_mask = MaskGrid(H, W);
    rec.masks.char_instance_mask = MaskGrid(H, W);

    int instance = 0;
    for (PlacedWord& w : words) {
        w.color = detail::contrasting_color(rng, bg, cfg.contrast_min, cfg.contrast_max);
        const Rgb shadow{static_cast<uint8_t>(w.color.r * 0.45),
                         static_cast<uint8_t>(w.color.g * 0.45),
                         static_cast<uint8_t>(w.color.b * 0.45)};

        double hx, hy;
        w.half_extents(hx, hy);
        const int r0 = std::max(0, static_cast<int>(std::floor(w.cy - hy - std::abs(sdy) - 1)));
        const int r1 = std::min(H - 1, static_cast<int>(std::ceil(w.cy + hy + std::abs(sdy) + 1)));
        const int c0 = std::max(0, static_cast<int>(std::floor(w.cx - hx - std::abs(sdx) - 1)));
        const int c1 = std::min(W - 1, static_cast<int>(std::ceil(w.cx + hx + std::abs(sdx) + 1)));

        // shadow pass: ink translated by (sdx, sdy), drawn under the glyphs
        if (w.has_effect) {
            for (int r = r0; r <= r1; ++r) {
                for (int c = c0; c <= c1; ++c) {
                    double qx, qy;
                    w.to_cell(c + 0.5 - sdx, r + 0.5 - sdy, qx, qy);
                    if (w.ink_owner(qx, qy) >= 0) {
                        image.at(r, c, 0) = shadow.r;
                        image.at(r, c, 1) = shadow.g;
                        image.at(r, c, 2) = shadow.b;
                        rec.masks.word_effect_mask.at(r, c) = 1;
                    }
                }
            }
        }

        // ink pass
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                double qx, qy;
                w.to_cell(c + 0.5, r + 0.5, qx, qy);
                const int owner = w.ink_owner(qx, qy);
                if (owner < 0) continue;
                image.at(r, c, 0) = w.color.r;
                image.at(r, c, 1) = w.color.g;
                image.at(r, c, 2) = w.color.b;
                rec.masks.word_mask.at(r, c) = 1;
                rec.masks.word_effect_mask.at(r, c) = 1;
                rec.masks.char_instance_mask.at(r, c) =
                    static_cast<uint8_t>(instance + owner + 1);
            }
        }

        anno::WordRecord word;
        word.quad = w.cell_quad(0.0, w.cell_w);
        word.ignore = false;
        const double k = w.scale;
        for (size_t ci = 0; ci < w.glyph_classes.size(); ++ci) {
            anno::CharRecord cr;
            const char ch = GlyphAtlas::class_to_char(w.glyph_classes[ci]);
            cr.text = std::string(1, ch);
            cr.class_id = anno::char_class_of(ch);
            cr.quad = w.cell_quad(ci * 6.0 * k, ci * 6.0 * k + 5.0 * k);
            word.text.push_back(ch);
            word.chars.push_back(std::move(cr));
        }
        instance += static_cast<int>(w.glyph_classes.size());
        rec.words.push_back(std::move(word));
    }

    return {std::move(rec), std::move(image)};
}

struct SplitManifest {
    anno::Split split = anno::Split::kTrain;
    std::vector<std::string> ids;
    std::vector<uint64_t> sample_seeds;
};

// Writes n samples in the dataset layout. Per-sample seeds derive from
// (cfg.seed, index), so any subset regenerates bit-identically.
inline SplitManifest generate_split(const SynthConfig& cfg, int n,
                                    const std::filesystem::path& root, anno::Split split) {
    cfg.validate();
    SplitManifest manifest;
    manifest.split = split;
    for (int i = 0; i < n; ++i) {
        const uint64_t s = derive_seed(cfg.seed, static_cast<uint64_t>(i));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s_%06d", anno::split_name(split), i);
        const std::string id(buf);
        RenderedSample rs = render_sample(cfg, s, id);
        rs.record.split = split;
        anno::save_sample(root, rs.record, rs.image);
        manifest.ids.push_back(id);
        manifest.sample_seeds.push_back(s);
    }
    anno::write_split_ids(root, split, manifest.ids);
    return manifest;
}

} // namespace texseg::synth
