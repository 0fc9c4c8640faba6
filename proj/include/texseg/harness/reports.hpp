#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "texseg/harness/evaluate.hpp"
#include "texseg/model/refine_head.hpp"

namespace texseg::harness {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation with average ranks for ties. Undefined (nullopt)
// for fewer than 3 points or when either side has zero rank variance.
inline std::optional<double> spearman_rho(const std::vector<double>& a,
                                          const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 3) return std::nullopt;
    const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

struct CosSimReport {
    std::vector<std::string> ids;
    std::vector<double> cossim; // off-diagonal X_01 of CosSim(x'_sem)
    std::vector<double> fg_iou; // per image
    std::optional<double> rho;  // Spearman, expected negative trend
};

// Per-image (cosine similarity, fgIoU) pairs plus their rank correlation.
inline CosSimReport cossim_report(const model::SegModel& seg, const LoadedDataset& data,
                                  bool use_attention) {
    CosSimReport rep;
    for (const LoadedSample& s : data.samples) {
        ad::Var img = ad::constant(image_to_tensor(s.image));
        model::HeadForward fwd = seg.forward(img, use_attention);
        const Tensor& logits = fwd.x_rfn_full->value;
        MaskGrid pred(s.record.height, s.record.width);
        for (int r = 0; r < s.record.height; ++r)
            for (int c = 0; c < s.record.width; ++c)
                pred.at(r, c) = logits.at3(1, r, c) > logits.at3(0, r, c) ? 1 : 0;
        rep.ids.push_back(s.record.sample_id);
        rep.cossim.push_back(fwd.cossim->value.at2(0, 1));
        rep.fg_iou.push_back(
            metrics::fg_iou(pred, s.record.masks.word_mask, s.ignore).value);
    }
    rep.rho = spearman_rho(rep.cossim, rep.fg_iou);
    return rep;
}

inline std::string cossim_csv(const CosSimReport& rep) {
    std::string out = "sample_id,cossim,fgIoU\n";
    for (size_t i = 0; i < rep.ids.size(); ++i) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", rep.ids[i].c_str(), rep.cossim[i],
                      rep.fg_iou[i]);
        out += buf;
    }
    return out;
}

namespace detail {

// Raw double map: magic, height, width, row-major values.
inline void write_float_map(const std::string& path, const Tensor& map2d) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    const char magic[8] = {'T', 'S', 'M', 'A', 'P', '0', '1', '\0'};
    f.write(magic, sizeof(magic));
    const uint32_t h = static_cast<uint32_t>(map2d.dim(0));
    const uint32_t w = static_cast<uint32_t>(map2d.dim(1));
    f.write(reinterpret_cast<const char*>(&h), 4);
    f.write(reinterpret_cast<const char*>(&w), 4);
    f.write(reinterpret_cast<const char*>(map2d.data()),
            static_cast<std::streamsize>(map2d.numel() * sizeof(double)));
}

// [-1,1] signed map rendered as 8-bit around mid-gray.
inline ImageU8 signed_map_image(const Tensor& map2d) {
    ImageU8 img(static_cast<int>(map2d.dim(0)), static_cast<int>(map2d.dim(1)), 1);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double v = std::clamp(map2d.at2(r, c), -1.0, 1.0);
            img.at(r, c, 0) = static_cast<uint8_t>(std::lround(127.5 + 127.0 * v));
        }
    return img;
}

} // namespace detail

// Dumps the initial prediction, the attention map, and their signed delta
// (re-activated vs suppressed regions) per image, as PNG + raw float maps.
inline void activation_report(const model::SegModel& seg, const LoadedDataset& data,
                              const std::string& out_dir, bool use_attention = true) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const LoadedSample& s : data.samples) {
        ad::Var img = ad::constant(image_to_tensor(s.image));
        model::HeadForward fwd = seg.forward(img, use_attention);
        ad::Var delta = model::activation_delta(fwd.x_att, fwd.x_prob);
        const int64_t h = fwd.feat_h, w = fwd.feat_w;
        auto fg_plane = [&](const ad::Var& flat) {
            Tensor t({h, w});
            for (int64_t i = 0; i < h * w; ++i) t[i] = flat->value.at2(1, i);
            return t;
        };
        const Tensor prob = fg_plane(fwd.x_prob);
        const Tensor att = fg_plane(fwd.x_att);
        const Tensor dlt = fg_plane(delta);
        const std::string stem = (fs::path(out_dir) / s.record.sample_id).string();
        detail::write_float_map(stem + "_initial.f64", prob);
        detail::write_float_map(stem + "_attention.f64", att);
        detail::write_float_map(stem + "_delta.f64", dlt);
        write_png(stem + "_delta.png", detail::signed_map_image(dlt));
    }
}

} // namespace texseg::harness
