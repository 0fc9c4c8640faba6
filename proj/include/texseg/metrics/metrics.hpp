#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "texseg/core/grid.hpp"

namespace texseg::metrics {

struct PixelCounts {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    PixelCounts& operator+=(const PixelCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

// Ignored pixels are excluded from every count. An empty ignore grid means
// nothing is ignored.
inline PixelCounts count_pixels(const MaskGrid& pred, const MaskGrid& gt,
                                const MaskGrid& ignore) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("metrics: pred/gt shape mismatch");
    const bool has_ignore = ignore.numel() > 0;
    if (has_ignore && !ignore.same_shape(gt))
        throw std::invalid_argument("metrics: ignore shape mismatch");
    PixelCounts c;
    for (int64_t i = 0; i < gt.numel(); ++i) {
        if (has_ignore && ignore.data()[i]) continue;
        const bool p = pred.data()[i] != 0, g = gt.data()[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

struct FgIouResult {
    double value = 0.0;
    bool empty = false; // gt and pred both empty after ignore
};

inline FgIouResult fg_iou_from_counts(const PixelCounts& c) {
    FgIouResult r;
    const uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) {
        r.value = 1.0;
        r.empty = true;
    } else {
        r.value = static_cast<double>(c.tp) / static_cast<double>(denom);
    }
    return r;
}

inline FgIouResult fg_iou(const MaskGrid& pred, const MaskGrid& gt, const MaskGrid& ignore) {
    return fg_iou_from_counts(count_pixels(pred, gt, ignore));
}

struct FscoreResult {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    bool precision_undefined = false; // no predicted foreground
    bool recall_undefined = false;    // no ground-truth foreground
};

inline FscoreResult fg_fscore_from_counts(const PixelCounts& c) {
    FscoreResult r;
    if (c.tp + c.fp == 0)
        r.precision_undefined = true;
    else
        r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn == 0)
        r.recall_undefined = true;
    else
        r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision + r.recall > 0.0)
        r.f = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

inline FscoreResult fg_fscore(const MaskGrid& pred, const MaskGrid& gt, const MaskGrid& ignore) {
    return fg_fscore_from_counts(count_pixels(pred, gt, ignore));
}

struct EvalResult {
    double fg_iou = 0.0; // in [0,1]; tables report x100
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
    uint64_t tp = 0, fp = 0, fn = 0;
    int64_t n_images = 0;
    bool empty = false;
};

// Dataset-level aggregation accumulates raw pixel counts before the ratio;
// per-image IoUs are kept alongside for the diagnostic reports.
class MetricsAccumulator {
public:
    void add(const MaskGrid& pred, const MaskGrid& gt, const MaskGrid& ignore) {
        const PixelCounts c = count_pixels(pred, gt, ignore);
        totals_ += c;
        per_image_iou_.push_back(fg_iou_from_counts(c).value);
        ++n_images_;
    }

    EvalResult finalize() const {
        EvalResult r;
        const FgIouResult iou = fg_iou_from_counts(totals_);
        const FscoreResult f = fg_fscore_from_counts(totals_);
        r.fg_iou = iou.value;
        r.empty = iou.empty;
        r.precision = f.precision;
        r.recall = f.recall;
        r.fscore = f.f;
        r.tp = totals_.tp;
        r.fp = totals_.fp;
        r.fn = totals_.fn;
        r.n_images = n_images_;
        return r;
    }

    const std::vector<double>& per_image_iou() const { return per_image_iou_; }

private:
    PixelCounts totals_;
    std::vector<double> per_image_iou_;
    int64_t n_images_ = 0;
};

inline std::string eval_csv_header() {
    return "dataset,split,fgIoU,precision,recall,F-score,n_images";
}

inline std::string eval_csv_row(const std::string& dataset, const std::string& split,
                                const EvalResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.6f,%lld", dataset.c_str(),
                  split.c_str(), r.fg_iou, r.precision, r.recall, r.fscore,
                  static_cast<long long>(r.n_images));
    return buf;
}

inline nlohmann::json eval_to_json(const std::string& dataset, const std::string& split,
                                   const EvalResult& r) {
    return {{"dataset", dataset},   {"split", split},
            {"fgIoU", r.fg_iou},    {"precision", r.precision},
            {"recall", r.recall},   {"F-score", r.fscore},
            {"n_images", r.n_images}};
}

} // namespace texseg::metrics
