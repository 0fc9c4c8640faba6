#pragma once

#include <string>
#include <vector>

#include "texseg/harness/dataset.hpp"
#include "texseg/metrics/metrics.hpp"
#include "texseg/model/segmentation_model.hpp"

namespace texseg::harness {

// Predicted mask = argmax of the upsampled refined logits; ties go to
// background.
inline MaskGrid predict_mask(const model::SegModel& seg, const ImageU8& image,
                             bool use_attention) {
    ad::Var img = ad::constant(image_to_tensor(image));
    model::HeadForward fwd = seg.forward(img, use_attention);
    const Tensor& logits = fwd.x_rfn_full->value; // (2,H,W)
    MaskGrid pred(image.height, image.width);
    for (int r = 0; r < image.height; ++r)
        for (int c = 0; c < image.width; ++c)
            pred.at(r, c) = logits.at3(1, r, c) > logits.at3(0, r, c) ? 1 : 0;
    return pred;
}

struct EvaluateOutput {
    metrics::EvalResult result;
    std::vector<std::string> ids;
    std::vector<double> per_image_iou;
};

inline EvaluateOutput evaluate(const model::SegModel& seg, const LoadedDataset& data,
                               bool use_attention) {
    if (data.samples.empty()) throw std::invalid_argument("evaluate: empty split");
    EvaluateOutput out;
    metrics::MetricsAccumulator acc;
    for (const LoadedSample& s : data.samples) {
        const MaskGrid pred = predict_mask(seg, s.image, use_attention);
        acc.add(pred, s.record.masks.word_mask, s.ignore);
        out.ids.push_back(s.record.sample_id);
    }
    out.result = acc.finalize();
    out.per_image_iou = acc.per_image_iou();
    return out;
}

} // namespace texseg::harness
