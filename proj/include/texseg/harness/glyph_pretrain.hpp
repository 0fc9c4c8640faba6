#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "texseg/harness/dataset.hpp"
#include "texseg/model/glyph.hpp"

namespace texseg::harness {

struct GlyphCropSample {
    Tensor patch; // (1,32,32) binary in [0,1]
    int class_id = 0;
};

// Cuts 32x32 training patches for the classifier out of the binary
// ground-truth char mask (any instance > 0), one per annotated char.
inline std::vector<GlyphCropSample> gt_char_crops(const LoadedSample& s) {
    const int H = s.record.height, W = s.record.width;
    Tensor mask({H, W});
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            mask.at2(r, c) = s.record.masks.char_instance_mask.at(r, c) ? 1.0 : 0.0;
    ad::Var mask_var = ad::constant(std::move(mask));
    std::vector<GlyphCropSample> out;
    for (const model::CharCrop& crop : model::char_crop(mask_var, s.active_chars()))
        out.push_back({crop.patch->value, crop.class_id});
    return out;
}

struct GlyphPretrainReport {
    double holdout_accuracy = 0.0;
    int n_train = 0;
    int n_holdout = 0;
    std::vector<int> missing_classes; // classes absent from the training crops
};

inline double classifier_accuracy(const model::GlyphClassifier& clf,
                                  const std::vector<GlyphCropSample>& crops) {
    if (crops.empty()) return 0.0;
    int correct = 0;
    for (const auto& c : crops) {
        ad::Var logits = clf.forward(ad::constant(c.patch));
        int arg = 0;
        for (int i = 1; i < anno::kNumCharClasses; ++i)
            if (logits->value[i] > logits->value[arg]) arg = i;
        if (arg == c.class_id) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(crops.size());
}

// Pre-trains the 37-class classifier on ground-truth crops, holding out every
// tenth crop for accuracy reporting, then freezes it. Deterministic in seed.
inline model::GlyphClassifier pretrain_classifier(const LoadedDataset& data, int epochs,
                                                  uint64_t seed, GlyphPretrainReport* report) {
    std::vector<GlyphCropSample> all;
    for (const LoadedSample& s : data.samples)
        for (auto& c : gt_char_crops(s)) all.push_back(std::move(c));
    if (all.empty()) throw std::invalid_argument("pretrain_classifier: no char crops");

    std::vector<GlyphCropSample> train, holdout;
    for (size_t i = 0; i < all.size(); ++i)
        (i % 10 == 9 ? holdout : train).push_back(std::move(all[i]));

    GlyphPretrainReport rep;
    rep.n_train = static_cast<int>(train.size());
    rep.n_holdout = static_cast<int>(holdout.size());
    std::set<int> seen;
    for (const auto& c : train) seen.insert(c.class_id);
    for (int cls = 0; cls < anno::kNumCharClasses; ++cls)
        if (!seen.count(cls)) rep.missing_classes.push_back(cls);

    model::GlyphClassifier clf(seed);
    std::vector<model::ParamEntry> params = clf.parameters();
    std::unordered_map<ad::Node*, Tensor> velocity;
    const double lr = 0.02, momentum = 0.9;
    const int batch = 32;

    Rng rng(derive_seed(seed, 0x61f9));
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(order.size(), start + batch);
            for (const auto& p : params) p.var->clear_grad();
            ad::Var total;
            for (size_t i = start; i < end; ++i) {
                const GlyphCropSample& c = train[order[i]];
                ad::Var logits =
                    ad::reshape(clf.forward(ad::constant(c.patch)), {anno::kNumCharClasses, 1});
                ad::Var ce = ad::cross_entropy(logits, {c.class_id}, {}, false);
                total = total ? ad::add(total, ce) : ce;
            }
            total = ad::scale(total, 1.0 / static_cast<double>(end - start));
            ad::backward(total);
            for (const auto& p : params) {
                ad::Node* n = p.var.get();
                if (!n->grad_ready()) continue;
                Tensor& vel = velocity.try_emplace(n, Tensor(n->value.shape())).first->second;
                for (int64_t k = 0; k < n->value.numel(); ++k) {
                    vel[k] = momentum * vel[k] + n->grad[k];
                    n->value[k] -= lr * vel[k];
                }
            }
        }
    }

    rep.holdout_accuracy = classifier_accuracy(clf, holdout.empty() ? train : holdout);
    clf.freeze();
    if (report) *report = rep;
    return clf;
}

} // namespace texseg::harness
