#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <unordered_map>

#include "texseg/harness/config.hpp"
#include "texseg/harness/dataset.hpp"
#include "texseg/harness/lr_schedule.hpp"
#include "texseg/losses/losses.hpp"
#include "texseg/model/glyph.hpp"
#include "texseg/model/segmentation_model.hpp"

namespace texseg::harness {

// SGD with momentum and L2 weight decay. Parameters that did not participate
// in the step's graph (grad never allocated) are left untouched, momentum
// buffers included.
class SgdOptimizer {
public:
    SgdOptimizer(double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {}

    void step(const std::vector<model::ParamEntry>& params, double lr) {
        for (const auto& p : params) {
            ad::Node* n = p.var.get();
            if (!n->grad_ready()) continue;
            Tensor& vel = velocity_.try_emplace(n, Tensor(n->value.shape())).first->second;
            for (int64_t i = 0; i < n->value.numel(); ++i) {
                const double g = n->grad[i] + weight_decay_ * n->value[i];
                vel[i] = momentum_ * vel[i] + g;
                n->value[i] -= lr * vel[i];
            }
        }
    }

    static void zero_grad(const std::vector<model::ParamEntry>& params) {
        for (const auto& p : params) p.var->clear_grad();
    }

private:
    double momentum_;
    double weight_decay_;
    std::unordered_map<ad::Node*, Tensor> velocity_;
};

struct SampleLossBreakdown {
    ad::Var total;
    double l_sem = 0.0, l_rfn = 0.0, l_tri = 0.0, l_dis = 0.0;
};

// Builds the Eq.-7 loss graph for one crop view. The initial prediction is
// supervised at feature resolution (ground truth downsampled nearest); the
// refined logits are upsampled to full resolution for the refined and trimap
// terms; the discriminator sees the upsampled foreground probability channel.
inline SampleLossBreakdown sample_loss(const model::SegModel& seg, const CropView& view,
                                       const TrainConfig& cfg,
                                       const model::GlyphClassifier* clf) {
    SampleLossBreakdown out;
    const int H = view.image.height, W = view.image.width;

    ad::Var image = ad::constant(image_to_tensor(view.image));
    model::HeadForward fwd = seg.forward(image, cfg.toggles.attention);
    const int64_t fh = fwd.feat_h, fw = fwd.feat_w;

    // L_sem on the initial prediction probabilities
    const MaskGrid gt_feat = loss::downsample_mask_nearest(view.word_mask,
                                                           static_cast<int>(fh),
                                                           static_cast<int>(fw));
    const MaskGrid ig_feat = loss::downsample_mask_nearest(view.ignore, static_cast<int>(fh),
                                                           static_cast<int>(fw));
    ad::Var l_sem = ad::cross_entropy(fwd.x_prob, loss::labels_from_mask(gt_feat),
                                      loss::ignore_from_mask(ig_feat), /*input_is_probs=*/true);
    out.l_sem = l_sem->value[0];
    ad::Var total = l_sem;

    const bool has_refined = seg.config().head == model::HeadMode::kTexRNet;
    const std::vector<int> gt_full = loss::labels_from_mask(view.word_mask);
    if (has_refined) {
        ad::Var rfn_flat = ad::reshape(fwd.x_rfn_full, {2, static_cast<int64_t>(H) * W});
        ad::Var l_rfn = ad::cross_entropy(rfn_flat, gt_full,
                                          loss::ignore_from_mask(view.ignore),
                                          /*input_is_probs=*/false);
        out.l_rfn = l_rfn->value[0];
        total = ad::add(total, ad::scale(l_rfn, cfg.weights.alpha));

        if (cfg.toggles.trimap) {
            const MaskGrid band = loss::make_trimap(view.word_mask, cfg.trimap_radius);
            bool degenerate = false;
            ad::Var l_tri = ad::weighted_cross_entropy(
                rfn_flat, gt_full, loss::trimap_weights(band, view.ignore),
                /*input_is_probs=*/false, &degenerate);
            out.l_tri = l_tri->value[0];
            if (!degenerate) total = ad::add(total, ad::scale(l_tri, cfg.weights.beta));
        }
    }

    if (cfg.toggles.discriminator && clf != nullptr && !view.chars.empty()) {
        ad::Var fg = ad::select_row(fwd.x_prob, 1);
        fg = ad::reshape(fg, {1, fh, fw});
        fg = ad::bilinear_resize(fg, H, W);
        fg = ad::reshape(fg, {H, W});
        model::DiscriminatorResult dis = model::discriminator_loss(fg, view.chars, *clf);
        if (!dis.disabled) {
            out.l_dis = dis.loss->value[0];
            total = ad::add(total, ad::scale(dis.loss, cfg.weights.gamma));
        }
    }

    out.total = total;
    return out;
}

struct TrainResult {
    std::string checkpoint_path;
    std::string log_path;
    loss::LossReport final_losses;
    int64_t steps_run = 0;
    int64_t steps_skipped = 0;
    std::vector<int64_t> root_visits; // per dataset root, for union coverage
};

// Full training loop: shuffled-epoch sampling over the union dataset, SGD
// with warmup + poly LR, JSONL logging, non-finite step skipping (abort after
// three in a row), periodic + final checkpoints.
inline TrainResult train(const TrainConfig& cfg, const LoadedDataset& data,
                         model::SegModel& seg, const model::GlyphClassifier* clf) {
    cfg.validate();
    if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.toggles.discriminator && clf == nullptr)
        throw std::invalid_argument("train: discriminator toggle needs a glyph classifier");
    if (clf != nullptr && !clf->frozen())
        throw std::logic_error("train: glyph classifier must be frozen");

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    TrainResult res;
    res.log_path = (fs::path(cfg.out_dir) / "train_log.jsonl").string();
    res.checkpoint_path = (fs::path(cfg.out_dir) / "model.ckpt").string();
    res.root_visits.assign(data.roots.size(), 0);
    std::ofstream log(res.log_path);
    if (!log) throw std::runtime_error("train: cannot open log " + res.log_path);

    std::vector<model::ParamEntry> params = seg.parameters();
    SgdOptimizer opt(cfg.momentum, cfg.weight_decay);
    EpochSampler sampler(data.samples.size(), derive_seed(cfg.seed, 0xA11CE));
    Rng aug_rng(derive_seed(cfg.seed, 0xC0FFEE));

    const auto t_start = std::chrono::steady_clock::now();
    int consecutive_skips = 0;
    for (int64_t t = 0; t < cfg.iterations; ++t) {
        const double lr = lr_at(t, cfg);

        SgdOptimizer::zero_grad(params);
        ad::Var batch_total;
        loss::LossReport mean_report;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const size_t idx = sampler.next();
            const LoadedSample& s = data.samples[idx];
            res.root_visits[static_cast<size_t>(s.source_root)] += 1;
            const bool flip = cfg.hflip && aug_rng.bernoulli(0.5);
            const CropView view = make_crop_view(s, cfg.crop_size, flip, aug_rng);
            SampleLossBreakdown lb = sample_loss(seg, view, cfg, clf);
            batch_total = batch_total ? ad::add(batch_total, lb.total) : lb.total;
            mean_report.l_sem += lb.l_sem;
            mean_report.l_rfn += lb.l_rfn;
            mean_report.l_tri += lb.l_tri;
            mean_report.l_dis += lb.l_dis;
        }
        const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
        batch_total = ad::scale(batch_total, inv_b);
        mean_report = loss::total_loss(mean_report.l_sem * inv_b, mean_report.l_rfn * inv_b,
                                       mean_report.l_tri * inv_b, mean_report.l_dis * inv_b,
                                       cfg.weights);

        if (!std::isfinite(batch_total->value[0])) {
            ++res.steps_skipped;
            if (++consecutive_skips >= 3)
                throw std::runtime_error("train: 3 consecutive non-finite steps, aborting");
            log << nlohmann::json({{"iteration", t}, {"lr", lr}, {"skipped", true}}).dump()
                << "\n";
            continue;
        }
        consecutive_skips = 0;

        ad::backward(batch_total);
        opt.step(params, lr);
        ++res.steps_run;
        res.final_losses = mean_report;

        if (cfg.log_every > 0 && (t % cfg.log_every == 0 || t + 1 == cfg.iterations)) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                    .count();
            log << nlohmann::json({{"iteration", t},
                                   {"lr", lr},
                                   {"loss", {{"total", mean_report.total},
                                             {"L_sem", mean_report.l_sem},
                                             {"L_rfn", mean_report.l_rfn},
                                             {"L_tri", mean_report.l_tri},
                                             {"L_dis", mean_report.l_dis}}},
                                   {"wall_time", wall}})
                       .dump()
                << "\n";
        }
        if (cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0 &&
            t + 1 < cfg.iterations) {
            seg.save(res.checkpoint_path + "." + std::to_string(t + 1), config_to_json(cfg),
                     t + 1, cfg.seed);
        }
    }

    seg.save(res.checkpoint_path, config_to_json(cfg), cfg.iterations, cfg.seed);
    return res;
}

// Convenience entry point: loads datasets and the optional glyph checkpoint,
// builds the model, trains, and returns the result.
inline TrainResult train(const TrainConfig& cfg, model::SegModel& seg) {
    LoadedDataset data = load_union_dataset(cfg.data_roots, anno::Split::kTrain);
    std::optional<model::GlyphClassifier> clf;
    if (cfg.toggles.discriminator) {
        if (cfg.glyph_checkpoint.empty())
            throw std::invalid_argument("train: discriminator toggle needs glyph_checkpoint");
        clf.emplace();
        clf->load(cfg.glyph_checkpoint);
        clf->freeze();
    }
    return train(cfg, data, seg, clf ? &*clf : nullptr);
}

} // namespace texseg::harness
