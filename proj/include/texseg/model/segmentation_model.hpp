#pragma once

#include <memory>
#include <string>
#include <vector>

#include "texseg/core/checkpoint.hpp"
#include "texseg/model/backbone.hpp"
#include "texseg/model/refine_head.hpp"

namespace texseg::model {

struct ModelConfig {
    HeadMode head = HeadMode::kTexRNet;
    int backbone_width = 32;
    int classes = 2;
    int fusion_width = 64;
    double kappa = 1.0;
    KeyNorm key_norm = KeyNorm::kL1;
    uint64_t init_seed = 0;
};

class SegModel {
public:
    explicit SegModel(const ModelConfig& cfg) : cfg_(cfg) {
        Rng rng(derive_seed(cfg.init_seed, 0x5e9));
        backbone_ = std::make_unique<ToyBackbone>(rng, cfg.backbone_width);
        head_ = std::make_unique<TexRNetHead>(backbone_->channels(), cfg.head, rng,
                                              cfg.classes, cfg.fusion_width, cfg.kappa,
                                              cfg.key_norm);
    }

    const ModelConfig& config() const { return cfg_; }
    const Backbone& backbone() const { return *backbone_; }
    const TexRNetHead& head() const { return *head_; }

    HeadForward forward(const ad::Var& image, bool use_attention) const {
        return head_->forward(image, backbone_->forward(image), use_attention);
    }

    std::vector<ParamEntry> parameters() const {
        std::vector<ParamEntry> out;
        backbone_->collect_params(out, "backbone");
        head_->collect_params(out, "head");
        return out;
    }

    int64_t parameter_count() const { return param_count(parameters()); }

    void save(const std::string& path, const nlohmann::json& extra_config, int64_t iteration,
              uint64_t seed) const {
        std::vector<NamedTensor> named;
        for (const auto& p : parameters()) named.push_back({p.name, &p.var->value});
        save_param_blob(path, named);
        nlohmann::json cfg_json = extra_config;
        cfg_json["model"] = {{"head", cfg_.head == HeadMode::kTexRNet ? "texrnet" : "baseline"},
                             {"backbone_width", cfg_.backbone_width},
                             {"classes", cfg_.classes},
                             {"fusion_width", cfg_.fusion_width},
                             {"kappa", cfg_.kappa},
                             {"key_norm", cfg_.key_norm == KeyNorm::kL1 ? "l1" : "l2"},
                             {"init_seed", cfg_.init_seed}};
        save_sidecar(path, cfg_json, iteration, seed);
    }

    void load(const std::string& path) {
        std::vector<NamedTensor> named;
        for (const auto& p : parameters()) named.push_back({p.name, &p.var->value});
        load_param_blob(path, named);
    }

    // Rebuilds a model from a checkpoint sidecar + blob.
    static SegModel from_checkpoint(const std::string& path) {
        const nlohmann::json side = load_sidecar(path);
        const nlohmann::json& m = side.at("config").at("model");
        ModelConfig cfg;
        cfg.head = m.at("head").get<std::string>() == "baseline" ? HeadMode::kBaseline
                                                                 : HeadMode::kTexRNet;
        cfg.backbone_width = m.at("backbone_width").get<int>();
        cfg.classes = m.at("classes").get<int>();
        cfg.fusion_width = m.at("fusion_width").get<int>();
        cfg.kappa = m.at("kappa").get<double>();
        cfg.key_norm = m.at("key_norm").get<std::string>() == "l2" ? KeyNorm::kL2 : KeyNorm::kL1;
        cfg.init_seed = m.at("init_seed").get<uint64_t>();
        SegModel model(cfg);
        model.load(path);
        return model;
    }

private:
    ModelConfig cfg_;
    std::unique_ptr<ToyBackbone> backbone_;
    std::unique_ptr<TexRNetHead> head_;
};

} // namespace texseg::model
