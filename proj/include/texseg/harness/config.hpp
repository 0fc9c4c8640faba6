#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "texseg/losses/losses.hpp"
#include "texseg/model/refine_head.hpp"

namespace texseg::harness {

// Full training recipe. Every field is addressable from the flat key=value
// config file; dataset roots default to $TEXSEG_DATA_ROOT when unset.
struct TrainConfig {
    std::vector<std::string> data_roots;
    int64_t iterations = 20000;
    int64_t warmup_iterations = 500;
    double base_lr = 0.01;
    double poly_power = 0.9;
    double weight_decay = 5e-4;
    double momentum = 0.9;
    int batch_size = 8;
    int crop_size = 128;
    bool hflip = true;
    uint64_t seed = 1;

    loss::LossToggles toggles;
    loss::LossWeights weights;
    double kappa = 1.0;
    int trimap_radius = 2;
    model::KeyNorm key_norm = model::KeyNorm::kL1;
    model::HeadMode head = model::HeadMode::kTexRNet;
    int backbone_width = 32;
    int fusion_width = 64;

    std::string glyph_checkpoint;
    std::string out_dir = "run";
    int64_t log_every = 50;
    int64_t checkpoint_every = 0; // 0 = final only

    void validate() const {
        if (warmup_iterations >= iterations)
            throw std::invalid_argument("TrainConfig: warmup must be < iterations");
        if (base_lr < 0.0 || poly_power <= 0.0)
            throw std::invalid_argument("TrainConfig: bad learning-rate schedule");
        if (batch_size < 1 || crop_size < 8)
            throw std::invalid_argument("TrainConfig: bad batch/crop size");
        if (trimap_radius < 1) throw std::invalid_argument("TrainConfig: bad trimap radius");
    }

    model::ModelConfig model_config() const {
        model::ModelConfig m;
        m.head = head;
        m.backbone_width = backbone_width;
        m.fusion_width = fusion_width;
        m.kappa = kappa;
        m.key_norm = key_norm;
        m.init_seed = seed;
        return m;
    }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

} // namespace detail

inline void apply_config_entry(TrainConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_bool;
    if (key == "data_roots") {
        cfg.data_roots.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ';'))
            if (!detail::trim(item).empty()) cfg.data_roots.push_back(detail::trim(item));
    } else if (key == "iterations")
        cfg.iterations = std::stoll(value);
    else if (key == "warmup_iterations")
        cfg.warmup_iterations = std::stoll(value);
    else if (key == "base_lr")
        cfg.base_lr = std::stod(value);
    else if (key == "poly_power")
        cfg.poly_power = std::stod(value);
    else if (key == "weight_decay")
        cfg.weight_decay = std::stod(value);
    else if (key == "momentum")
        cfg.momentum = std::stod(value);
    else if (key == "batch_size")
        cfg.batch_size = std::stoi(value);
    else if (key == "crop_size")
        cfg.crop_size = std::stoi(value);
    else if (key == "hflip")
        cfg.hflip = parse_bool(value);
    else if (key == "seed")
        cfg.seed = std::stoull(value);
    else if (key == "attention")
        cfg.toggles.attention = parse_bool(value);
    else if (key == "trimap_loss")
        cfg.toggles.trimap = parse_bool(value);
    else if (key == "discriminator_loss")
        cfg.toggles.discriminator = parse_bool(value);
    else if (key == "alpha")
        cfg.weights.alpha = std::stod(value);
    else if (key == "beta")
        cfg.weights.beta = std::stod(value);
    else if (key == "gamma")
        cfg.weights.gamma = std::stod(value);
    else if (key == "kappa")
        cfg.kappa = std::stod(value);
    else if (key == "trimap_radius")
        cfg.trimap_radius = std::stoi(value);
    else if (key == "key_norm") {
        if (value == "l1")
            cfg.key_norm = model::KeyNorm::kL1;
        else if (value == "l2")
            cfg.key_norm = model::KeyNorm::kL2;
        else
            throw std::invalid_argument("config: key_norm must be l1 or l2");
    } else if (key == "head") {
        if (value == "texrnet")
            cfg.head = model::HeadMode::kTexRNet;
        else if (value == "baseline")
            cfg.head = model::HeadMode::kBaseline;
        else
            throw std::invalid_argument("config: head must be texrnet or baseline");
    } else if (key == "backbone_width")
        cfg.backbone_width = std::stoi(value);
    else if (key == "fusion_width")
        cfg.fusion_width = std::stoi(value);
    else if (key == "glyph_checkpoint")
        cfg.glyph_checkpoint = value;
    else if (key == "out_dir")
        cfg.out_dir = value;
    else if (key == "log_every")
        cfg.log_every = std::stoll(value);
    else if (key == "checkpoint_every")
        cfg.checkpoint_every = std::stoll(value);
    else
        throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline TrainConfig parse_config(std::istream& in) {
    TrainConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key = value");
        apply_config_entry(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    if (cfg.data_roots.empty()) {
        if (const char* env = std::getenv("TEXSEG_DATA_ROOT"); env && *env)
            cfg.data_roots.push_back(env);
    }
    return cfg;
}

inline TrainConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    return parse_config(f);
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
    return {{"data_roots", c.data_roots},
            {"iterations", c.iterations},
            {"warmup_iterations", c.warmup_iterations},
            {"base_lr", c.base_lr},
            {"poly_power", c.poly_power},
            {"weight_decay", c.weight_decay},
            {"momentum", c.momentum},
            {"batch_size", c.batch_size},
            {"crop_size", c.crop_size},
            {"hflip", c.hflip},
            {"seed", c.seed},
            {"attention", c.toggles.attention},
            {"trimap_loss", c.toggles.trimap},
            {"discriminator_loss", c.toggles.discriminator},
            {"alpha", c.weights.alpha},
            {"beta", c.weights.beta},
            {"gamma", c.weights.gamma},
            {"kappa", c.kappa},
            {"trimap_radius", c.trimap_radius},
            {"key_norm", c.key_norm == model::KeyNorm::kL1 ? "l1" : "l2"},
            {"head", c.head == model::HeadMode::kTexRNet ? "texrnet" : "baseline"},
            {"backbone_width", c.backbone_width},
            {"fusion_width", c.fusion_width},
            {"glyph_checkpoint", c.glyph_checkpoint},
            {"out_dir", c.out_dir},
            {"log_every", c.log_every},
            {"checkpoint_every", c.checkpoint_every}};
}

} // namespace texseg::harness
