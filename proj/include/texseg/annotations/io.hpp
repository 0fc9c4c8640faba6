#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "texseg/annotations/types.hpp"
#include "texseg/core/image.hpp"
#include "texseg/core/png_io.hpp"

// On-disk layout:
//   <root>/images/<id>.png              8-bit RGB
//   <root>/annotations/<id>.json
//   <root>/masks/<id>_word.png          0 = background, 255 = foreground
//   <root>/masks/<id>_effect.png        0 = background, 255 = foreground
//   <root>/masks/<id>_char.png          0 = background, k in [1,254] = instance
//   <root>/splits/{train,val,test}.txt  one id per line

namespace texseg::anno {

namespace fs = std::filesystem;

struct DatasetError : std::runtime_error {
    explicit DatasetError(const std::string& sample_id, const std::string& what)
        : std::runtime_error("[" + sample_id + "] " + what), sample_id(sample_id) {}
    std::string sample_id;
};

namespace detail {

inline nlohmann::json quad_to_json(const QuadPolygon& q) {
    nlohmann::json j = nlohmann::json::array();
    for (const Point& p : q.vertices) j.push_back({p.x, p.y});
    return j;
}

inline QuadPolygon quad_from_json(const nlohmann::json& j, int width, int height) {
    if (!j.is_array() || j.size() != 4)
        throw std::runtime_error("quad must have exactly 4 vertices");
    QuadPolygon q;
    for (int i = 0; i < 4; ++i) {
        q.vertices[i].x = std::clamp(j[i][0].get<double>(), 0.0, static_cast<double>(width));
        q.vertices[i].y = std::clamp(j[i][1].get<double>(), 0.0, static_cast<double>(height));
    }
    return q;
}

} // namespace detail

inline nlohmann::json annotation_to_json(const SampleRecord& s) {
    nlohmann::json j;
    j["id"] = s.sample_id;
    j["height"] = s.height;
    j["width"] = s.width;
    j["words"] = nlohmann::json::array();
    for (const WordRecord& w : s.words) {
        nlohmann::json jw;
        jw["text"] = w.text;
        jw["ignore"] = w.ignore;
        jw["quad"] = detail::quad_to_json(w.quad);
        jw["chars"] = nlohmann::json::array();
        for (const CharRecord& c : w.chars) {
            nlohmann::json jc;
            jc["text"] = c.text;
            jc["class_id"] = c.class_id;
            jc["quad"] = detail::quad_to_json(c.quad);
            jw["chars"].push_back(std::move(jc));
        }
        j["words"].push_back(std::move(jw));
    }
    return j;
}

inline void save_sample(const fs::path& root, const SampleRecord& s, const ImageU8& image) {
    fs::create_directories(root / "images");
    fs::create_directories(root / "annotations");
    fs::create_directories(root / "masks");

    write_png((root / "images" / (s.sample_id + ".png")).string(), image);

    std::ofstream jf(root / "annotations" / (s.sample_id + ".json"));
    if (!jf) throw DatasetError(s.sample_id, "cannot write annotation JSON");
    jf << annotation_to_json(s).dump(2) << "\n";

    write_png((root / "masks" / (s.sample_id + "_word.png")).string(),
              mask_to_image(s.masks.word_mask, 255));
    write_png((root / "masks" / (s.sample_id + "_effect.png")).string(),
              mask_to_image(s.masks.word_effect_mask, 255));
    write_png((root / "masks" / (s.sample_id + "_char.png")).string(),
              mask_to_image(s.masks.char_instance_mask, 1));
}

inline SampleRecord load_sample(const fs::path& root, const std::string& id, Split split) {
    const fs::path anno_path = root / "annotations" / (id + ".json");
    std::ifstream jf(anno_path);
    if (!jf) throw DatasetError(id, "missing annotation file " + anno_path.string());
    nlohmann::json j;
    try {
        jf >> j;
    } catch (const std::exception& e) {
        throw DatasetError(id, std::string("malformed JSON: ") + e.what());
    }

    SampleRecord s;
    s.split = split;
    try {
        s.sample_id = j.at("id").get<std::string>();
        s.height = j.at("height").get<int>();
        s.width = j.at("width").get<int>();
        for (const auto& jw : j.at("words")) {
            WordRecord w;
            w.text = jw.at("text").get<std::string>();
            w.ignore = jw.at("ignore").get<bool>();
            w.quad = detail::quad_from_json(jw.at("quad"), s.width, s.height);
            for (const auto& jc : jw.at("chars")) {
                CharRecord c;
                c.text = jc.at("text").get<std::string>();
                c.class_id = jc.at("class_id").get<int>();
                if (c.class_id < 0 || c.class_id >= kNumCharClasses)
                    throw std::runtime_error("class_id out of range");
                c.quad = detail::quad_from_json(jc.at("quad"), s.width, s.height);
                w.chars.push_back(std::move(c));
            }
            s.words.push_back(std::move(w));
        }
    } catch (const DatasetError&) {
        throw;
    } catch (const std::exception& e) {
        throw DatasetError(id, std::string("bad annotation schema: ") + e.what());
    }
    if (s.sample_id != id) throw DatasetError(id, "annotation id mismatch: " + s.sample_id);
    if (s.height <= 0 || s.width <= 0) throw DatasetError(id, "non-positive image size");

    s.image_path = (root / "images" / (id + ".png")).string();
    if (!fs::exists(s.image_path)) throw DatasetError(id, "missing image " + s.image_path);

    auto load_mask = [&](const std::string& suffix, uint8_t divisor) {
        const fs::path p = root / "masks" / (id + suffix);
        ImageU8 img;
        try {
            img = read_png(p.string());
        } catch (const std::exception& e) {
            throw DatasetError(id, e.what());
        }
        if (img.channels != 1) throw DatasetError(id, "mask is not single channel: " + p.string());
        if (img.height != s.height || img.width != s.width)
            throw DatasetError(id, "mask size " + std::to_string(img.height) + "x" +
                                       std::to_string(img.width) + " differs from image " +
                                       std::to_string(s.height) + "x" + std::to_string(s.width) +
                                       ": " + p.string());
        return image_to_mask(img, divisor);
    };
    s.masks.word_mask = load_mask("_word.png", 255);
    s.masks.word_effect_mask = load_mask("_effect.png", 255);
    s.masks.char_instance_mask = load_mask("_char.png", 1);
    return s;
}

inline std::vector<std::string> read_split_ids(const fs::path& root, Split split) {
    const fs::path p = root / "splits" / (std::string(split_name(split)) + ".txt");
    std::ifstream f(p);
    if (!f) throw std::runtime_error("missing split file " + p.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

inline void write_split_ids(const fs::path& root, Split split,
                            const std::vector<std::string>& ids) {
    fs::create_directories(root / "splits");
    std::ofstream f(root / "splits" / (std::string(split_name(split)) + ".txt"));
    if (!f) throw std::runtime_error("cannot write split file");
    for (const auto& id : ids) f << id << "\n";
}

inline std::vector<SampleRecord> load_dataset(const fs::path& root, Split split) {
    std::vector<SampleRecord> out;
    for (const std::string& id : read_split_ids(root, split))
        out.push_back(load_sample(root, id, split));
    return out;
}

inline ImageU8 load_image(const SampleRecord& s) {
    ImageU8 img = read_png(s.image_path);
    if (img.channels != 3) throw DatasetError(s.sample_id, "image is not RGB");
    if (img.height != s.height || img.width != s.width)
        throw DatasetError(s.sample_id, "image size differs from annotation");
    return img;
}

} // namespace texseg::anno
