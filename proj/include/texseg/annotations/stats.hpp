#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "texseg/annotations/types.hpp"

namespace texseg::anno {

struct StatsReport {
    int64_t n_images = 0;
    int64_t total_words = 0;
    int64_t total_chars = 0;
    std::map<int, int64_t> words_per_image;  // word count -> #images
    std::map<int, int64_t> chars_per_image;  // char count -> #images
    std::vector<double> word_coverage;       // per image, foreground / (H*W)
    std::vector<double> effect_coverage;
    std::array<double, kNumCharClasses> letter_frequency{}; // sums to 1 when chars exist
};

inline StatsReport dataset_stats(const std::vector<SampleRecord>& ds) {
    StatsReport rep;
    rep.n_images = static_cast<int64_t>(ds.size());
    std::array<int64_t, kNumCharClasses> counts{};
    for (const SampleRecord& s : ds) {
        int words = static_cast<int>(s.words.size());
        int chars = s.total_chars();
        rep.total_words += words;
        rep.total_chars += chars;
        rep.words_per_image[words] += 1;
        rep.chars_per_image[chars] += 1;
        for (const WordRecord& w : s.words)
            for (const CharRecord& c : w.chars) counts[static_cast<size_t>(c.class_id)] += 1;
        const double denom = static_cast<double>(s.height) * s.width;
        rep.word_coverage.push_back(s.masks.word_mask.count_nonzero() / denom);
        rep.effect_coverage.push_back(s.masks.word_effect_mask.count_nonzero() / denom);
    }
    if (rep.total_chars > 0)
        for (size_t i = 0; i < counts.size(); ++i)
            rep.letter_frequency[i] = static_cast<double>(counts[i]) / rep.total_chars;
    return rep;
}

inline nlohmann::json stats_to_json(const StatsReport& r) {
    nlohmann::json j;
    j["n_images"] = r.n_images;
    j["total_words"] = r.total_words;
    j["total_chars"] = r.total_chars;
    j["words_per_image"] = nlohmann::json::object();
    for (const auto& [k, v] : r.words_per_image) j["words_per_image"][std::to_string(k)] = v;
    j["chars_per_image"] = nlohmann::json::object();
    for (const auto& [k, v] : r.chars_per_image) j["chars_per_image"][std::to_string(k)] = v;
    j["word_coverage"] = r.word_coverage;
    j["effect_coverage"] = r.effect_coverage;
    j["letter_frequency"] = r.letter_frequency;
    return j;
}

} // namespace texseg::anno
