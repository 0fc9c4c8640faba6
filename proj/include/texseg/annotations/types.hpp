#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "texseg/core/grid.hpp"

namespace texseg::anno {

inline constexpr int kNumCharClasses = 37; // 26 letters + 10 digits + misc
inline constexpr int kMiscClass = 36;
inline constexpr int kMaxCharInstances = 254;

// Case-folded character class: a-z/A-Z -> 0..25, 0-9 -> 26..35, misc -> 36.
inline int char_class_of(char ch) {
    if (ch >= 'a' && ch <= 'z') return ch - 'a';
    if (ch >= 'A' && ch <= 'Z') return ch - 'A';
    if (ch >= '0' && ch <= '9') return 26 + (ch - '0');
    return kMiscClass;
}

inline int char_class_of_text(const std::string& text) {
    return text.size() == 1 ? char_class_of(text[0]) : kMiscClass;
}

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Four vertices in image coordinates (top-left origin, y down), clockwise
// starting from the top-left corner in reading direction.
struct QuadPolygon {
    std::array<Point, 4> vertices;
};

struct CharRecord {
    QuadPolygon quad;
    std::string text; // single character
    int class_id = kMiscClass;
};

struct WordRecord {
    QuadPolygon quad;
    std::string text;
    std::vector<CharRecord> chars;
    bool ignore = false;
};

struct MaskSet {
    MaskGrid word_mask;          // 0/1
    MaskGrid word_effect_mask;   // 0/1, superset of word_mask
    MaskGrid char_instance_mask; // 0 = background, k = instance index (reading order)
};

enum class Split { kTrain, kVal, kTest };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        default: return "test";
    }
}

inline Split split_from_name(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "val") return Split::kVal;
    if (name == "test") return Split::kTest;
    throw std::invalid_argument("unknown split tag: " + name);
}

struct SampleRecord {
    std::string sample_id;
    std::string image_path;
    int height = 0;
    int width = 0;
    std::vector<WordRecord> words;
    MaskSet masks;
    Split split = Split::kTrain;

    int total_chars() const {
        int n = 0;
        for (const auto& w : words) n += static_cast<int>(w.chars.size());
        return n;
    }
};

} // namespace texseg::anno
