#pragma once

#include <string>
#include <vector>

#include "texseg/annotations/geometry.hpp"
#include "texseg/annotations/types.hpp"

namespace texseg::anno {

enum class Severity { kWarning, kError };

struct Violation {
    std::string code;
    Severity severity = Severity::kError;
    std::string message;
};

inline bool has_errors(const std::vector<Violation>& vs) {
    for (const auto& v : vs)
        if (v.severity == Severity::kError) return true;
    return false;
}

namespace detail {

inline void check_quad(const QuadPolygon& q, int width, int height, const std::string& where,
                       std::vector<Violation>& out) {
    if (signed_area(q) < 0.0)
        out.push_back({"QUAD_ORDER", Severity::kError,
                       where + ": vertices are counter-clockwise (y-down convention)"});
    if (quad_self_intersects(q))
        out.push_back({"QUAD_SELF_INTERSECT", Severity::kError, where + ": quad self-intersects"});
    for (const Point& p : q.vertices) {
        if (p.x < 0.0 || p.x > width || p.y < 0.0 || p.y > height) {
            out.push_back({"QUAD_BOUNDS", Severity::kError,
                           where + ": vertex outside image bounds"});
            break;
        }
    }
}

} // namespace detail

// Semantic validation; structural problems (missing files, size mismatches)
// are load errors instead. Hard invariants produce errors, soft ones warnings.
inline std::vector<Violation> validate_sample(const SampleRecord& s) {
    std::vector<Violation> out;

    const auto& m = s.masks;
    const bool mask_sizes_ok = m.word_mask.height() == s.height &&
                               m.word_mask.width() == s.width &&
                               m.word_effect_mask.same_shape(m.word_mask) &&
                               m.char_instance_mask.same_shape(m.word_mask);
    if (!mask_sizes_ok)
        out.push_back({"MASK_SIZE", Severity::kError,
                       s.sample_id + ": mask dimensions differ from (height, width)"});

    for (size_t wi = 0; wi < s.words.size(); ++wi) {
        const WordRecord& w = s.words[wi];
        const std::string wtag = s.sample_id + " word[" + std::to_string(wi) + "]";
        detail::check_quad(w.quad, s.width, s.height, wtag, out);

        double bx0, by0, bx1, by1;
        bounding_box(w.quad, bx0, by0, bx1, by1);
        const double dilation = 0.05 * std::hypot(bx1 - bx0, by1 - by0) + 1.0;

        for (size_t ci = 0; ci < w.chars.size(); ++ci) {
            const CharRecord& ch = w.chars[ci];
            const std::string ctag = wtag + " char[" + std::to_string(ci) + "]";
            detail::check_quad(ch.quad, s.width, s.height, ctag, out);
            if (ch.class_id != char_class_of_text(ch.text))
                out.push_back({"CHAR_CLASS", Severity::kError,
                               ctag + ": class_id inconsistent with text under case folding"});
            for (const Point& p : ch.quad.vertices) {
                if (point_quad_distance(w.quad, p) > dilation) {
                    out.push_back({"CHAR_OUTSIDE_WORD", Severity::kWarning,
                                   ctag + ": quad outside the dilated word quad"});
                    break;
                }
            }
        }
    }

    if (mask_sizes_ok) {
        bool effect_violated = false, char_violated = false, range_violated = false;
        const int max_instance = s.total_chars();
        for (int r = 0; r < s.height && !(effect_violated && char_violated && range_violated);
             ++r) {
            for (int c = 0; c < s.width; ++c) {
                if (!effect_violated && m.word_mask.at(r, c) && !m.word_effect_mask.at(r, c))
                    effect_violated = true;
                const uint8_t inst = m.char_instance_mask.at(r, c);
                if (inst) {
                    if (!char_violated && !m.word_mask.at(r, c)) char_violated = true;
                    if (!range_violated && inst > max_instance) range_violated = true;
                }
            }
        }
        if (effect_violated)
            out.push_back({"EFFECT_SUBSET", Severity::kError,
                           s.sample_id + ": word mask pixel outside word-effect mask"});
        if (char_violated)
            out.push_back({"CHAR_SUBSET", Severity::kWarning,
                           s.sample_id + ": char instance pixel outside word mask"});
        if (range_violated)
            out.push_back({"INSTANCE_INDEX", Severity::kWarning,
                           s.sample_id + ": char instance index exceeds char count"});
    }

    return out;
}

} // namespace texseg::anno
