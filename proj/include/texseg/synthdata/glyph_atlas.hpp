#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace texseg::synth {

inline constexpr int kGlyphRows = 7;
inline constexpr int kGlyphCols = 5;
inline constexpr int kAtlasSize = 36; // A-Z, 0-9 (classes 0..35)

// One bit per cell, packed per row (bit 4 = leftmost column).
struct Glyph {
    std::array<uint8_t, kGlyphRows> rows{};

    bool ink(int r, int c) const { return (rows[static_cast<size_t>(r)] >> (4 - c)) & 1; }

    int ink_count() const {
        int n = 0;
        for (int r = 0; r < kGlyphRows; ++r)
            for (int c = 0; c < kGlyphCols; ++c) n += ink(r, c);
        return n;
    }
};

// Procedural 5x7 dot-matrix glyphs for the 36 letter/digit classes; the misc
// class (36) has no glyph and is never rendered.
class GlyphAtlas {
public:
    GlyphAtlas() {
        static const char* patterns[kAtlasSize] = {
            // A
            ".XXX."  "X...X"  "X...X"  "XXXXX"  "X...X"  "X...X"  "X...X",
            // B
            "XXXX."  "X...X"  "X...X"  "XXXX."  "X...X"  "X...X"  "XXXX.",
            // C
            ".XXX."  "X...X"  "X...."  "X...."  "X...."  "X...X"  ".XXX.",
            // D
            "XXXX."  "X...X"  "X...X"  "X...X"  "X...X"  "X...X"  "XXXX.",
            // E
            "XXXXX"  "X...."  "X...."  "XXXX."  "X...."  "X...."  "XXXXX",
            // F
            "XXXXX"  "X...."  "X...."  "XXXX."  "X...."  "X...."  "X....",
            // G
            ".XXX."  "X...X"  "X...."  "X.XXX"  "X...X"  "X...X"  ".XXXX",
            // H
            "X...X"  "X...X"  "X...X"  "XXXXX"  "X...X"  "X...X"  "X...X",
            // I
            "XXXXX"  "..X.."  "..X.."  "..X.."  "..X.."  "..X.."  "XXXXX",
            // J
            "..XXX"  "...X."  "...X."  "...X."  "...X."  "X..X."  ".XX..",
            // K
            "X...X"  "X..X."  "X.X.."  "XX..."  "X.X.."  "X..X."  "X...X",
            // L
            "X...."  "X...."  "X...."  "X...."  "X...."  "X...."  "XXXXX",
            // M
            "X...X"  "XX.XX"  "X.X.X"  "X.X.X"  "X...X"  "X...X"  "X...X",
            // N
            "X...X"  "XX..X"  "X.X.X"  "X..XX"  "X...X"  "X...X"  "X...X",
            // O
            ".XXX."  "X...X"  "X...X"  "X...X"  "X...X"  "X...X"  ".XXX.",
            // P
            "XXXX."  "X...X"  "X...X"  "XXXX."  "X...."  "X...."  "X....",
            // Q
            ".XXX."  "X...X"  "X...X"  "X...X"  "X.X.X"  "X..X."  ".XX.X",
            // R
            "XXXX."  "X...X"  "X...X"  "XXXX."  "X.X.."  "X..X."  "X...X",
            // S
            ".XXXX"  "X...."  "X...."  ".XXX."  "....X"  "....X"  "XXXX.",
            // T
            "XXXXX"  "..X.."  "..X.."  "..X.."  "..X.."  "..X.."  "..X..",
            // U
            "X...X"  "X...X"  "X...X"  "X...X"  "X...X"  "X...X"  ".XXX.",
            // V
            "X...X"  "X...X"  "X...X"  "X...X"  "X...X"  ".X.X."  "..X..",
            // W
            "X...X"  "X...X"  "X...X"  "X.X.X"  "X.X.X"  "XX.XX"  "X...X",
            // X
            "X...X"  "X...X"  ".X.X."  "..X.."  ".X.X."  "X...X"  "X...X",
            // Y
            "X...X"  "X...X"  ".X.X."  "..X.."  "..X.."  "..X.."  "..X..",
            // Z
            "XXXXX"  "....X"  "...X."  "..X.."  ".X..."  "X...."  "XXXXX",
            // 0
            ".XXX."  "X...X"  "X..XX"  "X.X.X"  "XX..X"  "X...X"  ".XXX.",
            // 1
            "..X.."  ".XX.."  "..X.."  "..X.."  "..X.."  "..X.."  "XXXXX",
            // 2
            ".XXX."  "X...X"  "....X"  "...X."  "..X.."  ".X..."  "XXXXX",
            // 3
            "XXXXX"  "...X."  "..X.."  "...X."  "....X"  "X...X"  ".XXX.",
            // 4
            "...X."  "..XX."  ".X.X."  "X..X."  "XXXXX"  "...X."  "...X.",
            // 5
            "XXXXX"  "X...."  "XXXX."  "....X"  "....X"  "X...X"  ".XXX.",
            // 6
            "..XX."  ".X..."  "X...."  "XXXX."  "X...X"  "X...X"  ".XXX.",
            // 7
            "XXXXX"  "....X"  "...X."  "..X.."  ".X..."  ".X..."  ".X...",
            // 8
            ".XXX."  "X...X"  "X...X"  ".XXX."  "X...X"  "X...X"  ".XXX.",
            // 9
            ".XXX."  "X...X"  "X...X"  ".XXXX"  "....X"  "...X."  ".XX..",
        };
        for (int g = 0; g < kAtlasSize; ++g) {
            const char* p = patterns[g];
            for (int r = 0; r < kGlyphRows; ++r) {
                uint8_t bits = 0;
                for (int c = 0; c < kGlyphCols; ++c)
                    if (p[r * kGlyphCols + c] == 'X') bits |= static_cast<uint8_t>(1 << (4 - c));
                glyphs_[static_cast<size_t>(g)].rows[static_cast<size_t>(r)] = bits;
            }
        }
    }

    const Glyph& glyph(int class_id) const { return glyphs_[static_cast<size_t>(class_id)]; }

    static char class_to_char(int class_id) {
        return class_id < 26 ? static_cast<char>('A' + class_id)
                             : static_cast<char>('0' + class_id - 26);
    }

private:
    std::array<Glyph, kAtlasSize> glyphs_;
};

inline const GlyphAtlas& glyph_atlas() {
    static const GlyphAtlas atlas;
    return atlas;
}

} // namespace texseg::synth
