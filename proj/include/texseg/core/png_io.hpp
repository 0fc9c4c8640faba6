#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "texseg/core/image.hpp"

// Minimal PNG codec on top of zlib, enough for the dataset layout:
// 8-bit grayscale and RGB(A), no interlacing. Mask semantics stay bit-exact
// because rows are stored losslessly.

namespace texseg {

namespace png_detail {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline uint32_t get_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline void append_chunk(std::vector<uint8_t>& out, const char type[4],
                         const uint8_t* data, size_t len) {
    put_u32(out, static_cast<uint32_t>(len));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + len);
    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, out.data() + start, static_cast<uInt>(4 + len)));
    put_u32(out, crc);
}

inline uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<uint8_t>(a);
    if (pb <= pc) return static_cast<uint8_t>(b);
    return static_cast<uint8_t>(c);
}

} // namespace png_detail

inline void write_png(const std::string& path, const ImageU8& img) {
    using namespace png_detail;
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: only grayscale or RGB supported");
    if (img.height <= 0 || img.width <= 0)
        throw std::invalid_argument("write_png: empty image");

    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int r = 0; r < img.height; ++r) {
        raw.push_back(0); // filter type 0 per row
        const uint8_t* row = img.pixels.data() + static_cast<size_t>(r) * stride;
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("write_png: deflate failed");
    comp.resize(comp_len);

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    uint8_t ihdr[13];
    ihdr[0] = static_cast<uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<uint8_t>(img.width);
    ihdr[4] = static_cast<uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<uint8_t>(img.height);
    ihdr[8] = 8;                                        // bit depth
    ihdr[9] = (img.channels == 1) ? 0 : 2;              // color type
    ihdr[10] = ihdr[11] = ihdr[12] = 0;                 // deflate, adaptive, no interlace
    append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
    append_chunk(out, "IDAT", comp.data(), comp.size());
    append_chunk(out, "IEND", nullptr, 0);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_png: cannot open " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_png: write failed for " + path);
}

inline ImageU8 read_png(const std::string& path) {
    using namespace png_detail;
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_png: cannot open " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (buf.size() < 8 || std::memcmp(buf.data(), sig, 8) != 0)
        throw std::runtime_error("read_png: bad signature in " + path);

    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_ihdr = false;
    while (pos + 12 <= buf.size()) {
        uint32_t len = get_u32(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw std::runtime_error("read_png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* data = buf.data() + pos + 8;
        uint32_t expect = get_u32(buf.data() + pos + 8 + len);
        uint32_t actual = static_cast<uint32_t>(
            ::crc32(0L, buf.data() + pos + 4, static_cast<uInt>(4 + len)));
        if (expect != actual) throw std::runtime_error("read_png: CRC mismatch in " + path);

        if (std::strncmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("read_png: bad IHDR");
            width = static_cast<int>(get_u32(data));
            height = static_cast<int>(get_u32(data + 4));
            int depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8) throw std::runtime_error("read_png: only 8-bit supported");
            if (interlace != 0) throw std::runtime_error("read_png: interlaced PNG unsupported");
            switch (color) {
                case 0: channels = 1; break;
                case 2: channels = 3; break;
                case 6: channels = 4; break;
                default: throw std::runtime_error("read_png: unsupported color type");
            }
            seen_ihdr = true;
        } else if (std::strncmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::strncmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || width <= 0 || height <= 0)
        throw std::runtime_error("read_png: missing IHDR in " + path);

    const size_t stride = static_cast<size_t>(width) * channels;
    std::vector<uint8_t> raw((stride + 1) * height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || raw_len != raw.size())
        throw std::runtime_error("read_png: inflate failed for " + path);

    ImageU8 img(height, width, channels);
    const int bpp = channels; // bytes per pixel at depth 8
    std::vector<uint8_t> prev(stride, 0);
    for (int r = 0; r < height; ++r) {
        const uint8_t* src = raw.data() + static_cast<size_t>(r) * (stride + 1);
        uint8_t filter = src[0];
        uint8_t* dst = img.pixels.data() + static_cast<size_t>(r) * stride;
        for (size_t i = 0; i < stride; ++i) {
            int x = src[1 + i];
            int a = (i >= static_cast<size_t>(bpp)) ? dst[i - bpp] : 0;
            int b = prev[i];
            int c = (i >= static_cast<size_t>(bpp)) ? prev[i - bpp] : 0;
            switch (filter) {
                case 0: break;
                case 1: x += a; break;
                case 2: x += b; break;
                case 3: x += (a + b) / 2; break;
                case 4: x += paeth(a, b, c); break;
                default: throw std::runtime_error("read_png: bad row filter");
            }
            dst[i] = static_cast<uint8_t>(x & 0xFF);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return img;
}

} // namespace texseg
