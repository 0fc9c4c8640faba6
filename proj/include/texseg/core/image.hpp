#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "texseg/core/grid.hpp"
#include "texseg/core/tensor.hpp"

namespace texseg {

// 8-bit image, row-major HWC.
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int h, int w, int c, uint8_t fill = 0)
        : height(h), width(w), channels(c),
          pixels(static_cast<size_t>(h) * w * c, fill) {}

    uint8_t& at(int r, int c, int ch) {
        return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
    uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
    }

    bool operator==(const ImageU8& o) const {
        return height == o.height && width == o.width && channels == o.channels &&
               pixels == o.pixels;
    }
};

// (3,H,W) tensor in [0,1] from an RGB image.
inline Tensor image_to_tensor(const ImageU8& img) {
    if (img.channels != 3) throw std::invalid_argument("image_to_tensor: expected RGB");
    Tensor t({3, img.height, img.width});
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c)
                t.at3(ch, r, c) = img.at(r, c, ch) / 255.0;
    return t;
}

inline ImageU8 mask_to_image(const MaskGrid& m, uint8_t scale = 1) {
    ImageU8 img(m.height(), m.width(), 1);
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c)
            img.at(r, c, 0) = static_cast<uint8_t>(m.at(r, c) * scale);
    return img;
}

inline MaskGrid image_to_mask(const ImageU8& img, uint8_t divisor = 1) {
    if (img.channels != 1) throw std::invalid_argument("image_to_mask: expected single channel");
    MaskGrid m(img.height, img.width);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            m.at(r, c) = static_cast<uint8_t>(img.at(r, c, 0) / divisor);
    return m;
}

inline ImageU8 hflip(const ImageU8& img) {
    ImageU8 out(img.height, img.width, img.channels);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
    return out;
}

inline ImageU8 crop(const ImageU8& img, int r0, int c0, int h, int w) {
    ImageU8 out(h, w, img.channels);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = img.at(r0 + r, c0 + c, ch);
    return out;
}

template <typename T>
inline Grid<T> crop(const Grid<T>& g, int r0, int c0, int h, int w) {
    Grid<T> out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out.at(r, c) = g.at(r0 + r, c0 + c);
    return out;
}

} // namespace texseg
