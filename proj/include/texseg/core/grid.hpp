#pragma once

#include <cstdint>
#include <vector>

namespace texseg {

// 2-d row-major grid, used for masks and weight maps.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : h_(height), w_(width), cells_(static_cast<size_t>(height) * width, fill) {}

    int height() const { return h_; }
    int width() const { return w_; }
    int64_t numel() const { return static_cast<int64_t>(cells_.size()); }

    T& at(int r, int c) { return cells_[static_cast<size_t>(r) * w_ + c]; }
    T at(int r, int c) const { return cells_[static_cast<size_t>(r) * w_ + c]; }

    T* data() { return cells_.data(); }
    const T* data() const { return cells_.data(); }

    bool same_shape(const Grid& o) const { return h_ == o.h_ && w_ == o.w_; }

    bool operator==(const Grid& o) const {
        return h_ == o.h_ && w_ == o.w_ && cells_ == o.cells_;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

    int64_t count_nonzero() const {
        int64_t n = 0;
        for (const T& v : cells_)
            if (v != T{}) ++n;
        return n;
    }

    Grid hflip() const {
        Grid out(h_, w_);
        for (int r = 0; r < h_; ++r)
            for (int c = 0; c < w_; ++c) out.at(r, c) = at(r, w_ - 1 - c);
        return out;
    }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<T> cells_;
};

using MaskGrid = Grid<uint8_t>;

} // namespace texseg
