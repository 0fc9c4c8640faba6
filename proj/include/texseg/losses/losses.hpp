#pragma once

#include <cmath>
#include <vector>

#include "texseg/autodiff/ops.hpp"
#include "texseg/core/grid.hpp"

namespace texseg::loss {

struct LossWeights {
    double alpha = 0.5; // refined prediction
    double beta = 0.5;  // trimap
    double gamma = 0.1; // glyph discriminator
};

struct LossToggles {
    bool attention = true;
    bool trimap = true;
    bool discriminator = true;
};

struct LossReport {
    double total = 0.0;
    double l_sem = 0.0;
    double l_rfn = 0.0;
    double l_tri = 0.0;
    double l_dis = 0.0;
    bool finite = true;
};

// total = L_sem + alpha L_rfn + beta L_tri + gamma L_dis; disabled components
// must already be zero at the call site.
inline LossReport total_loss(double l_sem, double l_rfn, double l_tri, double l_dis,
                             const LossWeights& w) {
    LossReport rep;
    rep.l_sem = l_sem;
    rep.l_rfn = l_rfn;
    rep.l_tri = l_tri;
    rep.l_dis = l_dis;
    rep.total = l_sem + w.alpha * l_rfn + w.beta * l_tri + w.gamma * l_dis;
    rep.finite = std::isfinite(rep.total);
    return rep;
}

// Binary boundary band: dilate(gt, r) XOR erode(gt, r) with a (2r+1)^2 square
// structuring element, i.e. pixels within Chebyshev distance r of the
// foreground/background boundary. Constant masks yield an empty band.
inline MaskGrid make_trimap(const MaskGrid& gt, int r) {
    if (r < 1) throw std::invalid_argument("make_trimap: radius must be >= 1");
    const int h = gt.height(), w = gt.width();
    MaskGrid out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool any_fg = false, any_bg = false;
            const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
            const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            for (int yy = y0; yy <= y1 && !(any_fg && any_bg); ++yy)
                for (int xx = x0; xx <= x1; ++xx) {
                    if (gt.at(yy, xx))
                        any_fg = true;
                    else
                        any_bg = true;
                    if (any_fg && any_bg) break;
                }
            out.at(y, x) = (any_fg && any_bg) ? 1 : 0;
        }
    }
    return out;
}

// Label/ignore plumbing between mask grids and the (c,n) loss ops.

inline std::vector<int> labels_from_mask(const MaskGrid& m) {
    std::vector<int> out(static_cast<size_t>(m.numel()));
    for (int64_t i = 0; i < m.numel(); ++i) out[static_cast<size_t>(i)] = m.data()[i] ? 1 : 0;
    return out;
}

inline std::vector<uint8_t> ignore_from_mask(const MaskGrid& m) {
    std::vector<uint8_t> out(static_cast<size_t>(m.numel()));
    for (int64_t i = 0; i < m.numel(); ++i) out[static_cast<size_t>(i)] = m.data()[i] ? 1 : 0;
    return out;
}

// Nearest-neighbor downsample (half-pixel centers), used to bring ground
// truth to feature resolution for the initial-prediction loss.
inline MaskGrid downsample_mask_nearest(const MaskGrid& m, int oh, int ow) {
    MaskGrid out(oh, ow);
    for (int r = 0; r < oh; ++r) {
        const int sr = std::min(m.height() - 1,
                                static_cast<int>((r + 0.5) * m.height() / oh));
        for (int c = 0; c < ow; ++c) {
            const int sc = std::min(m.width() - 1,
                                    static_cast<int>((c + 0.5) * m.width() / ow));
            out.at(r, c) = m.at(sr, sc);
        }
    }
    return out;
}

// Trimap weights masked by the ignore region.
inline std::vector<double> trimap_weights(const MaskGrid& band, const MaskGrid& ignore) {
    std::vector<double> w(static_cast<size_t>(band.numel()));
    for (int64_t i = 0; i < band.numel(); ++i)
        w[static_cast<size_t>(i)] =
            (band.data()[i] && !(ignore.numel() == band.numel() && ignore.data()[i])) ? 1.0
                                                                                      : 0.0;
    return w;
}

} // namespace texseg::loss
