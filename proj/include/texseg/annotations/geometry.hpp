#pragma once

#include <algorithm>
#include <cmath>

#include "texseg/annotations/types.hpp"
#include "texseg/core/grid.hpp"

namespace texseg::anno {

// Shoelace signed area; positive for clockwise vertex order under the y-down
// image convention.
inline double signed_area(const QuadPolygon& q) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point& a = q.vertices[i];
        const Point& b = q.vertices[(i + 1) % 4];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

// Cross product of (b - a) with (p - a).
inline double edge_cross(const Point& a, const Point& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

inline bool on_segment(const Point& a, const Point& b, double px, double py) {
    if (edge_cross(a, b, px, py) != 0.0) return false;
    return px >= std::min(a.x, b.x) && px <= std::max(a.x, b.x) &&
           py >= std::min(a.y, b.y) && py <= std::max(a.y, b.y);
}

inline int orientation_sign(const Point& a, const Point& b, const Point& p) {
    const double c = edge_cross(a, b, p.x, p.y);
    return c > 0.0 ? 1 : (c < 0.0 ? -1 : 0);
}

inline bool segments_properly_intersect(const Point& a, const Point& b, const Point& c,
                                        const Point& d) {
    const int d1 = orientation_sign(c, d, a);
    const int d2 = orientation_sign(c, d, b);
    const int d3 = orientation_sign(a, b, c);
    const int d4 = orientation_sign(a, b, d);
    return d1 * d2 < 0 && d3 * d4 < 0;
}

// A simple quad can only self-intersect on its two opposite edge pairs.
inline bool quad_self_intersects(const QuadPolygon& q) {
    return segments_properly_intersect(q.vertices[0], q.vertices[1], q.vertices[2],
                                       q.vertices[3]) ||
           segments_properly_intersect(q.vertices[1], q.vertices[2], q.vertices[3],
                                       q.vertices[0]);
}

// Boundary-inclusive even-odd point-in-quad test.
inline bool point_in_quad(const QuadPolygon& q, double px, double py) {
    for (int i = 0; i < 4; ++i)
        if (on_segment(q.vertices[i], q.vertices[(i + 1) % 4], px, py)) return true;
    bool inside = false;
    for (int i = 0; i < 4; ++i) {
        const Point& a = q.vertices[i];
        const Point& b = q.vertices[(i + 1) % 4];
        if ((a.y > py) != (b.y > py)) {
            const double xs = a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x);
            if (px < xs) inside = !inside;
        }
    }
    return inside;
}

struct RasterResult {
    MaskGrid mask;
    bool degenerate = false;
};

// Pixel (r,c) is set iff its center (c+0.5, r+0.5) lies inside the quad,
// boundary included. Degenerate (zero-area) quads yield an empty mask.
inline RasterResult rasterize_quad(const QuadPolygon& q, int h, int w) {
    RasterResult res;
    res.mask = MaskGrid(h, w);
    if (std::abs(signed_area(q)) == 0.0) {
        res.degenerate = true;
        return res;
    }
    double min_x = q.vertices[0].x, max_x = q.vertices[0].x;
    double min_y = q.vertices[0].y, max_y = q.vertices[0].y;
    for (const Point& p : q.vertices) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int r1 = std::min(h - 1, static_cast<int>(std::ceil(max_y)));
    const int c0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int c1 = std::min(w - 1, static_cast<int>(std::ceil(max_x)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            if (point_in_quad(q, c + 0.5, r + 0.5)) res.mask.at(r, c) = 1;
    return res;
}

inline void bounding_box(const QuadPolygon& q, double& x0, double& y0, double& x1, double& y1) {
    x0 = x1 = q.vertices[0].x;
    y0 = y1 = q.vertices[0].y;
    for (const Point& p : q.vertices) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
}

inline double point_segment_distance(const Point& a, const Point& b, const Point& p) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = a.x + t * vx - p.x, dy = a.y + t * vy - p.y;
    return std::sqrt(dx * dx + dy * dy);
}

inline double point_quad_distance(const QuadPolygon& q, const Point& p) {
    if (point_in_quad(q, p.x, p.y)) return 0.0;
    double d = HUGE_VAL;
    for (int i = 0; i < 4; ++i)
        d = std::min(d, point_segment_distance(q.vertices[i], q.vertices[(i + 1) % 4], p));
    return d;
}

} // namespace texseg::anno
