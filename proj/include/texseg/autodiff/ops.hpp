#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "texseg/autodiff/graph.hpp"

namespace texseg::ad {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<EMat>;
using CMapMat = Eigen::Map<const EMat>;

inline CMapMat as_mat(const Tensor& t, int64_t rows, int64_t cols) {
    return CMapMat(t.data(), rows, cols);
}
inline MapMat as_mat(Tensor& t, int64_t rows, int64_t cols) {
    return MapMat(t.data(), rows, cols);
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
    Var n = make_op(std::move(out), {a, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, b]() {
            if (a->requires_grad) a->ensure_grad().add_scaled(self->grad, 1.0);
            if (b->requires_grad) b->ensure_grad().add_scaled(self->grad, 1.0);
        };
    }
    return n;
}

inline Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
    Var n = make_op(std::move(out), {a, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, b]() {
            if (a->requires_grad) a->ensure_grad().add_scaled(self->grad, 1.0);
            if (b->requires_grad) b->ensure_grad().add_scaled(self->grad, -1.0);
        };
    }
    return n;
}

inline Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
    Var n = make_op(std::move(out), {a, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, b]() {
            if (a->requires_grad) {
                Tensor& ga = a->ensure_grad();
                for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += self->grad[i] * b->value[i];
            }
            if (b->requires_grad) {
                Tensor& gb = b->ensure_grad();
                for (int64_t i = 0; i < gb.numel(); ++i) gb[i] += self->grad[i] * a->value[i];
            }
        };
    }
    return n;
}

inline Var scale(const Var& a, double s) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, s]() { a->ensure_grad().add_scaled(self->grad, s); };
    }
    return n;
}

inline Var add_scalar(const Var& a, double s) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += s;
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() { a->ensure_grad().add_scaled(self->grad, 1.0); };
    }
    return n;
}

inline Var square(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= out[i];
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() {
            Tensor& g = a->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += 2.0 * a->value[i] * self->grad[i];
        };
    }
    return n;
}

// sqrt with a zero guard; gradient is zero where the input is non-positive.
inline Var sqrt_elem(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::sqrt(std::max(out[i], 0.0));
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() {
            Tensor& g = a->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i)
                if (a->value[i] > 0.0) g[i] += 0.5 / std::sqrt(a->value[i]) * self->grad[i];
        };
    }
    return n;
}

inline Var relu(const Var& a) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(out[i], 0.0);
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() {
            Tensor& g = a->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i)
                if (a->value[i] > 0.0) g[i] += self->grad[i];
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

inline Var reshape(const Var& a, std::vector<int64_t> shape) {
    Tensor out = Tensor::from(std::move(shape),
                              std::vector<double>(a->value.data(),
                                                  a->value.data() + a->value.numel()));
    if (out.numel() != a->value.numel()) throw std::invalid_argument("reshape: numel mismatch");
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() {
            Tensor& g = a->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self->grad[i];
        };
    }
    return n;
}

inline Var transpose(const Var& a) {
    const int64_t r = a->value.dim(0), c = a->value.dim(1);
    Tensor out({c, r});
    as_mat(out, c, r) = as_mat(a->value, r, c).transpose();
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, r, c]() {
            as_mat(a->ensure_grad(), r, c) += as_mat(self->grad, c, r).transpose();
        };
    }
    return n;
}

inline Var select_row(const Var& a, int64_t row) {
    const int64_t c = a->value.dim(0), ncol = a->value.dim(1);
    if (row < 0 || row >= c) throw std::out_of_range("select_row");
    Tensor out({1, ncol});
    for (int64_t j = 0; j < ncol; ++j) out[j] = a->value.at2(row, j);
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, row, ncol]() {
            Tensor& g = a->ensure_grad();
            for (int64_t j = 0; j < ncol; ++j) g.at2(row, j) += self->grad[j];
        };
    }
    return n;
}

// Concatenation along dim 0; trailing dimensions must agree.
inline Var concat_dim0(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_dim0: empty");
    std::vector<int64_t> shape = parts[0]->value.shape();
    int64_t inner = parts[0]->value.numel() / std::max<int64_t>(shape[0], 1);
    int64_t total0 = 0;
    for (const auto& p : parts) {
        const auto& s = p->value.shape();
        if (s.size() != shape.size())
            throw std::invalid_argument("concat_dim0: rank mismatch");
        for (size_t i = 1; i < s.size(); ++i)
            if (s[i] != shape[i]) throw std::invalid_argument("concat_dim0: shape mismatch");
        total0 += s[0];
    }
    shape[0] = total0;
    Tensor out(shape);
    int64_t off = 0;
    for (const auto& p : parts) {
        int64_t len = p->value.numel();
        std::copy(p->value.data(), p->value.data() + len, out.data() + off);
        off += len;
    }
    Var n = make_op(std::move(out), parts);
    if (n->requires_grad) {
        Node* self = n.get();
        std::vector<Var> ps = parts;
        n->backward_fn = [self, ps, inner]() {
            (void)inner;
            int64_t off2 = 0;
            for (const auto& p : ps) {
                int64_t len = p->value.numel();
                if (p->requires_grad) {
                    Tensor& g = p->ensure_grad();
                    for (int64_t i = 0; i < len; ++i) g[i] += self->grad[off2 + i];
                }
                off2 += len;
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
    const int64_t p = a->value.dim(0), q = a->value.dim(1), r = b->value.dim(1);
    if (b->value.dim(0) != q) throw std::invalid_argument("matmul: inner dim mismatch");
    Tensor out({p, r});
    as_mat(out, p, r).noalias() = as_mat(a->value, p, q) * as_mat(b->value, q, r);
    Var n = make_op(std::move(out), {a, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, b, p, q, r]() {
            CMapMat g(self->grad.data(), p, r);
            if (a->requires_grad)
                as_mat(a->ensure_grad(), p, q).noalias() +=
                    g * as_mat(b->value, q, r).transpose();
            if (b->requires_grad)
                as_mat(b->ensure_grad(), q, r).noalias() +=
                    as_mat(a->value, p, q).transpose() * g;
        };
    }
    return n;
}

// y = W x + b for vectors; W is (out, in).
inline Var affine(const Var& x, const Var& w, const Var& b) {
    const int64_t out_dim = w->value.dim(0), in_dim = w->value.dim(1);
    if (x->value.numel() != in_dim || b->value.numel() != out_dim)
        throw std::invalid_argument("affine: shape mismatch");
    Tensor out({out_dim});
    for (int64_t i = 0; i < out_dim; ++i) {
        double s = b->value[i];
        const double* wr = w->value.data() + i * in_dim;
        for (int64_t j = 0; j < in_dim; ++j) s += wr[j] * x->value[j];
        out[i] = s;
    }
    Var n = make_op(std::move(out), {x, w, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, x, w, b, out_dim, in_dim]() {
            for (int64_t i = 0; i < out_dim; ++i) {
                double g = self->grad[i];
                if (g == 0.0) continue;
                if (w->requires_grad) {
                    double* gw = w->ensure_grad().data() + i * in_dim;
                    for (int64_t j = 0; j < in_dim; ++j) gw[j] += g * x->value[j];
                }
                if (x->requires_grad) {
                    Tensor& gx = x->ensure_grad();
                    const double* wr = w->value.data() + i * in_dim;
                    for (int64_t j = 0; j < in_dim; ++j) gx[j] += g * wr[j];
                }
                if (b->requires_grad) b->ensure_grad()[i] += g;
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// reductions and broadcasts over (c, n) score maps
// ---------------------------------------------------------------------------

inline Var sum_all(const Var& a) {
    double s = 0.0;
    for (int64_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
    Var n = make_op(Tensor::scalar(s), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a]() {
            a->ensure_grad().add_scaled(Tensor(a->value.shape(), 1.0), self->grad[0]);
        };
    }
    return n;
}

// (c, n) -> (c): per-row sums.
inline Var row_sums(const Var& a) {
    const int64_t c = a->value.dim(0), ncol = a->value.dim(1);
    Tensor out({c});
    for (int64_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j < ncol; ++j) s += a->value.at2(i, j);
        out[i] = s;
    }
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, c, ncol]() {
            Tensor& g = a->ensure_grad();
            for (int64_t i = 0; i < c; ++i)
                for (int64_t j = 0; j < ncol; ++j) g.at2(i, j) += self->grad[i];
        };
    }
    return n;
}

// (c, n) + (c): bias broadcast across columns.
inline Var add_col(const Var& a, const Var& col) {
    const int64_t c = a->value.dim(0), ncol = a->value.dim(1);
    if (col->value.numel() != c) throw std::invalid_argument("add_col: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < c; ++i)
        for (int64_t j = 0; j < ncol; ++j) out.at2(i, j) += col->value[i];
    Var n = make_op(std::move(out), {a, col});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, col, c, ncol]() {
            if (a->requires_grad) a->ensure_grad().add_scaled(self->grad, 1.0);
            if (col->requires_grad) {
                Tensor& g = col->ensure_grad();
                for (int64_t i = 0; i < c; ++i)
                    for (int64_t j = 0; j < ncol; ++j) g[i] += self->grad.at2(i, j);
            }
        };
    }
    return n;
}

// (m, c) with each column j divided by d[j].
inline Var div_columns(const Var& a, const Var& d) {
    const int64_t m = a->value.dim(0), c = a->value.dim(1);
    if (d->value.numel() != c) throw std::invalid_argument("div_columns: shape mismatch");
    Tensor out = a->value;
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < c; ++j) out.at2(i, j) /= d->value[j];
    Var n = make_op(std::move(out), {a, d});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, d, m, c]() {
            for (int64_t j = 0; j < c; ++j) {
                const double dj = d->value[j];
                double acc = 0.0;
                for (int64_t i = 0; i < m; ++i) {
                    const double g = self->grad.at2(i, j);
                    if (a->requires_grad) a->ensure_grad().at2(i, j) += g / dj;
                    acc += g * a->value.at2(i, j);
                }
                if (d->requires_grad) d->ensure_grad()[j] += -acc / (dj * dj);
            }
        };
    }
    return n;
}

// Per-position softmax over the class dimension of a (c, n) map.
inline Var softmax_columns(const Var& a) {
    const int64_t c = a->value.dim(0), ncol = a->value.dim(1);
    Tensor out(a->value.shape());
    for (int64_t j = 0; j < ncol; ++j) {
        double mx = -HUGE_VAL;
        for (int64_t i = 0; i < c; ++i) mx = std::max(mx, a->value.at2(i, j));
        double z = 0.0;
        for (int64_t i = 0; i < c; ++i) z += std::exp(a->value.at2(i, j) - mx);
        for (int64_t i = 0; i < c; ++i) out.at2(i, j) = std::exp(a->value.at2(i, j) - mx) / z;
    }
    Var n = make_op(std::move(out), {a});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, a, c, ncol]() {
            Tensor& g = a->ensure_grad();
            for (int64_t j = 0; j < ncol; ++j) {
                double dot = 0.0;
                for (int64_t i = 0; i < c; ++i)
                    dot += self->value.at2(i, j) * self->grad.at2(i, j);
                for (int64_t i = 0; i < c; ++i)
                    g.at2(i, j) += self->value.at2(i, j) * (self->grad.at2(i, j) - dot);
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// modified cosine similarity (off-diagonal, zero diagonal, zero-norm guard)
// ---------------------------------------------------------------------------

// Input is the Gram matrix G = x x^T of the (c, n) score rows; output is
// X_ij = G_ij / sqrt(G_ii G_jj) off the diagonal and 0 on it.
inline Var gram_to_cosine(const Var& gram) {
    const int64_t c = gram->value.dim(0);
    if (gram->value.dim(1) != c) throw std::invalid_argument("gram_to_cosine: not square");
    constexpr double kGuard = 1e-24; // on the product of squared norms
    Tensor out({c, c});
    for (int64_t i = 0; i < c; ++i) {
        for (int64_t j = 0; j < c; ++j) {
            if (i == j) continue;
            const double denom2 = gram->value.at2(i, i) * gram->value.at2(j, j);
            out.at2(i, j) = denom2 > kGuard ? gram->value.at2(i, j) / std::sqrt(denom2) : 0.0;
        }
    }
    Var n = make_op(std::move(out), {gram});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, gram, c]() {
            Tensor& g = gram->ensure_grad();
            for (int64_t i = 0; i < c; ++i) {
                for (int64_t j = 0; j < c; ++j) {
                    if (i == j) continue;
                    const double go = self->grad.at2(i, j);
                    if (go == 0.0) continue;
                    const double gii = gram->value.at2(i, i);
                    const double gjj = gram->value.at2(j, j);
                    const double denom2 = gii * gjj;
                    if (denom2 <= kGuard) continue;
                    const double inv = 1.0 / std::sqrt(denom2);
                    const double x = self->value.at2(i, j);
                    g.at2(i, j) += go * inv;
                    g.at2(i, i) += go * (-0.5 * x / gii);
                    g.at2(j, j) += go * (-0.5 * x / gjj);
                }
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// convolution (NCHW single sample) via im2col + GEMM
// ---------------------------------------------------------------------------

namespace detail {

inline void im2col(const Tensor& x, int kh, int kw, int stride, int pad, Tensor& col) {
    const int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const int64_t oh = (H + 2 * pad - kh) / stride + 1;
    const int64_t ow = (W + 2 * pad - kw) / stride + 1;
    double* cd = col.data();
    for (int64_t c = 0; c < C; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                for (int64_t y = 0; y < oh; ++y) {
                    const int64_t sy = y * stride + ki - pad;
                    if (sy < 0 || sy >= H) {
                        for (int64_t xo = 0; xo < ow; ++xo) *cd++ = 0.0;
                        continue;
                    }
                    const double* row = x.data() + (c * H + sy) * W;
                    for (int64_t xo = 0; xo < ow; ++xo) {
                        const int64_t sx = xo * stride + kj - pad;
                        *cd++ = (sx >= 0 && sx < W) ? row[sx] : 0.0;
                    }
                }
            }
        }
    }
}

inline void col2im_accum(const Tensor& col, int kh, int kw, int stride, int pad, Tensor& gx) {
    const int64_t C = gx.dim(0), H = gx.dim(1), W = gx.dim(2);
    const int64_t oh = (H + 2 * pad - kh) / stride + 1;
    const int64_t ow = (W + 2 * pad - kw) / stride + 1;
    const double* cd = col.data();
    for (int64_t c = 0; c < C; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                for (int64_t y = 0; y < oh; ++y) {
                    const int64_t sy = y * stride + ki - pad;
                    if (sy < 0 || sy >= H) {
                        cd += ow;
                        continue;
                    }
                    double* row = gx.data() + (c * H + sy) * W;
                    for (int64_t xo = 0; xo < ow; ++xo) {
                        const int64_t sx = xo * stride + kj - pad;
                        if (sx >= 0 && sx < W) row[sx] += cd[xo];
                    }
                    cd += ow;
                }
            }
        }
    }
}

} // namespace detail

// x: (C,H,W), w: (O,C,kh,kw), b: (O) -> (O,oh,ow)
inline Var conv2d(const Var& x, const Var& w, const Var& b, int stride = 1, int pad = 0) {
    const int64_t C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const int64_t O = w->value.dim(0);
    const int kh = static_cast<int>(w->value.dim(2)), kw = static_cast<int>(w->value.dim(3));
    if (w->value.dim(1) != C) throw std::invalid_argument("conv2d: channel mismatch");
    if (b->value.numel() != O) throw std::invalid_argument("conv2d: bias mismatch");
    const int64_t oh = (H + 2 * pad - kh) / stride + 1;
    const int64_t ow = (W + 2 * pad - kw) / stride + 1;
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: output is empty");
    const int64_t K = C * kh * kw, N = oh * ow;

    auto col = std::make_shared<Tensor>(std::vector<int64_t>{K, N});
    detail::im2col(x->value, kh, kw, stride, pad, *col);

    Tensor out({O, oh, ow});
    as_mat(out, O, N).noalias() = as_mat(w->value, O, K) * as_mat(*col, K, N);
    for (int64_t o = 0; o < O; ++o) {
        double* od = out.data() + o * N;
        for (int64_t i = 0; i < N; ++i) od[i] += b->value[o];
    }

    Var n = make_op(std::move(out), {x, w, b});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, x, w, b, col, O, K, N, kh, kw, stride, pad]() {
            CMapMat gy(self->grad.data(), O, N);
            if (w->requires_grad)
                as_mat(w->ensure_grad(), O, K).noalias() += gy * as_mat(*col, K, N).transpose();
            if (b->requires_grad) {
                Tensor& gb = b->ensure_grad();
                for (int64_t o = 0; o < O; ++o) {
                    double s = 0.0;
                    const double* gr = self->grad.data() + o * N;
                    for (int64_t i = 0; i < N; ++i) s += gr[i];
                    gb[o] += s;
                }
            }
            if (x->requires_grad) {
                Tensor gcol({K, N});
                as_mat(gcol, K, N).noalias() = as_mat(w->value, O, K).transpose() * gy;
                detail::col2im_accum(gcol, kh, kw, stride, pad, x->ensure_grad());
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// bilinear resampling (half-pixel-center convention)
// ---------------------------------------------------------------------------

namespace detail {

struct Axis {
    std::vector<int64_t> i0, i1;
    std::vector<double> f;
};

inline Axis resize_axis(int64_t src, int64_t dst) {
    Axis ax;
    ax.i0.resize(dst);
    ax.i1.resize(dst);
    ax.f.resize(dst);
    const double scale = static_cast<double>(src) / static_cast<double>(dst);
    for (int64_t d = 0; d < dst; ++d) {
        double s = (d + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src - 1));
        int64_t lo = static_cast<int64_t>(std::floor(s));
        ax.i0[d] = lo;
        ax.i1[d] = std::min(lo + 1, src - 1);
        ax.f[d] = s - static_cast<double>(lo);
    }
    return ax;
}

} // namespace detail

// (c,h,w) -> (c,oh,ow); used for both logit upsampling and image downsampling.
inline Var bilinear_resize(const Var& x, int64_t oh, int64_t ow) {
    const int64_t C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    auto ay = std::make_shared<detail::Axis>(detail::resize_axis(H, oh));
    auto ax = std::make_shared<detail::Axis>(detail::resize_axis(W, ow));
    Tensor out({C, oh, ow});
    for (int64_t c = 0; c < C; ++c) {
        const double* src = x->value.data() + c * H * W;
        double* dst = out.data() + c * oh * ow;
        for (int64_t r = 0; r < oh; ++r) {
            const int64_t y0 = ay->i0[r], y1 = ay->i1[r];
            const double fy = ay->f[r];
            for (int64_t q = 0; q < ow; ++q) {
                const int64_t x0 = ax->i0[q], x1 = ax->i1[q];
                const double fx = ax->f[q];
                const double v00 = src[y0 * W + x0], v01 = src[y0 * W + x1];
                const double v10 = src[y1 * W + x0], v11 = src[y1 * W + x1];
                dst[r * ow + q] = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                  fy * ((1 - fx) * v10 + fx * v11);
            }
        }
    }
    Var n = make_op(std::move(out), {x});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, x, ay, ax, C, H, W, oh, ow]() {
            Tensor& g = x->ensure_grad();
            for (int64_t c = 0; c < C; ++c) {
                double* gs = g.data() + c * H * W;
                const double* gd = self->grad.data() + c * oh * ow;
                for (int64_t r = 0; r < oh; ++r) {
                    const int64_t y0 = ay->i0[r], y1 = ay->i1[r];
                    const double fy = ay->f[r];
                    for (int64_t q = 0; q < ow; ++q) {
                        const double go = gd[r * ow + q];
                        if (go == 0.0) continue;
                        const int64_t x0 = ax->i0[q], x1 = ax->i1[q];
                        const double fx = ax->f[q];
                        gs[y0 * W + x0] += go * (1 - fy) * (1 - fx);
                        gs[y0 * W + x1] += go * (1 - fy) * fx;
                        gs[y1 * W + x0] += go * fy * (1 - fx);
                        gs[y1 * W + x1] += go * fy * fx;
                    }
                }
            }
        };
    }
    return n;
}

// Crops a continuous rect [x0,x1]x[y0,y1] (image coordinates, pixel (r,c)
// covering [c,c+1)x[r,r+1)) out of a (h,w) map and resizes it to (oh,ow).
inline Var crop_resize(const Var& x, double rx0, double ry0, double rx1, double ry1,
                       int64_t oh, int64_t ow) {
    const int64_t H = x->value.dim(0), W = x->value.dim(1);
    if (!(rx1 > rx0) || !(ry1 > ry0)) throw std::invalid_argument("crop_resize: empty rect");
    struct Taps {
        std::vector<int64_t> r0, r1, c0, c1;
        std::vector<double> fr, fc;
    };
    auto taps = std::make_shared<Taps>();
    taps->r0.resize(oh);
    taps->r1.resize(oh);
    taps->fr.resize(oh);
    taps->c0.resize(ow);
    taps->c1.resize(ow);
    taps->fc.resize(ow);
    for (int64_t r = 0; r < oh; ++r) {
        double sy = ry0 + (r + 0.5) * (ry1 - ry0) / static_cast<double>(oh) - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
        int64_t lo = static_cast<int64_t>(std::floor(sy));
        taps->r0[r] = lo;
        taps->r1[r] = std::min(lo + 1, H - 1);
        taps->fr[r] = sy - static_cast<double>(lo);
    }
    for (int64_t q = 0; q < ow; ++q) {
        double sx = rx0 + (q + 0.5) * (rx1 - rx0) / static_cast<double>(ow) - 0.5;
        sx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
        int64_t lo = static_cast<int64_t>(std::floor(sx));
        taps->c0[q] = lo;
        taps->c1[q] = std::min(lo + 1, W - 1);
        taps->fc[q] = sx - static_cast<double>(lo);
    }
    Tensor out({oh, ow});
    for (int64_t r = 0; r < oh; ++r)
        for (int64_t q = 0; q < ow; ++q) {
            const double fy = taps->fr[r], fx = taps->fc[q];
            const double v00 = x->value.at2(taps->r0[r], taps->c0[q]);
            const double v01 = x->value.at2(taps->r0[r], taps->c1[q]);
            const double v10 = x->value.at2(taps->r1[r], taps->c0[q]);
            const double v11 = x->value.at2(taps->r1[r], taps->c1[q]);
            out.at2(r, q) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                            fy * ((1 - fx) * v10 + fx * v11);
        }
    Var n = make_op(std::move(out), {x});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, x, taps, oh, ow]() {
            Tensor& g = x->ensure_grad();
            for (int64_t r = 0; r < oh; ++r)
                for (int64_t q = 0; q < ow; ++q) {
                    const double go = self->grad.at2(r, q);
                    if (go == 0.0) continue;
                    const double fy = taps->fr[r], fx = taps->fc[q];
                    g.at2(taps->r0[r], taps->c0[q]) += go * (1 - fy) * (1 - fx);
                    g.at2(taps->r0[r], taps->c1[q]) += go * (1 - fy) * fx;
                    g.at2(taps->r1[r], taps->c0[q]) += go * fy * (1 - fx);
                    g.at2(taps->r1[r], taps->c1[q]) += go * fy * fx;
                }
        };
    }
    return n;
}

inline Var global_avg_pool(const Var& x) {
    const int64_t C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    const double inv = 1.0 / static_cast<double>(H * W);
    Tensor out({C});
    for (int64_t c = 0; c < C; ++c) {
        double s = 0.0;
        const double* src = x->value.data() + c * H * W;
        for (int64_t i = 0; i < H * W; ++i) s += src[i];
        out[c] = s * inv;
    }
    Var n = make_op(std::move(out), {x});
    if (n->requires_grad) {
        Node* self = n.get();
        n->backward_fn = [self, x, C, H, W, inv]() {
            Tensor& g = x->ensure_grad();
            for (int64_t c = 0; c < C; ++c) {
                const double gv = self->grad[c] * inv;
                double* gp = g.data() + c * H * W;
                for (int64_t i = 0; i < H * W; ++i) gp[i] += gv;
            }
        };
    }
    return n;
}

// ---------------------------------------------------------------------------
// cross-entropy losses
// ---------------------------------------------------------------------------

constexpr double kProbClipFloor = 1e-7; // prevents -log 0

// pred: (c,n); labels: n class indices; ignore: empty or n bytes (1 = skip).
// input_is_probs selects direct -log p with clipping vs internal log-softmax.
inline Var cross_entropy(const Var& pred, const std::vector<int>& labels,
                         const std::vector<uint8_t>& ignore, bool input_is_probs,
                         bool* degenerate = nullptr) {
    const int64_t c = pred->value.dim(0), ncol = pred->value.dim(1);
    if (static_cast<int64_t>(labels.size()) != ncol)
        throw std::invalid_argument("cross_entropy: label count mismatch");
    if (!ignore.empty() && static_cast<int64_t>(ignore.size()) != ncol)
        throw std::invalid_argument("cross_entropy: ignore mask mismatch");

    int64_t kept = 0;
    double loss = 0.0;
    auto softmax_cache = std::make_shared<std::vector<double>>();
    if (!input_is_probs) softmax_cache->resize(static_cast<size_t>(c * ncol));
    for (int64_t j = 0; j < ncol; ++j) {
        if (!ignore.empty() && ignore[j]) continue;
        ++kept;
        const int lbl = labels[j];
        if (lbl < 0 || lbl >= c) throw std::invalid_argument("cross_entropy: bad label");
        if (input_is_probs) {
            double p = std::clamp(pred->value.at2(lbl, j), kProbClipFloor, 1.0);
            loss += -std::log(p);
        } else {
            double mx = -HUGE_VAL;
            for (int64_t i = 0; i < c; ++i) mx = std::max(mx, pred->value.at2(i, j));
            double z = 0.0;
            for (int64_t i = 0; i < c; ++i) z += std::exp(pred->value.at2(i, j) - mx);
            for (int64_t i = 0; i < c; ++i)
                (*softmax_cache)[static_cast<size_t>(i * ncol + j)] =
                    std::exp(pred->value.at2(i, j) - mx) / z;
            loss += mx + std::log(z) - pred->value.at2(lbl, j);
        }
    }
    if (degenerate) *degenerate = (kept == 0);
    const double inv = kept > 0 ? 1.0 / static_cast<double>(kept) : 0.0;
    Var n = make_op(Tensor::scalar(kept > 0 ? loss * inv : 0.0), {pred});
    if (n->requires_grad && kept > 0) {
        Node* self = n.get();
        auto lbls = std::make_shared<std::vector<int>>(labels);
        auto ign = std::make_shared<std::vector<uint8_t>>(ignore);
        n->backward_fn = [self, pred, lbls, ign, softmax_cache, input_is_probs, c, ncol, inv]() {
            const double g = self->grad[0] * inv;
            Tensor& gp = pred->ensure_grad();
            for (int64_t j = 0; j < ncol; ++j) {
                if (!ign->empty() && (*ign)[j]) continue;
                const int lbl = (*lbls)[j];
                if (input_is_probs) {
                    const double p = pred->value.at2(lbl, j);
                    if (p > kProbClipFloor && p < 1.0) gp.at2(lbl, j) += -g / p;
                } else {
                    for (int64_t i = 0; i < c; ++i) {
                        const double sm = (*softmax_cache)[static_cast<size_t>(i * ncol + j)];
                        gp.at2(i, j) += g * (sm - (i == lbl ? 1.0 : 0.0));
                    }
                }
            }
        };
    }
    return n;
}

// Spatially weighted cross-entropy: sum_j w_j * (-log p_gt) / sum_j w_j.
inline Var weighted_cross_entropy(const Var& pred, const std::vector<int>& labels,
                                  const std::vector<double>& weights, bool input_is_probs,
                                  bool* degenerate = nullptr) {
    const int64_t c = pred->value.dim(0), ncol = pred->value.dim(1);
    if (static_cast<int64_t>(labels.size()) != ncol ||
        static_cast<int64_t>(weights.size()) != ncol)
        throw std::invalid_argument("weighted_cross_entropy: size mismatch");

    double wsum = 0.0, loss = 0.0;
    auto softmax_cache = std::make_shared<std::vector<double>>();
    if (!input_is_probs) softmax_cache->resize(static_cast<size_t>(c * ncol));
    for (int64_t j = 0; j < ncol; ++j) {
        const double w = weights[j];
        if (w < 0.0) throw std::invalid_argument("weighted_cross_entropy: negative weight");
        wsum += w;
        const int lbl = labels[j];
        if (lbl < 0 || lbl >= c) throw std::invalid_argument("weighted_cross_entropy: bad label");
        if (input_is_probs) {
            if (w > 0.0) {
                double p = std::clamp(pred->value.at2(lbl, j), kProbClipFloor, 1.0);
                loss += w * -std::log(p);
            }
        } else {
            double mx = -HUGE_VAL;
            for (int64_t i = 0; i < c; ++i) mx = std::max(mx, pred->value.at2(i, j));
            double z = 0.0;
            for (int64_t i = 0; i < c; ++i) z += std::exp(pred->value.at2(i, j) - mx);
            for (int64_t i = 0; i < c; ++i)
                (*softmax_cache)[static_cast<size_t>(i * ncol + j)] =
                    std::exp(pred->value.at2(i, j) - mx) / z;
            if (w > 0.0) loss += w * (mx + std::log(z) - pred->value.at2(lbl, j));
        }
    }
    const bool degen = !(wsum > 0.0);
    if (degenerate) *degenerate = degen;
    const double inv = degen ? 0.0 : 1.0 / wsum;
    Var n = make_op(Tensor::scalar(degen ? 0.0 : loss * inv), {pred});
    if (n->requires_grad && !degen) {
        Node* self = n.get();
        auto lbls = std::make_shared<std::vector<int>>(labels);
        auto ws = std::make_shared<std::vector<double>>(weights);
        n->backward_fn = [self, pred, lbls, ws, softmax_cache, input_is_probs, c, ncol, inv]() {
            const double g = self->grad[0] * inv;
            Tensor& gp = pred->ensure_grad();
            for (int64_t j = 0; j < ncol; ++j) {
                const double w = (*ws)[j];
                if (w == 0.0) continue;
                const int lbl = (*lbls)[j];
                if (input_is_probs) {
                    const double p = pred->value.at2(lbl, j);
                    if (p > kProbClipFloor && p < 1.0) gp.at2(lbl, j) += -g * w / p;
                } else {
                    for (int64_t i = 0; i < c; ++i) {
                        const double sm = (*softmax_cache)[static_cast<size_t>(i * ncol + j)];
                        gp.at2(i, j) += g * w * (sm - (i == lbl ? 1.0 : 0.0));
                    }
                }
            }
        };
    }
    return n;
}

} // namespace texseg::ad
