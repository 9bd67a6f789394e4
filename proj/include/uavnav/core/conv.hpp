#pragma once

#include "uavnav/core/tensor.hpp"

namespace uavnav::ad {

namespace detail {

struct ConvDims {
    int n, c, h, w;       // input
    int o, kh, kw;        // kernel
    int stride, pad;
    int oh, ow;
};

// src[c,h,w] -> cols[c*kh*kw, oh*ow] with zero padding.
inline void im2col(const double* src, const ConvDims& d, double* cols) {
    const int patch = d.oh * d.ow;
    for (int c = 0; c < d.c; ++c)
        for (int ki = 0; ki < d.kh; ++ki)
            for (int kj = 0; kj < d.kw; ++kj) {
                double* row = cols + (static_cast<std::size_t>(c) * d.kh * d.kw + ki * d.kw + kj) * patch;
                for (int oi = 0; oi < d.oh; ++oi) {
                    const int si = oi * d.stride - d.pad + ki;
                    if (si < 0 || si >= d.h) {
                        std::fill_n(row + static_cast<std::size_t>(oi) * d.ow, d.ow, 0.0);
                        continue;
                    }
                    const double* s = src + (static_cast<std::size_t>(c) * d.h + si) * d.w;
                    double* r = row + static_cast<std::size_t>(oi) * d.ow;
                    for (int oj = 0; oj < d.ow; ++oj) {
                        const int sj = oj * d.stride - d.pad + kj;
                        r[oj] = (sj < 0 || sj >= d.w) ? 0.0 : s[sj];
                    }
                }
            }
}

// Adjoint of im2col: scatter-add cols back into dst[c,h,w].
inline void col2im_acc(const double* cols, const ConvDims& d, double* dst) {
    const int patch = d.oh * d.ow;
    for (int c = 0; c < d.c; ++c)
        for (int ki = 0; ki < d.kh; ++ki)
            for (int kj = 0; kj < d.kw; ++kj) {
                const double* row =
                    cols + (static_cast<std::size_t>(c) * d.kh * d.kw + ki * d.kw + kj) * patch;
                for (int oi = 0; oi < d.oh; ++oi) {
                    const int si = oi * d.stride - d.pad + ki;
                    if (si < 0 || si >= d.h) continue;
                    double* s = dst + (static_cast<std::size_t>(c) * d.h + si) * d.w;
                    const double* r = row + static_cast<std::size_t>(oi) * d.ow;
                    for (int oj = 0; oj < d.ow; ++oj) {
                        const int sj = oj * d.stride - d.pad + kj;
                        if (sj >= 0 && sj < d.w) s[sj] += r[oj];
                    }
                }
            }
}

}  // namespace detail

// x [N,C,H,W], w [O,C,kh,kw], optional bias [O]; zero padding, stride >= 1.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad) {
    if (x.shape().size() != 4 || w.shape().size() != 4 || x.shape()[1] != w.shape()[1])
        throw DimensionError("conv2d: incompatible shapes " + shape_str(x.shape()) + " vs " +
                             shape_str(w.shape()));
    if (stride < 1 || pad < 0) throw ParameterError("conv2d: stride must be >= 1, pad >= 0");
    detail::ConvDims d;
    d.n = x.shape()[0];
    d.c = x.shape()[1];
    d.h = x.shape()[2];
    d.w = x.shape()[3];
    d.o = w.shape()[0];
    d.kh = w.shape()[2];
    d.kw = w.shape()[3];
    d.stride = stride;
    d.pad = pad;
    d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
    d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
    if (d.oh < 1 || d.ow < 1)
        throw DimensionError("conv2d: kernel " + shape_str(w.shape()) + " larger than padded input " +
                             shape_str(x.shape()));
    const bool has_bias = bias.defined();
    if (has_bias && (bias.shape().size() != 1 || bias.shape()[0] != d.o))
        throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()) + " vs channels [" +
                             std::to_string(d.o) + "]");

    auto out = detail::alloc({d.n, d.o, d.oh, d.ow});
    const int krows = d.c * d.kh * d.kw;
    const int patch = d.oh * d.ow;
    std::vector<double> cols(static_cast<std::size_t>(krows) * patch);
    const std::size_t in_sz = static_cast<std::size_t>(d.c) * d.h * d.w;
    const std::size_t out_sz = static_cast<std::size_t>(d.o) * patch;
    for (int n = 0; n < d.n; ++n) {
        detail::im2col(x.values().data() + n * in_sz, d, cols.data());
        double* dst = out->value.data() + n * out_sz;
        std::fill_n(dst, out_sz, 0.0);
        detail::gemm_acc(w.values().data(), cols.data(), dst, d.o, krows, patch);
        if (has_bias)
            for (int o = 0; o < d.o; ++o) {
                const double b = bias.values()[o];
                double* row = dst + static_cast<std::size_t>(o) * patch;
                for (int i = 0; i < patch; ++i) row[i] += b;
            }
    }

    Node* on = out.get();
    Node* px = x.raw();
    Node* pw = w.raw();
    Node* pb = has_bias ? bias.raw() : nullptr;
    auto backprop = [on, px, pw, pb, d, krows, patch, in_sz, out_sz]() {
        std::vector<double> cols(static_cast<std::size_t>(krows) * patch);
        for (int n = 0; n < d.n; ++n) {
            const double* g = on->grad.data() + n * out_sz;
            if (pw->requires_grad || pb) {
                if (pw->requires_grad) {
                    pw->ensure_grad();
                    detail::im2col(px->value.data() + n * in_sz, d, cols.data());
                    detail::gemm_a_bt(g, cols.data(), pw->grad.data(), d.o, patch, krows);
                }
                if (pb && pb->requires_grad) {
                    pb->ensure_grad();
                    for (int o = 0; o < d.o; ++o) {
                        double s = 0.0;
                        const double* row = g + static_cast<std::size_t>(o) * patch;
                        for (int i = 0; i < patch; ++i) s += row[i];
                        pb->grad[o] += s;
                    }
                }
            }
            if (px->requires_grad) {
                px->ensure_grad();
                std::fill(cols.begin(), cols.end(), 0.0);
                detail::gemm_at_b(pw->value.data(), g, cols.data(), d.o, krows, patch);
                detail::col2im_acc(cols.data(), d, px->grad.data() + n * in_sz);
            }
        }
    };
    if (has_bias) return detail::finish(std::move(out), {x, w, bias}, backprop);
    return detail::finish(std::move(out), {x, w}, backprop);
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
    return conv2d(x, w, Tensor(), stride, pad);
}

// x [N,Ci,H,W], w [Ci,Co,kh,kw], optional bias [Co]; output (H-1)*s - 2p + kh.
inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
                               int pad) {
    if (x.shape().size() != 4 || w.shape().size() != 4 || x.shape()[1] != w.shape()[0])
        throw DimensionError("conv_transpose2d: incompatible shapes " + shape_str(x.shape()) +
                             " vs " + shape_str(w.shape()));
    if (stride < 1 || pad < 0) throw ParameterError("conv_transpose2d: stride must be >= 1, pad >= 0");
    const int n = x.shape()[0], ci = x.shape()[1], h = x.shape()[2], wd = x.shape()[3];
    const int co = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
    const int oh = (h - 1) * stride - 2 * pad + kh;
    const int ow = (wd - 1) * stride - 2 * pad + kw;
    if (oh < 1 || ow < 1) throw DimensionError("conv_transpose2d: empty output");
    const bool has_bias = bias.defined();
    if (has_bias && (bias.shape().size() != 1 || bias.shape()[0] != co))
        throw DimensionError("conv_transpose2d: bias shape " + shape_str(bias.shape()) +
                             " vs channels [" + std::to_string(co) + "]");

    // The forward pass is the adjoint of conv2d(out -> in), so reuse its
    // geometry with (oh, ow) as the "input" side.
    detail::ConvDims d;
    d.n = n;
    d.c = co;
    d.h = oh;
    d.w = ow;
    d.o = ci;
    d.kh = kh;
    d.kw = kw;
    d.stride = stride;
    d.pad = pad;
    d.oh = h;
    d.ow = wd;

    auto out = detail::alloc({n, co, oh, ow});
    const int krows = co * kh * kw;
    const int patch = h * wd;
    const std::size_t in_sz = static_cast<std::size_t>(ci) * patch;
    const std::size_t out_sz = static_cast<std::size_t>(co) * oh * ow;
    std::vector<double> cols(static_cast<std::size_t>(krows) * patch);
    for (int s = 0; s < n; ++s) {
        std::fill(cols.begin(), cols.end(), 0.0);
        // cols = w^T [krows, ci] * x_s [ci, patch]
        detail::gemm_at_b(w.values().data(), x.values().data() + s * in_sz, cols.data(), ci, krows,
                          patch);
        double* dst = out->value.data() + s * out_sz;
        std::fill_n(dst, out_sz, 0.0);
        detail::col2im_acc(cols.data(), d, dst);
        if (has_bias)
            for (int o = 0; o < co; ++o) {
                const double b = bias.values()[o];
                double* row = dst + static_cast<std::size_t>(o) * oh * ow;
                for (int i = 0; i < oh * ow; ++i) row[i] += b;
            }
    }

    Node* on = out.get();
    Node* px = x.raw();
    Node* pw = w.raw();
    Node* pb = has_bias ? bias.raw() : nullptr;
    auto backprop = [on, px, pw, pb, d, n, ci, co, krows, patch, in_sz, out_sz, oh, ow]() {
        std::vector<double> cols(static_cast<std::size_t>(krows) * patch);
        for (int s = 0; s < n; ++s) {
            const double* g = on->grad.data() + s * out_sz;
            detail::im2col(g, d, cols.data());
            if (px->requires_grad) {
                px->ensure_grad();
                // dx = w [ci, krows] * cols
                detail::gemm_acc(pw->value.data(), cols.data(), px->grad.data() + s * in_sz, ci,
                                 krows, patch);
            }
            if (pw->requires_grad) {
                pw->ensure_grad();
                // dw [ci, krows] += x_s [ci, patch] * cols^T
                detail::gemm_a_bt(px->value.data() + s * in_sz, cols.data(), pw->grad.data(), ci,
                                  patch, krows);
            }
            if (pb && pb->requires_grad) {
                pb->ensure_grad();
                for (int o = 0; o < co; ++o) {
                    double sum = 0.0;
                    const double* row = g + static_cast<std::size_t>(o) * oh * ow;
                    for (int i = 0; i < oh * ow; ++i) sum += row[i];
                    pb->grad[o] += sum;
                }
            }
        }
    };
    if (has_bias) return detail::finish(std::move(out), {x, w, bias}, backprop);
    return detail::finish(std::move(out), {x, w}, backprop);
}

inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w, int stride, int pad) {
    return conv_transpose2d(x, w, Tensor(), stride, pad);
}

}  // namespace uavnav::ad
