#pragma once

#include <cmath>
#include <cstddef>

#include "hal/tensor.hpp"

namespace hal::ops {

namespace detail {
// Row-major C[m x n] = A[m x k] * B[k x n], BLAS-backed. Defined in gemm.cpp.
void gemm(std::size_t m, std::size_t n, std::size_t k,
          const float* a, const float* b, float* c);
void gemm(std::size_t m, std::size_t n, std::size_t k,
          const double* a, const double* b, double* c);
// C = A * B^T where B is [n x k]
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const float* a, const float* b, float* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c);
// C = A^T * B where A is [k x m]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const float* a, const float* b, float* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c);
// Reusable per-thread scratch buffers for the conv GEMM path. Contents are
// always fully overwritten by the caller, so no clearing between uses.
template <typename T>
T* scratch(int slot, std::size_t n) {
    static thread_local std::vector<T> bufs[3];
    auto& b = bufs[slot];
    if (b.size() < n) b.resize(n);
    return b.data();
}
}  // namespace detail

/// Plain matrix product with 64-bit accumulation regardless of T.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimensionError("matmul: both operands must be rank 2");
    if (a.shape[1] != b.shape[0])
        throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape) +
                             " vs " + shape_str(b.shape));
    std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                acc += static_cast<double>(a.data[i * k + p]) *
                       static_cast<double>(b.data[p * n + j]);
            c.data[i * n + j] = static_cast<T>(acc);
        }
    }
    return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    if (a.rank() != 2) throw DimensionError("transpose: rank 2 required");
    Tensor<T> out({a.shape[1], a.shape[0]});
    for (std::size_t i = 0; i < a.shape[0]; ++i)
        for (std::size_t j = 0; j < a.shape[1]; ++j)
            out.at(j, i) = a.at(i, j);
    return out;
}

/// Sum over one axis; output drops that axis. 64-bit accumulation.
template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, std::size_t axis) {
    if (axis >= a.rank()) throw DimensionError("reduce_sum: axis out of range");
    std::size_t outer = 1, mid = a.shape[axis], inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= a.shape[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) inner *= a.shape[i];
    std::vector<std::size_t> oshape;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (i != axis) oshape.push_back(a.shape[i]);
    if (oshape.empty()) oshape.push_back(1);
    Tensor<T> out(oshape);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
            double acc = 0.0;
            for (std::size_t m = 0; m < mid; ++m)
                acc += static_cast<double>(a.data[(o * mid + m) * inner + in]);
            out.data[o * inner + in] = static_cast<T>(acc);
        }
    return out;
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& a, F f) {
    Tensor<T> out = a;
    for (auto& v : out.data) v = f(v);
    return out;
}

template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F f) {
    if (!a.same_shape(b))
        throw DimensionError("elementwise: shape mismatch " + shape_str(a.shape) +
                             " vs " + shape_str(b.shape));
    Tensor<T> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = f(a.data[i], b.data[i]);
    return out;
}

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return zip(a, b, [](T x, T y) { return x + y; });
}
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return zip(a, b, [](T x, T y) { return x - y; });
}
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return zip(a, b, [](T x, T y) { return x * y; });
}
template <typename T> Tensor<T> abs(const Tensor<T>& a) {
    return map(a, [](T x) { return x < T{0} ? -x : x; });
}
template <typename T> Tensor<T> sign(const Tensor<T>& a) {
    return map(a, [](T x) { return x > T{0} ? T{1} : (x < T{0} ? T{-1} : T{0}); });
}
template <typename T> Tensor<T> relu(const Tensor<T>& a) {
    return map(a, [](T x) { return x > T{0} ? x : T{0}; });
}
template <typename T> Tensor<T> exp(const Tensor<T>& a) {
    return map(a, [](T x) { return std::exp(x); });
}
template <typename T> Tensor<T> log(const Tensor<T>& a) {
    return map(a, [](T x) { return std::log(x); });
}
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s) {
    return map(a, [s](T x) { return x * s; });
}

/// Multiply each row of a rank-2 tensor by a per-row scalar [rows x 1].
template <typename T>
Tensor<T> scale_rows(const Tensor<T>& a, const Tensor<T>& s) {
    if (a.rank() != 2 || s.rank() != 2 || s.shape[1] != 1 || s.shape[0] != a.shape[0])
        throw DimensionError("scale_rows: need [r x c] and [r x 1]");
    Tensor<T> out = a;
    for (std::size_t i = 0; i < a.shape[0]; ++i)
        for (std::size_t j = 0; j < a.shape[1]; ++j)
            out.at(i, j) = a.at(i, j) * s.data[i];
    return out;
}

/// Zero-pad the two spatial axes of a [b x c x h x w] tensor.
template <typename T>
Tensor<T> pad2d(const Tensor<T>& x, std::size_t p) {
    if (x.rank() != 4) throw DimensionError("pad2d: rank 4 required");
    std::size_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    Tensor<T> out({b, c, h + 2 * p, w + 2 * p});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < h; ++i)
                for (std::size_t j = 0; j < w; ++j)
                    out.at(n, ch, i + p, j + p) = x.at(n, ch, i, j);
    return out;
}

/// Crop a [b x c x h x w] tensor to (oh, ow) starting at (top, left).
template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, std::size_t top, std::size_t left,
                 std::size_t oh, std::size_t ow) {
    if (x.rank() != 4) throw DimensionError("crop2d: rank 4 required");
    if (top + oh > x.shape[2] || left + ow > x.shape[3])
        throw DimensionError("crop2d: window out of bounds");
    Tensor<T> out({x.shape[0], x.shape[1], oh, ow});
    for (std::size_t n = 0; n < x.shape[0]; ++n)
        for (std::size_t ch = 0; ch < x.shape[1]; ++ch)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j)
                    out.at(n, ch, i, j) = x.at(n, ch, top + i, left + j);
    return out;
}

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride,
                                   std::size_t pad) {
    std::size_t padded = in + 2 * pad;
    if (padded < k) throw DimensionError("conv2d: kernel larger than padded input");
    if ((padded - k) % stride != 0)
        throw DimensionError("conv2d: non-integral output extent");
    return (padded - k) / stride + 1;
}

/// Direct loop-nest cross-correlation, 64-bit accumulation. The reference
/// path; also the test oracle for the GEMM path.
template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& input, const Tensor<T>& kernel,
                        std::size_t stride, std::size_t pad) {
    if (input.rank() != 4 || kernel.rank() != 4)
        throw DimensionError("conv2d: rank 4 input and kernel required");
    if (input.shape[1] != kernel.shape[1])
        throw DimensionError("conv2d: channel mismatch");
    std::size_t b = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
    std::size_t f = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
    std::size_t oh = conv_out_extent(h, kh, stride, pad);
    std::size_t ow = conv_out_extent(w, kw, stride, pad);
    Tensor<T> out({b, f, oh, ow});
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t fo = 0; fo < f; ++fo)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (std::size_t ch = 0; ch < c; ++ch)
                        for (std::size_t ky = 0; ky < kh; ++ky)
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                    static_cast<std::ptrdiff_t>(pad);
                                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                                    ix >= static_cast<std::ptrdiff_t>(w))
                                    continue;
                                acc += static_cast<double>(input.at(n, ch, iy, ix)) *
                                       static_cast<double>(kernel.at(fo, ch, ky, kx));
                            }
                    out.at(n, fo, oy, ox) = static_cast<T>(acc);
                }
    return out;
}

/// im2col over the whole batch into a caller-owned buffer of
/// b*oh*ow rows by c*kh*kw columns; every element is written.
template <typename T>
void im2col_into(const Tensor<T>& input, std::size_t kh, std::size_t kw,
                 std::size_t stride, std::size_t pad, T* cp) {
    std::size_t b = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
    std::size_t oh = conv_out_extent(h, kh, stride, pad);
    std::size_t ow = conv_out_extent(w, kw, stride, pad);
    const T* in = input.data.data();
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                T* row = cp + ((n * oh + oy) * ow + ox) * c * kh * kw;
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                            static_cast<std::ptrdiff_t>(pad);
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                static_cast<std::ptrdiff_t>(pad);
                            T v = T{0};
                            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                ix < static_cast<std::ptrdiff_t>(w))
                                v = in[((n * c + ch) * h + iy) * w + ix];
                            row[(ch * kh + ky) * kw + kx] = v;
                        }
                    }
            }
}

/// im2col over the whole batch: rows = b*oh*ow, cols = c*kh*kw.
template <typename T>
Tensor<T> im2col(const Tensor<T>& input, std::size_t kh, std::size_t kw,
                 std::size_t stride, std::size_t pad) {
    std::size_t oh = conv_out_extent(input.shape[2], kh, stride, pad);
    std::size_t ow = conv_out_extent(input.shape[3], kw, stride, pad);
    Tensor<T> col({input.shape[0] * oh * ow, input.shape[1] * kh * kw});
    im2col_into(input, kh, kw, stride, pad, col.data.data());
    return col;
}

/// Scatter-add of a column matrix into a zero-initialized image buffer
/// (adjoint of im2col).
template <typename T>
void col2im_into(const T* cp, std::size_t b, std::size_t c, std::size_t h,
                 std::size_t w, std::size_t kh, std::size_t kw, std::size_t stride,
                 std::size_t pad, T* op) {
    std::size_t oh = conv_out_extent(h, kh, stride, pad);
    std::size_t ow = conv_out_extent(w, kw, stride, pad);
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const T* row = cp + ((n * oh + oy) * ow + ox) * c * kh * kw;
                for (std::size_t ch = 0; ch < c; ++ch)
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                            static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                static_cast<std::ptrdiff_t>(pad);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                            op[((n * c + ch) * h + iy) * w + ix] += row[(ch * kh + ky) * kw + kx];
                        }
                    }
            }
}

template <typename T>
Tensor<T> col2im(const Tensor<T>& col, std::size_t b, std::size_t c, std::size_t h,
                 std::size_t w, std::size_t kh, std::size_t kw, std::size_t stride,
                 std::size_t pad) {
    Tensor<T> out({b, c, h, w});
    col2im_into(col.data.data(), b, c, h, w, kh, kw, stride, pad, out.data.data());
    return out;
}

/// Fast conv: im2col + GEMM, then permute [b*oh*ow x f] to [b x f x oh x ow].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride,
                 std::size_t pad) {
    if (input.rank() != 4 || kernel.rank() != 4)
        throw DimensionError("conv2d: rank 4 input and kernel required");
    if (input.shape[1] != kernel.shape[1])
        throw DimensionError("conv2d: channel mismatch");
    std::size_t b = input.shape[0], h = input.shape[2], w = input.shape[3];
    std::size_t f = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
    std::size_t oh = conv_out_extent(h, kh, stride, pad);
    std::size_t ow = conv_out_extent(w, kw, stride, pad);
    std::size_t rows = b * oh * ow, ckk = input.shape[1] * kh * kw;
    T* col = detail::scratch<T>(0, rows * ckk);
    im2col_into(input, kh, kw, stride, pad, col);
    // out_rows[r x f] = col[r x ckk] * kernel[f x ckk]^T
    T* out_rows = detail::scratch<T>(1, rows * f);
    detail::gemm_nt(rows, f, ckk, col, kernel.data.data(), out_rows);
    Tensor<T> out({b, f, oh, ow});
    std::size_t hw = oh * ow;
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
            const T* row = out_rows + (n * hw + p) * f;
            T* op = out.data.data() + n * f * hw + p;
            for (std::size_t fo = 0; fo < f; ++fo) op[fo * hw] = row[fo];
        }
    return out;
}

/// Gradients of conv2d wrt input and kernel given upstream grad [b x f x oh x ow].
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                     const Tensor<T>& grad_out, std::size_t stride, std::size_t pad,
                     Tensor<T>& grad_input, Tensor<T>& grad_kernel) {
    std::size_t b = input.shape[0], c = input.shape[1], h = input.shape[2], w = input.shape[3];
    std::size_t f = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
    std::size_t oh = grad_out.shape[2], ow = grad_out.shape[3];
    std::size_t rows = b * oh * ow, ckk = c * kh * kw;
    // permute grad to [rows x f]
    T* g_rows = detail::scratch<T>(1, rows * f);
    std::size_t hw = oh * ow;
    for (std::size_t n = 0; n < b; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
            const T* gp = grad_out.data.data() + n * f * hw + p;
            T* row = g_rows + (n * hw + p) * f;
            for (std::size_t fo = 0; fo < f; ++fo) row[fo] = gp[fo * hw];
        }
    T* col = detail::scratch<T>(0, rows * ckk);
    im2col_into(input, kh, kw, stride, pad, col);
    // grad_kernel[f x ckk] = g_rows^T * col
    grad_kernel = Tensor<T>({f, c, kh, kw});
    detail::gemm_tn(f, ckk, rows, g_rows, col, grad_kernel.data.data());
    // grad_col[rows x ckk] = g_rows * kernel, reusing the col buffer's slot
    T* grad_col = detail::scratch<T>(2, rows * ckk);
    detail::gemm(rows, ckk, f, g_rows, kernel.data.data(), grad_col);
    grad_input = Tensor<T>({b, c, h, w});
    col2im_into(grad_col, b, c, h, w, kh, kw, stride, pad, grad_input.data.data());
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (T v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

}  // namespace hal::ops
