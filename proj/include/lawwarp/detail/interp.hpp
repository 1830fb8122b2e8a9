#pragma once

#include <algorithm>
#include <cmath>

#include "lawwarp/types.hpp"

// Internal bilinear kernels shared by the 32-bit public path and the
// 64-bit gradient path. All arithmetic is double; only the store
// narrows.

namespace lawwarp::detail {

/// Normalized coordinate -> pixel-space source index, aligned corners:
/// -1 maps to 0 and +1 maps to extent-1.
inline double to_pixel(double coord, int extent) {
    return (coord + 1.0) * 0.5 * (extent - 1);
}

inline double from_pixel(double pixel, int extent) {
    return pixel * (2.0 / (extent - 1)) - 1.0;
}

/// Bilinear fetch at pixel-space coordinates with border clamp.
template <typename T>
inline double fetch_bilinear(const T* plane, int h, int w, double ix, double iy) {
    const double cx = std::clamp(ix, 0.0, static_cast<double>(w - 1));
    const double cy = std::clamp(iy, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double v00 = plane[static_cast<size_t>(y0) * w + x0];
    const double v01 = plane[static_cast<size_t>(y0) * w + x1];
    const double v10 = plane[static_cast<size_t>(y1) * w + x0];
    const double v11 = plane[static_cast<size_t>(y1) * w + x1];
    const double top = v00 + fx * (v01 - v00);
    const double bot = v10 + fx * (v11 - v10);
    return top + fy * (bot - top);
}

/// Samples one plane over the given output rows of a normalized grid.
template <typename TSrc, typename TDst>
inline void sample_plane_rows(const TSrc* src, int h, int w, const double* grid, int out_w,
                              int row_begin, int row_end, TDst* dst) {
    for (int r = row_begin; r < row_end; ++r) {
        const double* g = grid + 2 * static_cast<size_t>(r) * out_w;
        TDst* out = dst + static_cast<size_t>(r) * out_w;
        for (int c = 0; c < out_w; ++c) {
            const double ix = to_pixel(g[2 * c], w);
            const double iy = to_pixel(g[2 * c + 1], h);
            out[c] = static_cast<TDst>(fetch_bilinear(src, h, w, ix, iy));
        }
    }
}

/// Aligned-corners bilinear upscale of an interleaved 2-vector grid.
/// Exact pass-through when dimensions match.
void upscale_vec2(const double* src, int src_h, int src_w, double* dst, int dst_h, int dst_w);

/// Adjoint of upscale_vec2: scatters fine-grid cotangents back onto the
/// coarse grid. coarse_grad must be zero-initialized by the caller.
void upscale_vec2_adjoint(const double* fine_grad, int dst_h, int dst_w, double* coarse_grad,
                          int src_h, int src_w);

}  // namespace lawwarp::detail
