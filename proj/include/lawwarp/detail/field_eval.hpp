#pragma once

#include <cmath>
#include <span>

#include "lawwarp/types.hpp"

// Unchecked displacement evaluation, shared by the public entry points
// and the grid/gradient loops. Callers validate the keypoints once.

namespace lawwarp::detail {

inline double gaussian_raw(Point2 p, Point2 k, double rho) {
    const double dx = p.x - k.x;
    const double dy = p.y - k.y;
    return std::exp(-rho * (dx * dx + dy * dy));
}

/// Composite displacement, single fused pass. The N == 1 branch skips
/// the softmax quotient so the weight is exactly one, which keeps
/// displacement_at(k) == t bit-exact for a lone keypoint.
inline Vec2 displacement_raw(Point2 p, std::span<const KeypointWarp> kws) {
    if (kws.size() == 1) {
        const KeypointWarp& kw = kws[0];
        const double dx = p.x - kw.k.x;
        const double dy = p.y - kw.k.y;
        const double g = std::exp(-kw.rho * (dx * dx + dy * dy));
        const double c = std::cos(kw.theta), s = std::sin(kw.theta);
        const double disp_x = (kw.sx * c - 1.0) * dx + (-kw.sx * s) * dy + kw.tx;
        const double disp_y = (kw.sy * s) * dx + (kw.sy * c - 1.0) * dy + kw.ty;
        return {g * disp_x, g * disp_y};
    }
    double esum = 0.0, num_x = 0.0, num_y = 0.0;
    for (const KeypointWarp& kw : kws) {
        const double dx = p.x - kw.k.x;
        const double dy = p.y - kw.k.y;
        const double g = std::exp(-kw.rho * (dx * dx + dy * dy));
        const double e = std::exp(g);
        const double c = std::cos(kw.theta), s = std::sin(kw.theta);
        const double disp_x = (kw.sx * c - 1.0) * dx + (-kw.sx * s) * dy + kw.tx;
        const double disp_y = (kw.sy * s) * dx + (kw.sy * c - 1.0) * dy + kw.ty;
        const double f = e * g;
        esum += e;
        num_x += f * disp_x;
        num_y += f * disp_y;
    }
    return {num_x / esum, num_y / esum};
}

}  // namespace lawwarp::detail
