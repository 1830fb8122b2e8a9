#include "lawwarp/frontalize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "lawwarp/detail/interp.hpp"
#include "lawwarp/parallel.hpp"

namespace lawwarp {

namespace {

void check_landmarks(const LandmarkSet& set, const char* what) {
    for (const Point2& p : set.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw std::invalid_argument(std::string(what) + ": non-finite landmark");
        }
    }
}

void check_transform(const SimilarityTransform& t, const char* what) {
    if (!std::isfinite(t.s) || !std::isfinite(t.theta) || !std::isfinite(t.t.x) ||
        !std::isfinite(t.t.y)) {
        throw std::invalid_argument(std::string(what) + ": non-finite transform");
    }
    if (t.s <= 0.0) {
        throw std::invalid_argument(std::string(what) + ": scale must be positive");
    }
}

}  // namespace

SimilarityTransform solve_similarity(const LandmarkSet& m, const LandmarkSet& tmp) {
    const int count = m.count();
    if (count != tmp.count()) {
        throw std::invalid_argument("solve_similarity: landmark count mismatch");
    }
    if (count < 2) {
        throw std::invalid_argument("solve_similarity: at least two landmarks required");
    }
    check_landmarks(m, "solve_similarity");
    check_landmarks(tmp, "solve_similarity");

    Eigen::Vector2d mu_m = Eigen::Vector2d::Zero();
    Eigen::Vector2d mu_t = Eigen::Vector2d::Zero();
    for (int i = 0; i < count; ++i) {
        mu_m += Eigen::Vector2d(m.points[i].x, m.points[i].y);
        mu_t += Eigen::Vector2d(tmp.points[i].x, tmp.points[i].y);
    }
    mu_m /= count;
    mu_t /= count;

    double var_m = 0.0;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int i = 0; i < count; ++i) {
        const Eigen::Vector2d x = Eigen::Vector2d(m.points[i].x, m.points[i].y) - mu_m;
        const Eigen::Vector2d y = Eigen::Vector2d(tmp.points[i].x, tmp.points[i].y) - mu_t;
        var_m += x.squaredNorm();
        cov += y * x.transpose();
    }
    var_m /= count;
    cov /= count;
    if (var_m <= 0.0) {
        throw DegenerateInputError("solve_similarity: source landmarks have zero variance");
    }

    // Umeyama closed form. The diagonal correction keeps the rotation
    // proper even when the unconstrained optimum is a reflection.
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2d u = svd.matrixU();
    const Eigen::Matrix2d v = svd.matrixV();
    const Eigen::Vector2d d = svd.singularValues();
    const double corr = (u.determinant() * v.determinant() < 0.0) ? -1.0 : 1.0;
    const Eigen::Matrix2d rot = u * Eigen::Vector2d(1.0, corr).asDiagonal() * v.transpose();
    const double scale = (d(0) + corr * d(1)) / var_m;
    if (!(scale > 0.0)) {
        throw DegenerateInputError("solve_similarity: landmarks admit no positive scale");
    }

    SimilarityTransform result;
    result.s = scale;
    result.theta = std::atan2(rot(1, 0), rot(0, 0));
    const Eigen::Vector2d t = mu_t - scale * (rot * mu_m);
    result.t = {t(0), t(1)};
    return result;
}

double alignment_residual(const LandmarkSet& m, const LandmarkSet& tmp,
                          const SimilarityTransform& transform) {
    if (m.count() != tmp.count()) {
        throw std::invalid_argument("alignment_residual: landmark count mismatch");
    }
    double residual = 0.0;
    for (int i = 0; i < m.count(); ++i) {
        const Point2 p = transform.apply(m.points[i]);
        const double ex = p.x - tmp.points[i].x;
        const double ey = p.y - tmp.points[i].y;
        residual += ex * ex + ey * ey;
    }
    return residual;
}

SimilarityTransform invert_similarity(const SimilarityTransform& transform) {
    check_transform(transform, "invert_similarity");
    SimilarityTransform inv;
    inv.s = 1.0 / transform.s;
    inv.theta = -transform.theta;
    const double c = std::cos(inv.theta), sn = std::sin(inv.theta);
    inv.t = {-inv.s * (c * transform.t.x - sn * transform.t.y),
             -inv.s * (sn * transform.t.x + c * transform.t.y)};
    return inv;
}

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
    check_transform(outer, "compose");
    check_transform(inner, "compose");
    SimilarityTransform result;
    result.s = outer.s * inner.s;
    result.theta = outer.theta + inner.theta;
    const double c = std::cos(outer.theta), sn = std::sin(outer.theta);
    result.t = {outer.s * (c * inner.t.x - sn * inner.t.y) + outer.t.x,
                outer.s * (sn * inner.t.x + c * inner.t.y) + outer.t.y};
    return result;
}

LandmarkSet apply_to_landmarks(const SimilarityTransform& transform, const LandmarkSet& landmarks) {
    check_transform(transform, "apply_to_landmarks");
    LandmarkSet out;
    out.points.reserve(landmarks.points.size());
    for (const Point2& p : landmarks.points) {
        out.points.push_back(transform.apply(p));
    }
    return out;
}

FeatureMap apply_similarity(const FeatureMap& img, const SimilarityTransform& transform) {
    check_transform(transform, "apply_similarity");
    const SimilarityTransform inv = invert_similarity(transform);
    const double c = std::cos(inv.theta), sn = std::sin(inv.theta);
    FeatureMap out(img.channels(), img.height(), img.width());
    const int h = img.height(), w = img.width();
    parallel::parallel_for(0, static_cast<int64_t>(img.channels()) * h, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            const int ch = static_cast<int>(i / h);
            const int r = static_cast<int>(i % h);
            const float* src = img.plane(ch);
            for (int col = 0; col < w; ++col) {
                const double sx = inv.s * (c * col - sn * r) + inv.t.x;
                const double sy = inv.s * (sn * col + c * r) + inv.t.y;
                out.at(ch, r, col) = static_cast<float>(detail::fetch_bilinear(src, h, w, sx, sy));
            }
        }
    });
    return out;
}

FeatureMap gaussian_soft_mask(int h, int w, const RectF& rect, double sigma) {
    if (h < 2 || w < 2) {
        throw std::invalid_argument("gaussian_soft_mask: dimensions must be at least 2x2");
    }
    if (!std::isfinite(sigma) || sigma <= 0.0) {
        throw std::invalid_argument("gaussian_soft_mask: sigma must be positive");
    }
    if (!std::isfinite(rect.x) || !std::isfinite(rect.y) || !std::isfinite(rect.w) ||
        !std::isfinite(rect.h)) {
        throw std::invalid_argument("gaussian_soft_mask: non-finite rect");
    }
    if (rect.w <= 0.0 || rect.h <= 0.0) {
        throw std::invalid_argument("gaussian_soft_mask: empty rect");
    }
    if (rect.x < 0.0 || rect.y < 0.0 || rect.x + rect.w > w || rect.y + rect.h > h) {
        throw std::invalid_argument("gaussian_soft_mask: rect out of bounds");
    }

    // Truncated, renormalized kernel at integer offsets.
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * static_cast<size_t>(radius) + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        kernel[static_cast<size_t>(i + radius)] = v;
        ksum += v;
    }
    for (double& v : kernel) {
        v /= ksum;
    }

    std::vector<double> indicator(static_cast<size_t>(h) * w, 0.0);
    for (int r = 0; r < h; ++r) {
        if (r < rect.y || r >= rect.y + rect.h) {
            continue;
        }
        for (int c = 0; c < w; ++c) {
            if (c >= rect.x && c < rect.x + rect.w) {
                indicator[static_cast<size_t>(r) * w + c] = 1.0;
            }
        }
    }

    // Separable convolution, zero beyond the image.
    std::vector<double> tmp(static_cast<size_t>(h) * w, 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int cc = c + i;
                if (cc >= 0 && cc < w) {
                    acc += kernel[static_cast<size_t>(i + radius)] *
                           indicator[static_cast<size_t>(r) * w + cc];
                }
            }
            tmp[static_cast<size_t>(r) * w + c] = acc;
        }
    }
    FeatureMap mask(1, h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int rr = r + i;
                if (rr >= 0 && rr < h) {
                    acc += kernel[static_cast<size_t>(i + radius)] *
                           tmp[static_cast<size_t>(rr) * w + c];
                }
            }
            mask.at(0, r, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return mask;
}

FeatureMap composite(const FeatureMap& original, const FeatureMap& generated,
                     const FeatureMap& mask) {
    if (original.channels() != generated.channels() || original.height() != generated.height() ||
        original.width() != generated.width()) {
        throw std::invalid_argument("composite: image dimensions differ");
    }
    if (mask.channels() != 1 || mask.height() != original.height() ||
        mask.width() != original.width()) {
        throw std::invalid_argument("composite: mask must be single-channel with matching size");
    }
    for (float v : mask.raw()) {
        if (v < 0.0f || v > 1.0f) {
            throw std::invalid_argument("composite: mask values must lie in [0, 1]");
        }
    }
    FeatureMap out(original.channels(), original.height(), original.width());
    for (int c = 0; c < original.channels(); ++c) {
        for (int r = 0; r < original.height(); ++r) {
            for (int col = 0; col < original.width(); ++col) {
                const double m = mask.at(0, r, col);
                const double blend = m * generated.at(c, r, col) +
                                     (1.0 - m) * original.at(c, r, col);
                out.at(c, r, col) = static_cast<float>(blend);
            }
        }
    }
    return out;
}

RectF lip_rect_from_landmarks(const LandmarkSet& landmarks, std::span<const int> mouth_indices,
                              double inflate_fraction) {
    if (mouth_indices.empty()) {
        throw std::invalid_argument("lip_rect_from_landmarks: no indices given");
    }
    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_y;
    for (int idx : mouth_indices) {
        if (idx < 0 || idx >= landmarks.count()) {
            throw std::invalid_argument("lip_rect_from_landmarks: index out of range");
        }
        const Point2& p = landmarks.points[static_cast<size_t>(idx)];
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double cx = 0.5 * (min_x + max_x), cy = 0.5 * (min_y + max_y);
    const double half_w = 0.5 * (max_x - min_x) * (1.0 + inflate_fraction);
    const double half_h = 0.5 * (max_y - min_y) * (1.0 + inflate_fraction);
    return {cx - half_w, cy - half_h, 2.0 * half_w, 2.0 * half_h};
}

double default_mask_sigma(const RectF& rect) {
    return 0.05 * std::min(rect.w, rect.h);
}

}  // namespace lawwarp
