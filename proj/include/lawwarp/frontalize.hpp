#pragma once

#include "lawwarp/types.hpp"

namespace lawwarp {

/// Ordered landmark points in pixel coordinates; order defines
/// correspondence between sets.
struct LandmarkSet {
    std::vector<Point2> points;

    int count() const { return static_cast<int>(points.size()); }
};

/// Scale + rotation + translation: p' = s * R(theta) * p + t, pixels.
struct SimilarityTransform {
    double s = 1.0;
    double theta = 0.0;
    Vec2 t;

    Point2 apply(Point2 p) const {
        const double c = std::cos(theta), sn = std::sin(theta);
        return {s * (c * p.x - sn * p.y) + t.x, s * (sn * p.x + c * p.y) + t.y};
    }
};

/// Least-squares similarity aligning m onto tmp (Umeyama closed form
/// with determinant correction, so the rotation is always proper).
/// Throws std::invalid_argument on count mismatch or fewer than two
/// points, DegenerateInputError when m has zero variance.
SimilarityTransform solve_similarity(const LandmarkSet& m, const LandmarkSet& tmp);

/// Sum of squared residuals ||T(m_i) - tmp_i||^2.
double alignment_residual(const LandmarkSet& m, const LandmarkSet& tmp,
                          const SimilarityTransform& transform);

SimilarityTransform invert_similarity(const SimilarityTransform& transform);

/// outer after inner: compose(a, b)(p) = a(b(p)).
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

LandmarkSet apply_to_landmarks(const SimilarityTransform& transform, const LandmarkSet& landmarks);

/// Backward-warps the image through the inverse transform with
/// bilinear sampling and border clamp, so landmarks move as
/// p' = s*R*p + t.
FeatureMap apply_similarity(const FeatureMap& img, const SimilarityTransform& transform);

/// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct RectF {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

/// Indicator of rect blurred by a separable Gaussian of std sigma,
/// truncated at 3*sigma and renormalized. 1 on the rect interior eroded
/// by the kernel radius, 0 beyond it outside the rect.
FeatureMap gaussian_soft_mask(int h, int w, const RectF& rect, double sigma);

/// Per-pixel mask*generated + (1-mask)*original; mask is single-channel
/// and broadcast across channels.
FeatureMap composite(const FeatureMap& original, const FeatureMap& generated,
                     const FeatureMap& mask);

/// Bounding box of the selected landmarks, inflated about its center by
/// the given fraction of its width/height.
RectF lip_rect_from_landmarks(const LandmarkSet& landmarks, std::span<const int> mouth_indices,
                              double inflate_fraction = 0.2);

/// Default transition width: 5% of the rect's shorter side.
double default_mask_sigma(const RectF& rect);

}  // namespace lawwarp
