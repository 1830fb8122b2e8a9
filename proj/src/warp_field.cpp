#include "lawwarp/warp_field.hpp"

#include <algorithm>
#include <cmath>

#include "lawwarp/detail/field_eval.hpp"

namespace lawwarp {

namespace {

constexpr double kLogSeriesThreshold = 0.125;
constexpr int kLogSeriesTerms = 18;
constexpr int kExpSeriesDegree = 13;
constexpr int kMaxSqrtIterations = 64;

void check_point(Point2 p, const char* what) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument(std::string(what) + ": non-finite point");
    }
}

void check_keypoints(std::span<const KeypointWarp> kws, const char* what) {
    if (kws.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty keypoint list");
    }
    for (const KeypointWarp& kw : kws) {
        validate(kw);
    }
}

Eigen::Matrix2d linear_part(const KeypointWarp& kw) {
    const double c = std::cos(kw.theta), s = std::sin(kw.theta);
    Eigen::Matrix2d m;
    m << kw.sx * c, -kw.sx * s, kw.sy * s, kw.sy * c;
    return m;
}

}  // namespace

double gaussian_influence(Point2 p, Point2 k, double rho) {
    check_point(p, "gaussian_influence");
    check_point(k, "gaussian_influence");
    if (!std::isfinite(rho)) {
        throw std::invalid_argument("gaussian_influence: non-finite rho");
    }
    if (rho < 0.0) {
        throw std::invalid_argument("gaussian_influence: rho must be non-negative");
    }
    return detail::gaussian_raw(p, k, rho);
}

std::vector<double> softmax_weights(Point2 p, std::span<const KeypointWarp> kws) {
    check_point(p, "softmax_weights");
    check_keypoints(kws, "softmax_weights");
    std::vector<double> w(kws.size());
    double esum = 0.0;
    for (size_t i = 0; i < kws.size(); ++i) {
        w[i] = std::exp(detail::gaussian_raw(p, kws[i].k, kws[i].rho));
        esum += w[i];
    }
    for (double& wi : w) {
        wi /= esum;
    }
    return w;
}

Point2 local_affine_target(Point2 p, const KeypointWarp& kw) {
    check_point(p, "local_affine_target");
    validate(kw);
    const double c = std::cos(kw.theta), s = std::sin(kw.theta);
    const double dx = p.x - kw.k.x, dy = p.y - kw.k.y;
    const double rx = c * dx - s * dy;
    const double ry = s * dx + c * dy;
    return {kw.sx * rx + kw.k.x + kw.tx, kw.sy * ry + kw.k.y + kw.ty};
}

Vec2 displacement_at(Point2 p, std::span<const KeypointWarp> kws) {
    check_point(p, "displacement_at");
    check_keypoints(kws, "displacement_at");
    return detail::displacement_raw(p, kws);
}

Eigen::Matrix3d group_matrix(const KeypointWarp& kw) {
    validate(kw);
    const Eigen::Matrix2d m = linear_part(kw);
    Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
    g.topLeftCorner<2, 2>() = m;
    g(0, 2) = kw.k.x + kw.tx - (m(0, 0) * kw.k.x + m(0, 1) * kw.k.y);
    g(1, 2) = kw.k.y + kw.ty - (m(1, 0) * kw.k.x + m(1, 1) * kw.k.y);
    return g;
}

Eigen::Matrix3d matrix_exp_3x3(const AffineAlgebraElement& a) {
    if (!a.m.allFinite()) {
        throw std::invalid_argument("matrix_exp_3x3: non-finite entries");
    }
    if (a.m(2, 0) != 0.0 || a.m(2, 1) != 0.0 || a.m(2, 2) != 0.0) {
        throw std::invalid_argument("matrix_exp_3x3: last row must be zero");
    }
    const double norm1 = a.m.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) {
        return Eigen::Matrix3d::Identity();
    }
    // Scaling and squaring: bring the norm below 1/8, run a degree-13
    // truncated series, square back. Scaling by 2^-s is exact.
    const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1)))) + 3;
    const Eigen::Matrix3d x = a.m * std::ldexp(1.0, -s);
    Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
    for (int j = kExpSeriesDegree; j >= 1; --j) {
        p = Eigen::Matrix3d::Identity() + (x * p) / static_cast<double>(j);
    }
    for (int i = 0; i < s; ++i) {
        p = (p * p).eval();
    }
    p.row(2) << 0.0, 0.0, 1.0;
    return p;
}

Eigen::Matrix3d matrix_log_3x3(const Eigen::Matrix3d& g) {
    if (!g.allFinite()) {
        throw std::invalid_argument("matrix_log_3x3: non-finite entries");
    }
    if (g(2, 0) != 0.0 || g(2, 1) != 0.0 || g(2, 2) != 1.0) {
        throw std::invalid_argument("matrix_log_3x3: last row must be (0, 0, 1)");
    }

    Eigen::Matrix2d m = g.topLeftCorner<2, 2>();
    Eigen::Vector2d b = g.topRightCorner<2, 1>();

    // The principal logarithm exists only when the linear part keeps
    // every eigenvalue off the closed negative real axis. det <= 0 and
    // the real-eigenvalue case with a non-positive root are both on the
    // branch cut (theta = +/-pi lands here).
    const double det = m.determinant();
    if (det <= 0.0) {
        throw BranchCutError("matrix_log_3x3: eigenvalue on the branch cut");
    }
    const double tr = m.trace();
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0 && tr - std::sqrt(disc) <= 0.0) {
        throw BranchCutError("matrix_log_3x3: eigenvalue on the branch cut");
    }

    // Inverse scaling and squaring: principal affine square roots until
    // the matrix is near identity, then a truncated log series.
    const Eigen::Matrix2d id2 = Eigen::Matrix2d::Identity();
    int halvings = 0;
    auto distance_to_identity = [&]() {
        return std::sqrt((m - id2).squaredNorm() + b.squaredNorm());
    };
    while (distance_to_identity() > kLogSeriesThreshold) {
        if (++halvings > kMaxSqrtIterations) {
            throw std::runtime_error("matrix_log_3x3: square-root iteration did not converge");
        }
        // Principal square root of the 2x2 block in closed form; the
        // translation follows from [S, c; 0, 1]^2 = [S^2, (S+I)c; 0, 1].
        const double delta = std::sqrt(m.determinant());
        const double denom = std::sqrt(m.trace() + 2.0 * delta);
        const Eigen::Matrix2d s = (m + delta * id2) / denom;
        b = (s + id2).inverse() * b;
        m = s;
    }

    Eigen::Matrix3d x = Eigen::Matrix3d::Zero();
    x.topLeftCorner<2, 2>() = m - id2;
    x.topRightCorner<2, 1>() = b;
    Eigen::Matrix3d term = x;
    Eigen::Matrix3d log_sum = Eigen::Matrix3d::Zero();
    double sign = 1.0;
    for (int j = 1; j <= kLogSeriesTerms; ++j) {
        log_sum += term * (sign / static_cast<double>(j));
        term = (term * x).eval();
        sign = -sign;
    }
    log_sum *= std::ldexp(1.0, halvings);
    log_sum.row(2).setZero();
    return log_sum;
}

AffineAlgebraElement algebra_from_params(const KeypointWarp& kw) {
    return AffineAlgebraElement{matrix_log_3x3(group_matrix(kw))};
}

namespace {

Point2 field_exp_impl(Point2 p, std::span<const KeypointWarp> kws, bool softmax_weighted) {
    check_point(p, "field_exp");
    check_keypoints(kws, "field_exp");
    std::vector<double> weights(kws.size());
    double esum = 0.0;
    for (size_t i = 0; i < kws.size(); ++i) {
        const double gi = detail::gaussian_raw(p, kws[i].k, kws[i].rho);
        weights[i] = gi;
        esum += std::exp(gi);
    }
    if (softmax_weighted && kws.size() > 1) {
        for (double& w : weights) {
            w *= std::exp(w) / esum;
        }
    }
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    for (size_t i = 0; i < kws.size(); ++i) {
        sum += weights[i] * algebra_from_params(kws[i]).m;
    }
    const Eigen::Matrix3d g = matrix_exp_3x3(AffineAlgebraElement{sum});
    return {g(0, 0) * p.x + g(0, 1) * p.y + g(0, 2),
            g(1, 0) * p.x + g(1, 1) * p.y + g(1, 2)};
}

}  // namespace

Point2 field_exp_reference(Point2 p, std::span<const KeypointWarp> kws) {
    return field_exp_impl(p, kws, false);
}

Point2 field_exp_softmax(Point2 p, std::span<const KeypointWarp> kws) {
    return field_exp_impl(p, kws, true);
}

}  // namespace lawwarp
