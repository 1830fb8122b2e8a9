#pragma once

#include <Eigen/Dense>

#include "lawwarp/types.hpp"

namespace lawwarp {

/// Homogeneous Lie-algebra element of the planar affine group: a 3x3
/// matrix whose last row is identically zero.
struct AffineAlgebraElement {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

/// exp(-rho * ||p - k||^2), in (0, 1].
double gaussian_influence(Point2 p, Point2 k, double rho);

/// Softmax over the keypoints' Gaussian influences at p. Strictly
/// positive, sums to one.
std::vector<double> softmax_weights(Point2 p, std::span<const KeypointWarp> kws);

/// Where the keypoint's similarity-affine map sends p:
/// diag(sx,sy) * Rot(theta) * (p - k) + k + t. Scale after rotation.
Point2 local_affine_target(Point2 p, const KeypointWarp& kw);

/// Composite displacement: sum over keypoints of
/// softmax_weight * gaussian_influence * (target - p). The Gaussian
/// factor appears both inside the softmax and as a direct multiplier,
/// which is what makes the field decay to zero far from all keypoints.
Vec2 displacement_at(Point2 p, std::span<const KeypointWarp> kws);

/// The keypoint-centered affine map as a homogeneous group matrix,
/// last row (0, 0, 1).
Eigen::Matrix3d group_matrix(const KeypointWarp& kw);

/// Principal matrix logarithm of the keypoint's group matrix. Throws
/// BranchCutError when the linear part has an eigenvalue on the closed
/// negative real axis (theta = +/-pi and its anisotropic relatives).
AffineAlgebraElement algebra_from_params(const KeypointWarp& kw);

/// Matrix exponential by scaling-and-squaring with a degree-13
/// truncated series. Requires the last row of the argument to be zero;
/// the result has last row (0, 0, 1).
Eigen::Matrix3d matrix_exp_3x3(const AffineAlgebraElement& a);

/// Principal logarithm of an affine group matrix (last row (0,0,1)) by
/// inverse scaling-and-squaring: repeated principal square roots until
/// near identity, then a truncated log series.
Eigen::Matrix3d matrix_log_3x3(const Eigen::Matrix3d& g);

/// Matrix-exponential field: exponentiates the Gaussian-weighted sum
/// of the keypoints' algebra elements and applies it to p. This is the
/// field definition the composite formulation approximates.
Point2 field_exp_reference(Point2 p, std::span<const KeypointWarp> kws);

/// Same exponential construction, but with each algebra element
/// carrying the composite formulation's effective weight
/// softmax_weight * gaussian_influence. Matches displacement_at to
/// second order in the parameter scale for any keypoint count, so it
/// serves as the convergence oracle.
Point2 field_exp_softmax(Point2 p, std::span<const KeypointWarp> kws);

}  // namespace lawwarp
