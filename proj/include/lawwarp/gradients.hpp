#pragma once

#include <array>
#include <functional>
#include <optional>

#include "lawwarp/types.hpp"

namespace lawwarp {

/// Parameter slots of one keypoint, in the order used by every gradient
/// container: (kx, ky, rho, sx, sy, theta, tx, ty).
enum class WarpParam : int { kx = 0, ky, rho, sx, sy, theta, tx, ty };

inline constexpr int kParamsPerKeypoint = 8;

const char* warp_param_name(WarpParam p);
std::optional<WarpParam> warp_param_from_name(const std::string& name);

/// Jacobian of the displacement at one evaluation point: for each
/// keypoint a 2x8 block, rows (dx, dy), columns in WarpParam order.
struct PointJacobian {
    int keypoints = 0;
    std::vector<double> data;  // keypoints * 2 * 8

    double at(int kp, int row, int param) const {
        return data[(static_cast<size_t>(kp) * 2 + row) * kParamsPerKeypoint + param];
    }
    double& at(int kp, int row, int param) {
        return data[(static_cast<size_t>(kp) * 2 + row) * kParamsPerKeypoint + param];
    }
};

/// Analytic Jacobian of displacement_at, including the softmax coupling
/// terms (every weight depends on every keypoint's rho and position).
PointJacobian displacement_jacobian(Point2 p, std::span<const KeypointWarp> kws);

namespace detail {
/// Coupling can be switched off to demonstrate that the cross-keypoint
/// softmax terms are load-bearing (negative control in the tests).
PointJacobian displacement_jacobian_impl(Point2 p, std::span<const KeypointWarp> kws,
                                         bool softmax_coupling);
}  // namespace detail

/// Gradient of a scalar objective with respect to every warp parameter,
/// shaped like the spec: channels x keypoints x 8.
struct ParamGradient {
    int channels = 0;
    int keypoints = 0;
    std::vector<double> data;

    ParamGradient() = default;
    ParamGradient(int c, int n) : channels(c), keypoints(n), data(static_cast<size_t>(c) * n * kParamsPerKeypoint, 0.0) {}

    double at(int c, int kp, int param) const {
        return data[(static_cast<size_t>(c) * keypoints + kp) * kParamsPerKeypoint + param];
    }
    double& at(int c, int kp, int param) {
        return data[(static_cast<size_t>(c) * keypoints + kp) * kParamsPerKeypoint + param];
    }
};

/// Adjoint of bilinear sampling.
struct SamplerBackwardResult {
    Image64 grad_map;               // dims of the input map
    std::vector<double> grad_grid;  // 2 * out_h * out_w, (d/dx, d/dy), summed over channels
};

/// grad wrt grid is zero at coordinates that were actually clamped;
/// coordinates exactly on the border pass the interior limit.
SamplerBackwardResult sampler_backward(const Image64& map, const SampleGrid& grid,
                                       const Image64& upstream);
SamplerBackwardResult sampler_backward(const FeatureMap& map, const SampleGrid& grid,
                                       const FeatureMap& upstream);

/// A scalar objective of the warped output together with its gradient.
struct WarpObjective {
    std::function<double(const Image64&)> value;
    std::function<Image64(const Image64&)> gradient;
};

/// Mean squared difference against a fixed target.
WarpObjective l2_objective(Image64 target);

/// Analytic gradient of objective(warp(map)) with respect to all warp
/// parameters, assembled from displacement_jacobian, the upscale
/// adjoint and sampler_backward.
ParamGradient warp_gradient(const Image64& map, const WarpSpec& spec,
                            const CoarseGridConfig& cfg, const WarpObjective& objective);

struct GradCheckOptions {
    std::vector<double> steps{1e-4, 1e-5, 1e-6};
    double tolerance = 1e-4;
    /// When set, the analytic partials of this parameter are negated
    /// before comparison; the check must then fail (negative control).
    std::optional<WarpParam> negate_param;
};

struct GradCheckReport {
    struct ParamStat {
        WarpParam param = WarpParam::kx;
        double max_rel_err = 0.0;   // at the best step
        double best_step = 0.0;
        double max_abs_grad = 0.0;  // largest analytic partial of this class
    };
    std::array<ParamStat, kParamsPerKeypoint> params{};
    std::vector<double> steps;
    double tolerance = 0.0;
    double max_rel_err = 0.0;
    bool pass = false;
};

/// Central finite differences at each step against the analytic
/// chain-rule gradient; per parameter the best step is selected.
GradCheckReport finite_difference_check(const Image64& map, const WarpSpec& spec,
                                        const CoarseGridConfig& cfg,
                                        const WarpObjective& objective,
                                        const GradCheckOptions& options = {});

/// Which weights the exponential side of the agreement harness applies
/// to the algebra elements.
enum class ExpWeighting {
    Gaussian,         // raw field definition
    SoftmaxGaussian,  // the composite formulation's effective weights
};

/// Scales every keypoint's affine parameters toward identity:
/// theta and t linearly, sx/sy on the log scale. Positions and rho are
/// untouched.
WarpSpec scale_spec_parameters(const WarpSpec& spec, double epsilon);

struct ConvergenceReport {
    std::vector<double> epsilons;
    std::vector<double> max_discrepancy;  // max over grid of |composite - exponential|
    std::vector<double> ratios;           // discrepancy[i] / discrepancy[i+1]
};

/// Epsilon-halving harness: evaluates the composite and exponential
/// formulations of channel 0 on an identity grid at each parameter
/// scale and reports the contraction of their disagreement.
ConvergenceReport formulation_agreement(const WarpSpec& spec, int grid_h, int grid_w,
                                        std::span<const double> epsilons, ExpWeighting weighting);

}  // namespace lawwarp
