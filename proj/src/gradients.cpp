#include "lawwarp/gradients.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "lawwarp/detail/field_eval.hpp"
#include "lawwarp/detail/interp.hpp"
#include "lawwarp/grid_deform.hpp"
#include "lawwarp/parallel.hpp"
#include "lawwarp/warp_field.hpp"

namespace lawwarp {

namespace {

constexpr const char* kParamNames[kParamsPerKeypoint] = {"kx", "ky",    "rho", "sx",
                                                         "sy", "theta", "tx",  "ty"};

struct KeypointTerms {
    double dx, dy;    // p - k
    double q;         // squared distance
    double g;         // gaussian influence
    double omega;     // softmax weight
    double c, s;      // cos/sin theta
    double m00, m01, m10, m11;  // S * R
    double disp_x, disp_y;      // (M - I)(p - k) + t
};

}  // namespace

const char* warp_param_name(WarpParam p) {
    return kParamNames[static_cast<int>(p)];
}

std::optional<WarpParam> warp_param_from_name(const std::string& name) {
    for (int i = 0; i < kParamsPerKeypoint; ++i) {
        if (name == kParamNames[i]) {
            return static_cast<WarpParam>(i);
        }
    }
    return std::nullopt;
}

namespace detail {

PointJacobian displacement_jacobian_impl(Point2 p, std::span<const KeypointWarp> kws,
                                         bool softmax_coupling) {
    const int n = static_cast<int>(kws.size());
    PointJacobian jac;
    jac.keypoints = n;
    jac.data.assign(static_cast<size_t>(n) * 2 * kParamsPerKeypoint, 0.0);

    std::vector<KeypointTerms> terms(static_cast<size_t>(n));
    double esum = 0.0;
    for (int i = 0; i < n; ++i) {
        const KeypointWarp& kw = kws[static_cast<size_t>(i)];
        KeypointTerms& t = terms[static_cast<size_t>(i)];
        t.dx = p.x - kw.k.x;
        t.dy = p.y - kw.k.y;
        t.q = t.dx * t.dx + t.dy * t.dy;
        t.g = std::exp(-kw.rho * t.q);
        t.c = std::cos(kw.theta);
        t.s = std::sin(kw.theta);
        t.m00 = kw.sx * t.c;
        t.m01 = -kw.sx * t.s;
        t.m10 = kw.sy * t.s;
        t.m11 = kw.sy * t.c;
        t.disp_x = (t.m00 - 1.0) * t.dx + t.m01 * t.dy + kw.tx;
        t.disp_y = t.m10 * t.dx + (t.m11 - 1.0) * t.dy + kw.ty;
        esum += std::exp(t.g);
    }
    double total_x = 0.0, total_y = 0.0;
    for (int i = 0; i < n; ++i) {
        KeypointTerms& t = terms[static_cast<size_t>(i)];
        t.omega = n == 1 ? 1.0 : std::exp(t.g) / esum;
        total_x += t.omega * t.g * t.disp_x;
        total_y += t.omega * t.g * t.disp_y;
    }

    for (int j = 0; j < n; ++j) {
        const KeypointWarp& kw = kws[static_cast<size_t>(j)];
        const KeypointTerms& t = terms[static_cast<size_t>(j)];
        const double u = t.omega * t.g;

        auto set = [&](WarpParam param, double vx, double vy) {
            jac.at(j, 0, static_cast<int>(param)) = vx;
            jac.at(j, 1, static_cast<int>(param)) = vy;
        };

        // Sensitivity of the whole sum to this keypoint's gaussian
        // value; the last term carries the softmax coupling across
        // keypoints.
        double vg_x, vg_y;
        if (softmax_coupling) {
            vg_x = t.omega * ((1.0 + t.g) * t.disp_x - total_x);
            vg_y = t.omega * ((1.0 + t.g) * t.disp_y - total_y);
        } else {
            const double own = 1.0 + (1.0 - t.omega) * t.g;
            vg_x = t.omega * own * t.disp_x;
            vg_y = t.omega * own * t.disp_y;
        }

        set(WarpParam::rho, -t.q * t.g * vg_x, -t.q * t.g * vg_y);

        // Keypoint position feeds both the gaussian weight and the
        // keypoint-centered affine.
        const double gk = 2.0 * kw.rho * t.g;
        jac.at(j, 0, static_cast<int>(WarpParam::kx)) = vg_x * gk * t.dx + u * (1.0 - t.m00);
        jac.at(j, 0, static_cast<int>(WarpParam::ky)) = vg_x * gk * t.dy + u * (-t.m01);
        jac.at(j, 1, static_cast<int>(WarpParam::kx)) = vg_y * gk * t.dx + u * (-t.m10);
        jac.at(j, 1, static_cast<int>(WarpParam::ky)) = vg_y * gk * t.dy + u * (1.0 - t.m11);

        const double rx = t.c * t.dx - t.s * t.dy;
        const double ry = t.s * t.dx + t.c * t.dy;
        set(WarpParam::sx, u * rx, 0.0);
        set(WarpParam::sy, 0.0, u * ry);
        set(WarpParam::theta, u * kw.sx * (-t.s * t.dx - t.c * t.dy),
            u * kw.sy * (t.c * t.dx - t.s * t.dy));
        set(WarpParam::tx, u, 0.0);
        set(WarpParam::ty, 0.0, u);
    }
    return jac;
}

}  // namespace detail

PointJacobian displacement_jacobian(Point2 p, std::span<const KeypointWarp> kws) {
    if (kws.empty()) {
        throw std::invalid_argument("displacement_jacobian: empty keypoint list");
    }
    for (const KeypointWarp& kw : kws) {
        validate(kw);
    }
    return detail::displacement_jacobian_impl(p, kws, true);
}

namespace {

/// Backward pass of bilinear sampling for one plane. grad_grid
/// accumulates, so several channels sharing one grid can be chained.
void sampler_backward_plane(const double* src, int h, int w, const SampleGrid& grid,
                            const double* upstream, double* grad_map, double* grad_grid) {
    const double sx = 0.5 * (w - 1);
    const double sy = 0.5 * (h - 1);
    for (int r = 0; r < grid.height; ++r) {
        for (int col = 0; col < grid.width; ++col) {
            const size_t idx = static_cast<size_t>(r) * grid.width + col;
            const double ix = detail::to_pixel(grid.coords[2 * idx], w);
            const double iy = detail::to_pixel(grid.coords[2 * idx + 1], h);
            const double cx = std::clamp(ix, 0.0, static_cast<double>(w - 1));
            const double cy = std::clamp(iy, 0.0, static_cast<double>(h - 1));
            const int x0 = static_cast<int>(cx);
            const int y0 = static_cast<int>(cy);
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const double fx = cx - x0;
            const double fy = cy - y0;
            const double up = upstream[idx];

            grad_map[static_cast<size_t>(y0) * w + x0] += (1.0 - fx) * (1.0 - fy) * up;
            grad_map[static_cast<size_t>(y0) * w + x1] += fx * (1.0 - fy) * up;
            grad_map[static_cast<size_t>(y1) * w + x0] += (1.0 - fx) * fy * up;
            grad_map[static_cast<size_t>(y1) * w + x1] += fx * fy * up;

            const double v00 = src[static_cast<size_t>(y0) * w + x0];
            const double v01 = src[static_cast<size_t>(y0) * w + x1];
            const double v10 = src[static_cast<size_t>(y1) * w + x0];
            const double v11 = src[static_cast<size_t>(y1) * w + x1];
            const double dv_dcx = (1.0 - fy) * (v01 - v00) + fy * (v11 - v10);
            const double dv_dcy = (1.0 - fx) * (v10 - v00) + fx * (v11 - v01);

            // Clamped coordinates stop the flow; coordinates exactly on
            // the border keep the interior limit.
            const double pass_x = (ix >= 0.0 && ix <= static_cast<double>(w - 1)) ? 1.0 : 0.0;
            const double pass_y = (iy >= 0.0 && iy <= static_cast<double>(h - 1)) ? 1.0 : 0.0;
            grad_grid[2 * idx] += pass_x * dv_dcx * sx * up;
            grad_grid[2 * idx + 1] += pass_y * dv_dcy * sy * up;
        }
    }
}

}  // namespace

SamplerBackwardResult sampler_backward(const Image64& map, const SampleGrid& grid,
                                       const Image64& upstream) {
    if (upstream.channels != map.channels || upstream.height != grid.height ||
        upstream.width != grid.width) {
        throw std::invalid_argument("sampler_backward: upstream dims must match the sampled output");
    }
    SamplerBackwardResult result;
    result.grad_map = Image64(map.channels, map.height, map.width);
    result.grad_grid.assign(2 * static_cast<size_t>(grid.height) * grid.width, 0.0);
    for (int c = 0; c < map.channels; ++c) {
        sampler_backward_plane(map.plane(c), map.height, map.width, grid, upstream.plane(c),
                               result.grad_map.plane(c), result.grad_grid.data());
    }
    return result;
}

SamplerBackwardResult sampler_backward(const FeatureMap& map, const SampleGrid& grid,
                                       const FeatureMap& upstream) {
    return sampler_backward(to_image64(map), grid, to_image64(upstream));
}

WarpObjective l2_objective(Image64 target) {
    auto shared = std::make_shared<Image64>(std::move(target));
    WarpObjective obj;
    obj.value = [shared](const Image64& out) {
        if (out.data.size() != shared->data.size()) {
            throw std::invalid_argument("l2_objective: output dims differ from the target");
        }
        double acc = 0.0;
        for (size_t i = 0; i < out.data.size(); ++i) {
            const double diff = out.data[i] - shared->data[i];
            acc += diff * diff;
        }
        return acc / static_cast<double>(out.data.size());
    };
    obj.gradient = [shared](const Image64& out) {
        if (out.data.size() != shared->data.size()) {
            throw std::invalid_argument("l2_objective: output dims differ from the target");
        }
        Image64 grad(out.channels, out.height, out.width);
        const double scale = 2.0 / static_cast<double>(out.data.size());
        for (size_t i = 0; i < out.data.size(); ++i) {
            grad.data[i] = scale * (out.data[i] - shared->data[i]);
        }
        return grad;
    };
    return obj;
}

namespace {

/// Warps one plane through the coarse-field pipeline and returns the
/// full-resolution sampling grid for the backward pass.
SampleGrid forward_channel(const Image64& map, std::span<const KeypointWarp> kws,
                           const CoarseGridConfig& cfg, double* out_plane) {
    DisplacementField coarse(cfg.coarse_h, cfg.coarse_w);
    for (int r = 0; r < cfg.coarse_h; ++r) {
        const double y = detail::from_pixel(r, cfg.coarse_h);
        for (int c = 0; c < cfg.coarse_w; ++c) {
            const Vec2 d = detail::displacement_raw({detail::from_pixel(c, cfg.coarse_w), y}, kws);
            coarse.dx(r, c) = d.x;
            coarse.dy(r, c) = d.y;
        }
    }
    const DisplacementField fine = upscale_field(coarse, map.height, map.width);
    SampleGrid grid = grid_from_field(fine);
    detail::sample_plane_rows(map.plane(0), map.height, map.width, grid.coords.data(),
                              grid.width, 0, grid.height, out_plane);
    return grid;
}

void check_gradient_inputs(const Image64& map, const WarpSpec& spec, const CoarseGridConfig& cfg) {
    if (spec.channels() != map.channels) {
        throw std::invalid_argument("gradients: channel count mismatch");
    }
    const CoarseGridConfig expected(cfg.downscale_factor, map.height, map.width);
    if (expected.coarse_h != cfg.coarse_h || expected.coarse_w != cfg.coarse_w) {
        throw std::invalid_argument("gradients: CoarseGridConfig does not match the map");
    }
}

}  // namespace

ParamGradient warp_gradient(const Image64& map, const WarpSpec& spec,
                            const CoarseGridConfig& cfg, const WarpObjective& objective) {
    check_gradient_inputs(map, spec, cfg);
    const int channels = map.channels;

    Image64 warped(channels, map.height, map.width);
    std::vector<SampleGrid> forwards;
    forwards.reserve(static_cast<size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        Image64 plane_view(1, map.height, map.width);
        std::memcpy(plane_view.data.data(), map.plane(c), plane_view.data.size() * sizeof(double));
        forwards.push_back(forward_channel(plane_view, spec.channel(c), cfg, warped.plane(c)));
    }

    const Image64 upstream = objective.gradient(warped);
    if (upstream.channels != channels || upstream.height != map.height ||
        upstream.width != map.width) {
        throw std::invalid_argument("warp_gradient: objective gradient has wrong dims");
    }

    ParamGradient grad(channels, spec.keypoints());
    std::vector<double> grad_grid(2 * static_cast<size_t>(map.height) * map.width);
    std::vector<double> grad_coarse(2 * static_cast<size_t>(cfg.coarse_h) * cfg.coarse_w);
    std::vector<double> scratch_plane(static_cast<size_t>(map.height) * map.width);
    for (int c = 0; c < channels; ++c) {
        std::fill(grad_grid.begin(), grad_grid.end(), 0.0);
        std::fill(grad_coarse.begin(), grad_coarse.end(), 0.0);
        std::fill(scratch_plane.begin(), scratch_plane.end(), 0.0);
        sampler_backward_plane(map.plane(c), map.height, map.width,
                               forwards[static_cast<size_t>(c)], upstream.plane(c),
                               scratch_plane.data(), grad_grid.data());
        // The grid is identity + upscaled field, so d grid / d field = I.
        detail::upscale_vec2_adjoint(grad_grid.data(), map.height, map.width, grad_coarse.data(),
                                     cfg.coarse_h, cfg.coarse_w);
        const std::span<const KeypointWarp> kws = spec.channel(c);
        for (int r = 0; r < cfg.coarse_h; ++r) {
            const double y = detail::from_pixel(r, cfg.coarse_h);
            for (int col = 0; col < cfg.coarse_w; ++col) {
                const size_t idx = static_cast<size_t>(r) * cfg.coarse_w + col;
                const double gx = grad_coarse[2 * idx];
                const double gy = grad_coarse[2 * idx + 1];
                if (gx == 0.0 && gy == 0.0) {
                    continue;
                }
                const PointJacobian jac = detail::displacement_jacobian_impl(
                    {detail::from_pixel(col, cfg.coarse_w), y}, kws, true);
                for (int kp = 0; kp < jac.keypoints; ++kp) {
                    for (int param = 0; param < kParamsPerKeypoint; ++param) {
                        grad.at(c, kp, param) +=
                            jac.at(kp, 0, param) * gx + jac.at(kp, 1, param) * gy;
                    }
                }
            }
        }
    }
    return grad;
}

GradCheckReport finite_difference_check(const Image64& map, const WarpSpec& spec,
                                        const CoarseGridConfig& cfg,
                                        const WarpObjective& objective,
                                        const GradCheckOptions& options) {
    check_gradient_inputs(map, spec, cfg);
    if (options.steps.empty()) {
        throw std::invalid_argument("finite_difference_check: no step sizes given");
    }
    for (double h : options.steps) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw std::invalid_argument("finite_difference_check: steps must be positive");
        }
    }
    if (!(options.tolerance > 0.0) || !std::isfinite(options.tolerance)) {
        throw std::invalid_argument("finite_difference_check: tolerance must be positive");
    }

    ParamGradient analytic = warp_gradient(map, spec, cfg, objective);
    if (options.negate_param) {
        const int pi = static_cast<int>(*options.negate_param);
        for (int c = 0; c < analytic.channels; ++c) {
            for (int kp = 0; kp < analytic.keypoints; ++kp) {
                analytic.at(c, kp, pi) = -analytic.at(c, kp, pi);
            }
        }
    }

    // Baseline forward pass; perturbations only re-warp the channel they
    // touch and reuse every other warped plane.
    Image64 base_warped(map.channels, map.height, map.width);
    for (int c = 0; c < map.channels; ++c) {
        Image64 plane_view(1, map.height, map.width);
        std::memcpy(plane_view.data.data(), map.plane(c), plane_view.data.size() * sizeof(double));
        forward_channel(plane_view, spec.channel(c), cfg, base_warped.plane(c));
    }
    {
        const double base_value = objective.value(base_warped);
        if (!std::isfinite(base_value)) {
            throw EvaluationError("finite_difference_check: objective is not finite");
        }
    }

    const int channels = map.channels;
    const int keypoints = spec.keypoints();
    const int64_t scalar_count =
        static_cast<int64_t>(channels) * keypoints * kParamsPerKeypoint;
    const size_t step_count = options.steps.size();
    std::vector<double> fd(static_cast<size_t>(scalar_count) * step_count, 0.0);

    // Perturbations are independent, so they run concurrently with a
    // per-chunk scratch copy; any exception is carried back to this
    // thread.
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    parallel::parallel_for(0, scalar_count, [&](int64_t begin, int64_t end) {
      try {
        std::vector<std::vector<KeypointWarp>> work = spec.all();
        Image64 scratch = base_warped;
        Image64 plane_view(1, map.height, map.width);
        const size_t plane_bytes = plane_view.data.size() * sizeof(double);
        for (int64_t s = begin; s < end && !failed.load(std::memory_order_relaxed); ++s) {
            const int c = static_cast<int>(s / (static_cast<int64_t>(keypoints) * kParamsPerKeypoint));
            const int rem = static_cast<int>(s % (static_cast<int64_t>(keypoints) * kParamsPerKeypoint));
            const int kp = rem / kParamsPerKeypoint;
            const int param = rem % kParamsPerKeypoint;
            KeypointWarp& target = work[static_cast<size_t>(c)][static_cast<size_t>(kp)];
            double* slot = nullptr;
            switch (static_cast<WarpParam>(param)) {
                case WarpParam::kx: slot = &target.k.x; break;
                case WarpParam::ky: slot = &target.k.y; break;
                case WarpParam::rho: slot = &target.rho; break;
                case WarpParam::sx: slot = &target.sx; break;
                case WarpParam::sy: slot = &target.sy; break;
                case WarpParam::theta: slot = &target.theta; break;
                case WarpParam::tx: slot = &target.tx; break;
                case WarpParam::ty: slot = &target.ty; break;
            }
            const double original = *slot;
            std::memcpy(plane_view.data.data(), map.plane(c), plane_bytes);
            for (size_t si = 0; si < step_count; ++si) {
                const double h = options.steps[si];
                *slot = original + h;
                forward_channel(plane_view, work[static_cast<size_t>(c)], cfg, scratch.plane(c));
                const double plus = objective.value(scratch);
                *slot = original - h;
                forward_channel(plane_view, work[static_cast<size_t>(c)], cfg, scratch.plane(c));
                const double minus = objective.value(scratch);
                if (!std::isfinite(plus) || !std::isfinite(minus)) {
                    throw EvaluationError("finite_difference_check: objective is not finite");
                }
                fd[static_cast<size_t>(s) * step_count + si] = (plus - minus) / (2.0 * h);
            }
            *slot = original;
            std::memcpy(scratch.plane(c), base_warped.plane(c), plane_bytes);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
            error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    });
    if (error) {
        std::rethrow_exception(error);
    }

    // Relative error with a floored denominator. The floor combines an
    // absolute tolerance of 1e-8 (expressed as atol/rtol) with 1% of
    // the gradient's max norm: an elementwise |a-f|/max(|a|,|f|) on
    // near-zero partials only measures finite-difference noise, and an
    // objective evaluated at its minimum has no meaningful relative
    // scale at all.
    double grad_scale = 0.0;
    for (double v : analytic.data) {
        grad_scale = std::max(grad_scale, std::abs(v));
    }
    const double denom_floor = std::max(1e-8 / options.tolerance, 0.01 * grad_scale);

    GradCheckReport report;
    report.steps = options.steps;
    report.tolerance = options.tolerance;
    std::array<std::map<double, int>, kParamsPerKeypoint> step_votes;
    for (int param = 0; param < kParamsPerKeypoint; ++param) {
        GradCheckReport::ParamStat& stat = report.params[static_cast<size_t>(param)];
        stat.param = static_cast<WarpParam>(param);
    }
    for (int64_t s = 0; s < scalar_count; ++s) {
        const int param = static_cast<int>(s % kParamsPerKeypoint);
        const double a = analytic.data[static_cast<size_t>(s)];
        double best_err = std::numeric_limits<double>::infinity();
        double best_step = options.steps.front();
        for (size_t si = 0; si < step_count; ++si) {
            const double f = fd[static_cast<size_t>(s) * step_count + si];
            const double denom = std::max({std::abs(a), std::abs(f), denom_floor});
            const double err = std::abs(a - f) / denom;
            if (err < best_err) {
                best_err = err;
                best_step = options.steps[si];
            }
        }
        GradCheckReport::ParamStat& stat = report.params[static_cast<size_t>(param)];
        stat.max_rel_err = std::max(stat.max_rel_err, best_err);
        stat.max_abs_grad = std::max(stat.max_abs_grad, std::abs(a));
        step_votes[static_cast<size_t>(param)][best_step] += 1;
    }
    for (int param = 0; param < kParamsPerKeypoint; ++param) {
        GradCheckReport::ParamStat& stat = report.params[static_cast<size_t>(param)];
        int best_votes = -1;
        for (const auto& [step, votes] : step_votes[static_cast<size_t>(param)]) {
            if (votes > best_votes) {
                best_votes = votes;
                stat.best_step = step;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, stat.max_rel_err);
    }
    report.pass = report.max_rel_err <= options.tolerance;
    return report;
}

WarpSpec scale_spec_parameters(const WarpSpec& spec, double epsilon) {
    std::vector<std::vector<KeypointWarp>> scaled = spec.all();
    for (auto& channel : scaled) {
        for (KeypointWarp& kw : channel) {
            kw.theta *= epsilon;
            kw.tx *= epsilon;
            kw.ty *= epsilon;
            kw.sx = std::exp(epsilon * std::log(kw.sx));
            kw.sy = std::exp(epsilon * std::log(kw.sy));
        }
    }
    return WarpSpec(std::move(scaled));
}

ConvergenceReport formulation_agreement(const WarpSpec& spec, int grid_h, int grid_w,
                                        std::span<const double> epsilons, ExpWeighting weighting) {
    if (grid_h < 2 || grid_w < 2) {
        throw std::invalid_argument("formulation_agreement: grid must be at least 2x2");
    }
    ConvergenceReport report;
    for (const double eps : epsilons) {
        if (!(eps > 0.0) || !std::isfinite(eps)) {
            throw std::invalid_argument("formulation_agreement: epsilons must be positive");
        }
        const WarpSpec scaled = scale_spec_parameters(spec, eps);
        const std::span<const KeypointWarp> kws = scaled.channel(0);
        double max_disc = 0.0;
        for (int r = 0; r < grid_h; ++r) {
            const double y = detail::from_pixel(r, grid_h);
            for (int c = 0; c < grid_w; ++c) {
                const Point2 p{detail::from_pixel(c, grid_w), y};
                const Vec2 d = detail::displacement_raw(p, kws);
                const Point2 composite{p.x + d.x, p.y + d.y};
                const Point2 exact = weighting == ExpWeighting::Gaussian
                                         ? field_exp_reference(p, kws)
                                         : field_exp_softmax(p, kws);
                const double dx = composite.x - exact.x;
                const double dy = composite.y - exact.y;
                max_disc = std::max(max_disc, std::sqrt(dx * dx + dy * dy));
            }
        }
        report.epsilons.push_back(eps);
        report.max_discrepancy.push_back(max_disc);
    }
    for (size_t i = 0; i + 1 < report.max_discrepancy.size(); ++i) {
        report.ratios.push_back(report.max_discrepancy[i] / report.max_discrepancy[i + 1]);
    }
    return report;
}

}  // namespace lawwarp
