#include "lawwarp/synthetic.hpp"

#include <cmath>
#include <random>

namespace lawwarp {

namespace {

// Explicit 53-bit mapping instead of std::uniform_real_distribution so
// seeded draws are identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

constexpr double kTwoPi = 6.283185307179586;

}  // namespace

WarpSpec random_spec(uint64_t seed, int channels, int keypoints, const SpecRanges& ranges) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<KeypointWarp>> per_channel(static_cast<size_t>(channels));
    for (auto& channel : per_channel) {
        channel.reserve(static_cast<size_t>(keypoints));
        for (int i = 0; i < keypoints; ++i) {
            KeypointWarp kw;
            kw.k.x = uniform(rng, -ranges.k_extent, ranges.k_extent);
            kw.k.y = uniform(rng, -ranges.k_extent, ranges.k_extent);
            kw.rho = uniform(rng, ranges.rho_min, ranges.rho_max);
            kw.sx = std::exp(uniform(rng, -ranges.log_scale_extent, ranges.log_scale_extent));
            kw.sy = std::exp(uniform(rng, -ranges.log_scale_extent, ranges.log_scale_extent));
            kw.theta = uniform(rng, -ranges.theta_extent, ranges.theta_extent);
            kw.tx = uniform(rng, -ranges.t_extent, ranges.t_extent);
            kw.ty = uniform(rng, -ranges.t_extent, ranges.t_extent);
            channel.push_back(kw);
        }
    }
    return WarpSpec(std::move(per_channel));
}

WarpSpec identity_spec(uint64_t seed, int channels, int keypoints) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<KeypointWarp>> per_channel(static_cast<size_t>(channels));
    for (auto& channel : per_channel) {
        for (int i = 0; i < keypoints; ++i) {
            channel.push_back(KeypointWarp::identity_at(
                {uniform(rng, -0.7, 0.7), uniform(rng, -0.7, 0.7)}));
        }
    }
    return WarpSpec(std::move(per_channel));
}

FeatureMap smooth_test_image(uint64_t seed, int channels, int h, int w, int max_cycles) {
    std::mt19937_64 rng(seed);
    FeatureMap map(channels, h, w);
    constexpr int kComponents = 3;
    for (int c = 0; c < channels; ++c) {
        double amp[kComponents], fx[kComponents], fy[kComponents], phase[kComponents];
        for (int k = 0; k < kComponents; ++k) {
            amp[k] = uniform(rng, 0.05, 0.15);
            fx[k] = uniform(rng, -static_cast<double>(max_cycles), max_cycles);
            fy[k] = uniform(rng, -static_cast<double>(max_cycles), max_cycles);
            phase[k] = uniform(rng, 0.0, kTwoPi);
        }
        for (int r = 0; r < h; ++r) {
            const double v = static_cast<double>(r) / (h - 1);
            for (int col = 0; col < w; ++col) {
                const double u = static_cast<double>(col) / (w - 1);
                double value = 0.5;
                for (int k = 0; k < kComponents; ++k) {
                    value += amp[k] * std::sin(kTwoPi * (fx[k] * u + fy[k] * v) + phase[k]);
                }
                map.at(c, r, col) = static_cast<float>(value);
            }
        }
    }
    return map;
}

GradCheckSetup gradcheck_setup(uint64_t seed, int channels, int keypoints, int h, int w,
                               int coarse_factor) {
    // Very low image frequencies and wide keypoint influence keep the
    // finite differences clear of the bilinear cell boundaries.
    SpecRanges ranges;
    ranges.k_extent = 0.6;
    ranges.rho_min = 0.5;
    ranges.rho_max = 2.5;
    ranges.log_scale_extent = 0.1;
    ranges.theta_extent = 0.3;
    ranges.t_extent = 0.08;
    return {smooth_test_image(seed, channels, h, w, 1),
            smooth_test_image(seed + 1, channels, h, w, 1),
            random_spec(seed + 2, channels, keypoints, ranges),
            CoarseGridConfig(coarse_factor, h, w)};
}

DisplacementField random_smooth_flow(uint64_t seed, int h, int w, double amplitude) {
    std::mt19937_64 rng(seed);
    DisplacementField field(h, w);
    double fx[2], fy[2], phase[2];
    for (int k = 0; k < 2; ++k) {
        fx[k] = uniform(rng, -2.0, 2.0);
        fy[k] = uniform(rng, -2.0, 2.0);
        phase[k] = uniform(rng, 0.0, kTwoPi);
    }
    const double half = 0.5 * amplitude;
    for (int r = 0; r < h; ++r) {
        const double v = static_cast<double>(r) / (h - 1);
        for (int col = 0; col < w; ++col) {
            const double u = static_cast<double>(col) / (w - 1);
            field.dx(r, col) = half * std::sin(kTwoPi * (fx[0] * u + fy[0] * v) + phase[0]);
            field.dy(r, col) = half * std::sin(kTwoPi * (fx[1] * u + fy[1] * v) + phase[1]);
        }
    }
    return field;
}

}  // namespace lawwarp
