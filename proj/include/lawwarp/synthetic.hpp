#pragma once

#include <cstdint>

#include "lawwarp/types.hpp"

namespace lawwarp {

/// Parameter ranges for seeded random specs. Defaults give smooth,
/// moderate fields that stay clear of the sampler borders.
struct SpecRanges {
    double k_extent = 0.7;          // keypoints uniform in [-k_extent, k_extent]^2
    double rho_min = 0.5;
    double rho_max = 6.0;
    double log_scale_extent = 0.2;  // sx, sy = exp(U(-e, e))
    double theta_extent = 0.5;
    double t_extent = 0.2;
};

/// Deterministic across platforms: draws come from mt19937_64 mapped to
/// doubles explicitly, never through distribution objects.
WarpSpec random_spec(uint64_t seed, int channels, int keypoints, const SpecRanges& ranges = {});

/// Identity affine parameters at seeded random positions.
WarpSpec identity_spec(uint64_t seed, int channels, int keypoints);

/// Band-limited test image: a fixed offset plus a few random sinusoids
/// with at most max_cycles periods per axis. Values stay inside (0, 1),
/// so there is no clamping anywhere.
FeatureMap smooth_test_image(uint64_t seed, int channels, int h, int w, int max_cycles = 4);

/// Low-frequency displacement field with |v| <= amplitude, for feeding
/// dense-flow paths.
DisplacementField random_smooth_flow(uint64_t seed, int h, int w, double amplitude);

/// Canonical seeded inputs for the gradient check: a very smooth map
/// and target plus a gentle random spec whose displacements stay away
/// from the sampler borders.
struct GradCheckSetup {
    FeatureMap map;
    FeatureMap target;
    WarpSpec spec;
    CoarseGridConfig cfg;
};

GradCheckSetup gradcheck_setup(uint64_t seed, int channels, int keypoints, int h, int w,
                               int coarse_factor);

}  // namespace lawwarp
