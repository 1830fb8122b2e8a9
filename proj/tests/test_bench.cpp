#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "lawwarp/bench.hpp"
#include "lawwarp/synthetic.hpp"

using namespace lawwarp;

TEST_CASE("degree-of-freedom counts") {
    CHECK(dof_count(WarpStrategy::LocalAffine, 1, 8, 60, 60) == 64);
    CHECK(dof_count(WarpStrategy::GlobalAffine, 1, 8, 60, 60) == 6);
    CHECK(dof_count(WarpStrategy::DenseFlow, 1, 8, 64, 64) == 8192);
    CHECK(dof_count(WarpStrategy::DenseFlow, 256, 8, 60, 60) == 2LL * 60 * 60 * 256);
    CHECK_THROWS_AS(dof_count(WarpStrategy::LocalAffine, 0, 8, 60, 60), std::invalid_argument);
}

TEST_CASE("dof counts match brute-force parameter enumeration") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int channels = 1 + static_cast<int>(rng() % 8);
        const int keypoints = 1 + static_cast<int>(rng() % 12);
        const int h = 8 + static_cast<int>(rng() % 64);
        const int w = 8 + static_cast<int>(rng() % 64);

        // Local affine: count the scalars actually stored in a WarpSpec.
        const WarpSpec spec = random_spec(trial, channels, keypoints);
        int64_t local = 0;
        for (int c = 0; c < spec.channels(); ++c) {
            for ([[maybe_unused]] const KeypointWarp& kw : spec.channel(c)) {
                local += 2 + 1 + 2 + 1 + 2;  // k, rho, (sx, sy), theta, (tx, ty)
            }
        }
        CHECK(local == dof_count(WarpStrategy::LocalAffine, channels, keypoints, h, w));

        // Global affine: one 2x3 matrix per channel.
        int64_t global = 0;
        for (int c = 0; c < channels; ++c) {
            global += std::array<double, 6>{}.size();
        }
        CHECK(global == dof_count(WarpStrategy::GlobalAffine, channels, keypoints, h, w));

        // Dense flow: a full displacement field per channel.
        int64_t dense = 0;
        for (int c = 0; c < channels; ++c) {
            dense += static_cast<int64_t>(DisplacementField(h, w).data.size());
        }
        CHECK(dense == dof_count(WarpStrategy::DenseFlow, channels, keypoints, h, w));
    }
}

TEST_CASE("dof ordering of Table-style configurations") {
    CHECK(verify_ordering(256, 8, 60, 60));
    CHECK(verify_ordering(4, 8, 240, 240));
    // tiny maps break the "much smaller than dense flow" claim
    CHECK_FALSE(verify_ordering(1, 8, 4, 4));
    // one keypoint still costs more parameters than a global affine
    CHECK(dof_count(WarpStrategy::LocalAffine, 3, 1, 32, 32) >
          dof_count(WarpStrategy::GlobalAffine, 3, 1, 32, 32));
}

TEST_CASE("bench smoke run") {
    BenchConfig config;
    config.height = 64;
    config.width = 64;
    config.channels = 2;
    config.keypoints = 4;
    config.coarse_factor = 2;
    config.repetitions = 5;
    config.warmups = 1;
    const BenchReport report = run_bench(config);
    REQUIRE(report.results.size() == 3);
    CHECK(report.results[0].strategy == WarpStrategy::GlobalAffine);
    CHECK(report.results[1].strategy == WarpStrategy::LocalAffine);
    CHECK(report.results[2].strategy == WarpStrategy::DenseFlow);
    for (const StrategyTiming& t : report.results) {
        CHECK(t.fps_median > 0.0);
        CHECK(t.ms_median > 0.0);
        CHECK(t.fps_iqr >= 0.0);
    }
    CHECK(report.results[0].dof == 12);
    CHECK(report.results[1].dof == 64);
    CHECK(report.results[2].dof == 2 * 64 * 64 * 2);
    CHECK(report.parallel_results.empty());

    config.parallel = true;
    const BenchReport both = run_bench(config);
    REQUIRE(both.parallel_results.size() == 3);
    for (const StrategyTiming& t : both.parallel_results) {
        CHECK(t.fps_median > 0.0);
    }
}

TEST_CASE("field evaluation scales at most linearly in the keypoint count") {
    const CoarseGridConfig cfg(1, 120, 120);
    const int n_small = 8, n_large = 64;
    const double t_small =
        time_field_evaluation_ms(random_spec(5, 1, n_small), cfg, 15);
    const double t_large =
        time_field_evaluation_ms(random_spec(5, 1, n_large), cfg, 15);
    REQUIRE(t_small > 0.0);
    const double slope = std::log(t_large / t_small) /
                         std::log(static_cast<double>(n_large) / n_small);
    CHECK(slope <= 1.2);
}
