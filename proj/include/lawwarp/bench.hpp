#pragma once

#include <cstdint>

#include "lawwarp/types.hpp"

namespace lawwarp {

enum class WarpStrategy {
    GlobalAffine,  // one 6-dof affine per channel
    LocalAffine,   // N keypoints x 8 dof per channel
    DenseFlow,     // 2*H*W values per channel, field supplied directly
};

const char* strategy_name(WarpStrategy s);

/// Closed-form degree-of-freedom count: 6C, 8NC, 2HWC.
int64_t dof_count(WarpStrategy s, int channels, int keypoints, int h, int w);

/// dof(Global) < dof(Local) and dof(Local) <= dof(DenseFlow)/10.
/// Returns the truth value for the given dims (false documents where
/// the inequality chain breaks on degenerate sizes).
bool verify_ordering(int channels, int keypoints, int h, int w);

struct BenchConfig {
    int height = 240;
    int width = 240;
    int channels = 4;
    int keypoints = 8;
    int coarse_factor = 4;
    int repetitions = 20;
    int warmups = 3;
    bool parallel = false;  // single-threaded by default for stable numbers
    uint64_t seed = 0;
};

struct StrategyTiming {
    WarpStrategy strategy = WarpStrategy::LocalAffine;
    int64_t dof = 0;
    double ms_median = 0.0;
    double fps_median = 0.0;
    double fps_iqr = 0.0;
};

struct BenchReport {
    BenchConfig config;
    std::vector<StrategyTiming> results;  // Global, Local, DenseFlow; single-threaded
    /// Same strategies with the library's worker threads enabled; only
    /// filled when the config asks for parallelism.
    std::vector<StrategyTiming> parallel_results;
    /// Observed single-threaded fps_median ordering Global >= Local > DenseFlow.
    bool ordering_matches_reference = false;
};

/// Times field evaluation + sampling per strategy; timers wrap only the
/// compute calls. The dense-flow field is pre-generated so only warping
/// is measured. Global affine runs as a degenerate local-affine spec
/// (N=1, rho=0) so all strategies share the sampler. Runs are
/// single-threaded for stable numbers; config.parallel additionally
/// times the multi-threaded path and reports both.
BenchReport run_bench(const BenchConfig& config = {});

/// Milliseconds per frame for the coarse field evaluation alone; used
/// to probe how the cost scales with the keypoint count.
double time_field_evaluation_ms(const WarpSpec& spec, const CoarseGridConfig& cfg,
                                int repetitions);

}  // namespace lawwarp
