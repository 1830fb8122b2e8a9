#pragma once

#include <cstdint>
#include <functional>

namespace lawwarp::parallel {

/// Worker cap: LAWWARP_THREADS at startup (0 or unset = hardware
/// concurrency), overridable at runtime.
int max_threads();
void set_max_threads(int n);

/// Splits [begin, end) into contiguous chunks across the worker cap and
/// invokes fn(chunk_begin, chunk_end) on each. Falls back to inline
/// execution for small ranges. Chunks never overlap, so writes to
/// disjoint output slots are race-free and results are independent of
/// the thread count.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& fn);

/// Scoped override of the worker cap (benchmarks pin single-threaded
/// runs with it).
class ThreadLimitGuard {
public:
    explicit ThreadLimitGuard(int n);
    ~ThreadLimitGuard();
    ThreadLimitGuard(const ThreadLimitGuard&) = delete;
    ThreadLimitGuard& operator=(const ThreadLimitGuard&) = delete;

private:
    int saved_;
};

}  // namespace lawwarp::parallel
