#include "lawwarp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lawwarp::parallel {

namespace {

int initial_cap() {
    if (const char* env = std::getenv("LAWWARP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    return 0;  // auto
}

std::atomic<int>& cap() {
    static std::atomic<int> value{initial_cap()};
    return value;
}

int resolve(int configured) {
    if (configured > 0) {
        return configured;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

constexpr int64_t kMinGrainPerThread = 256;

}  // namespace

int max_threads() {
    return resolve(cap().load(std::memory_order_relaxed));
}

void set_max_threads(int n) {
    cap().store(n < 0 ? 0 : n, std::memory_order_relaxed);
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& fn) {
    const int64_t count = end - begin;
    if (count <= 0) {
        return;
    }
    const int workers = std::min<int64_t>(max_threads(), std::max<int64_t>(1, count / kMinGrainPerThread));
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    const int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    int64_t next = begin + chunk;
    for (int i = 1; i < workers && next < end; ++i) {
        const int64_t lo = next;
        const int64_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
        next = hi;
    }
    fn(begin, std::min(end, begin + chunk));
}

ThreadLimitGuard::ThreadLimitGuard(int n) : saved_(cap().load(std::memory_order_relaxed)) {
    set_max_threads(n);
}

ThreadLimitGuard::~ThreadLimitGuard() {
    cap().store(saved_, std::memory_order_relaxed);
}

}  // namespace lawwarp::parallel
