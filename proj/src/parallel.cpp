#include "wt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace wt {

namespace {

int detect_threads() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("WT_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}

std::atomic<bool> g_serial{false};

}  // namespace

int max_threads() {
    static int n = detect_threads();
    return n;
}

void set_serial_mode(bool serial) { g_serial.store(serial, std::memory_order_relaxed); }

bool serial_mode() { return g_serial.load(std::memory_order_relaxed); }

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int nthreads = serial_mode() ? 1 : std::min(max_threads(), n);
    if (nthreads <= 1 || n < 32) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nthreads - 1);
    int chunk = (n + nthreads - 1) / nthreads;
    auto run_range = [&fn](int lo, int hi) {
        for (int i = lo; i < hi; ++i) fn(i);
    };
    for (int t = 1; t < nthreads; ++t) {
        int lo = t * chunk;
        int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back(run_range, lo, hi);
    }
    run_range(0, std::min(n, chunk));
    for (auto& w : workers) w.join();
}

}  // namespace wt
