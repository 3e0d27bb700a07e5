#include "wt/simd.hpp"

#include <atomic>
#include <stdexcept>

namespace wt::simd {

namespace {

Backend detect() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Backend::Avx2;
    }
#endif
    return Backend::Scalar;
}

std::atomic<Backend> g_backend{detect()};

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend best_backend() { return detect(); }

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported()) {
        throw std::runtime_error("simd: AVX2 backend not supported on this CPU");
    }
    g_backend.store(b, std::memory_order_relaxed);
}

std::string backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

const Ops& ops() {
#if defined(__x86_64__) || defined(_M_X64)
    if (active_backend() == Backend::Avx2) return avx2_ops;
#endif
    return scalar_ops;
}

}  // namespace wt::simd
