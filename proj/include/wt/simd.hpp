#pragma once

#include <string>

namespace wt::simd {

enum class Backend { Scalar, Avx2 };

/// Parameters of the Gaussian RBF row kernels. On the torus the kernel is the
/// image-sum of the RBF over the integer lattice truncated at wrap_images per
/// axis; the sum factorizes over axes, which is what the kernels exploit.
struct RbfSpec {
    int dim = 1;
    double inv_two_h2 = 0.5;  // 1/(2h^2)
    double inv_h2 = 1.0;      // 1/h^2
    bool torus = false;
    double period = 1.0;
    int wrap_images = 3;
};

/// Hot inner loops, one function table per backend. All primitives are pure
/// per-entry computations: results do not depend on how callers parallelize
/// over query rows.
struct Ops {
    /// out[a] = squared distance (minimal image on torus) between x and row a of Z.
    void (*sqdist_row)(const RbfSpec& spec, const double* x, const double* Z, int m,
                       double* out);

    /// y[i] = exp(x[i]) elementwise.
    void (*exp_array)(const double* x, int n, double* y);

    /// Fused RBF row over the m basis rows z_a of Z (row-major m x dim):
    ///   row[a]   = k(x, z_a)                         when row  != nullptr
    ///   *sum    += sum_a w_a * k(x, z_a)              when sum  != nullptr
    ///   grad[j] += sum_a w_a * d k(x, z_a) / d x_j    when grad != nullptr
    /// with w_a = weights[a] (w_a = 1 when weights == nullptr).
    void (*rbf_row)(const RbfSpec& spec, const double* x, const double* Z, int m,
                    const double* weights, double* row, double* sum, double* grad);
};

extern const Ops scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const Ops avx2_ops;
#endif

bool avx2_supported();
Backend active_backend();
/// Select the backend globally (startup / test use; not thread-safe against
/// concurrent kernel calls).
void set_backend(Backend b);
/// Best supported backend (Avx2 when the CPU has AVX2+FMA, else Scalar).
Backend best_backend();
std::string backend_name(Backend b);

const Ops& ops();

}  // namespace wt::simd
