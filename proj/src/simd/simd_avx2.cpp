#include "wt/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

// AVX2+FMA variants of the RBF row kernels. Compiled with -mavx2 -mfma in its
// own translation unit; only reached through the runtime dispatch table.

namespace wt::simd {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// exp(x) for 4 doubles, Cephes-style: exact Cody-Waite range reduction plus a
// rational approximation of exp on [-ln2/2, ln2/2]. Accuracy ~1-2 ulp.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d half = _mm256_set1_pd(0.5);

    const __m256d lo_cut = _mm256_set1_pd(-708.0);
    const __m256d hi_cut = _mm256_set1_pd(709.78);
    __m256d under = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
    __m256d over = _mm256_cmp_pd(x, hi_cut, _CMP_GT_OQ);
    __m256d xc = _mm256_max_pd(_mm256_min_pd(x, hi_cut), lo_cut);

    __m256d n = _mm256_round_pd(_mm256_fmadd_pd(xc, log2e, half),
                                _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, c1, xc);
    r = _mm256_fnmadd_pd(n, c2, r);
    __m256d z = _mm256_mul_pd(r, r);

    __m256d pz = _mm256_fmadd_pd(p0, z, p1);
    pz = _mm256_fmadd_pd(pz, z, p2);
    __m256d px = _mm256_mul_pd(r, pz);

    __m256d qz = _mm256_fmadd_pd(q0, z, q1);
    qz = _mm256_fmadd_pd(qz, z, q2);
    qz = _mm256_fmadd_pd(qz, z, q3);

    __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qz, px));
    __m256d y = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, one);

    // Scale by 2^n via the exponent field; n is integral in [-1021, 1025].
    __m128i n32 = _mm256_cvtpd_epi32(n);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    __m256i expo = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    y = _mm256_mul_pd(y, _mm256_castsi256_pd(expo));

    y = _mm256_blendv_pd(y, _mm256_setzero_pd(), under);
    y = _mm256_blendv_pd(y, _mm256_set1_pd(HUGE_VAL), over);
    return y;
}

inline __m256d minimal_image_pd(__m256d r, __m256d period, __m256d inv_period,
                                __m256d half_period) {
    __m256d q = _mm256_fmadd_pd(r, inv_period, _mm256_set1_pd(0.5));
    __m256d f = _mm256_round_pd(q, _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m256d d = _mm256_fnmadd_pd(f, period, r);
    __m256d ge = _mm256_cmp_pd(d, half_period, _CMP_GE_OQ);
    d = _mm256_sub_pd(d, _mm256_and_pd(ge, period));
    __m256d lt = _mm256_cmp_pd(d, _mm256_sub_pd(_mm256_setzero_pd(), half_period),
                               _CMP_LT_OQ);
    d = _mm256_add_pd(d, _mm256_and_pd(lt, period));
    return d;
}

// Strided column load: Z[(a+lane)*d + j] for lanes 0..3.
inline __m256d load_col(const double* Z, int a, int d, int j) {
    const double* p = Z + static_cast<size_t>(a) * d + j;
    return _mm256_set_pd(p[3 * d], p[2 * d], p[1 * d], p[0]);
}

void exp_array_avx2(const double* x, int n, double* y) {
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, exp_pd(_mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) y[i] = std::exp(x[i]);
}

void sqdist_row_avx2(const RbfSpec& spec, const double* x, const double* Z, int m,
                     double* out) {
    const int d = spec.dim;
    const __m256d period = _mm256_set1_pd(spec.period);
    const __m256d inv_period = _mm256_set1_pd(1.0 / spec.period);
    const __m256d half_period = _mm256_set1_pd(0.5 * spec.period);
    int a = 0;
    for (; a + 4 <= m; a += 4) {
        __m256d s2 = _mm256_setzero_pd();
        for (int j = 0; j < d; ++j) {
            __m256d diff = _mm256_sub_pd(load_col(Z, a, d, j), _mm256_set1_pd(x[j]));
            if (spec.torus) diff = minimal_image_pd(diff, period, inv_period, half_period);
            s2 = _mm256_fmadd_pd(diff, diff, s2);
        }
        _mm256_storeu_pd(out + a, s2);
    }
    if (a < m) scalar_ops.sqdist_row(spec, x, Z + static_cast<size_t>(a) * d, m - a, out + a);
}

constexpr int kMaxDim = 8;

void rbf_row_euclid(const RbfSpec& spec, const double* x, const double* Z, int m,
                    const double* weights, double* row, double* sum, double* grad) {
    const int d = spec.dim;
    const __m256d inv2h2 = _mm256_set1_pd(spec.inv_two_h2);
    __m256d acc = _mm256_setzero_pd();
    __m256d gacc[kMaxDim];
    __m256d u[kMaxDim];
    for (int j = 0; j < d; ++j) gacc[j] = _mm256_setzero_pd();

    int a = 0;
    for (; a + 4 <= m; a += 4) {
        __m256d s2 = _mm256_setzero_pd();
        for (int j = 0; j < d; ++j) {
            __m256d diff = _mm256_sub_pd(load_col(Z, a, d, j), _mm256_set1_pd(x[j]));
            u[j] = diff;
            s2 = _mm256_fmadd_pd(diff, diff, s2);
        }
        __m256d k = exp_pd(_mm256_mul_pd(s2, _mm256_sub_pd(_mm256_setzero_pd(), inv2h2)));
        if (row) _mm256_storeu_pd(row + a, k);
        __m256d wk = weights ? _mm256_mul_pd(_mm256_loadu_pd(weights + a), k) : k;
        acc = _mm256_add_pd(acc, wk);
        if (grad) {
            for (int j = 0; j < d; ++j) gacc[j] = _mm256_fmadd_pd(wk, u[j], gacc[j]);
        }
    }

    double tail_sum = 0.0;
    if (a < m) {
        scalar_ops.rbf_row(spec, x, Z + static_cast<size_t>(a) * d, m - a,
                           weights ? weights + a : nullptr, row ? row + a : nullptr,
                           &tail_sum, grad);
    }
    if (sum) *sum += hsum(acc) + tail_sum;
    if (grad) {
        for (int j = 0; j < d; ++j) grad[j] += hsum(gacc[j]) * spec.inv_h2;
    }
}

void rbf_row_torus(const RbfSpec& spec, const double* x, const double* Z, int m,
                   const double* weights, double* row, double* sum, double* grad) {
    const int d = spec.dim;
    const int W = spec.wrap_images;
    const __m256d period = _mm256_set1_pd(spec.period);
    const __m256d inv_period = _mm256_set1_pd(1.0 / spec.period);
    const __m256d half_period = _mm256_set1_pd(0.5 * spec.period);
    const __m256d neg_inv2h2 = _mm256_set1_pd(-spec.inv_two_h2);

    __m256d acc = _mm256_setzero_pd();
    __m256d gacc[kMaxDim];
    __m256d S[kMaxDim], T[kMaxDim];
    for (int j = 0; j < d; ++j) gacc[j] = _mm256_setzero_pd();

    int a = 0;
    for (; a + 4 <= m; a += 4) {
        for (int j = 0; j < d; ++j) {
            __m256d diff = _mm256_sub_pd(load_col(Z, a, d, j), _mm256_set1_pd(x[j]));
            __m256d uj = minimal_image_pd(diff, period, inv_period, half_period);
            __m256d sj = _mm256_setzero_pd();
            __m256d tj = _mm256_setzero_pd();
            for (int i = -W; i <= W; ++i) {
                __m256d t = _mm256_fmadd_pd(_mm256_set1_pd(static_cast<double>(i)), period, uj);
                __m256d e = exp_pd(_mm256_mul_pd(_mm256_mul_pd(t, t), neg_inv2h2));
                sj = _mm256_add_pd(sj, e);
                tj = _mm256_fmadd_pd(t, e, tj);
            }
            S[j] = sj;
            T[j] = tj;
        }
        __m256d k = S[0];
        for (int j = 1; j < d; ++j) k = _mm256_mul_pd(k, S[j]);
        if (row) _mm256_storeu_pd(row + a, k);
        __m256d w = weights ? _mm256_loadu_pd(weights + a) : _mm256_set1_pd(1.0);
        acc = _mm256_fmadd_pd(w, k, acc);
        if (grad) {
            for (int j = 0; j < d; ++j) {
                __m256d p = _mm256_set1_pd(1.0);
                for (int l = 0; l < d; ++l) {
                    if (l != j) p = _mm256_mul_pd(p, S[l]);
                }
                gacc[j] = _mm256_fmadd_pd(_mm256_mul_pd(w, T[j]), p, gacc[j]);
            }
        }
    }

    double tail_sum = 0.0;
    if (a < m) {
        scalar_ops.rbf_row(spec, x, Z + static_cast<size_t>(a) * d, m - a,
                           weights ? weights + a : nullptr, row ? row + a : nullptr,
                           &tail_sum, grad);
    }
    if (sum) *sum += hsum(acc) + tail_sum;
    if (grad) {
        for (int j = 0; j < d; ++j) grad[j] += hsum(gacc[j]) * spec.inv_h2;
    }
}

void rbf_row_avx2(const RbfSpec& spec, const double* x, const double* Z, int m,
                  const double* weights, double* row, double* sum, double* grad) {
    if (spec.dim > kMaxDim) {
        scalar_ops.rbf_row(spec, x, Z, m, weights, row, sum, grad);
        return;
    }
    if (spec.torus) {
        rbf_row_torus(spec, x, Z, m, weights, row, sum, grad);
    } else {
        rbf_row_euclid(spec, x, Z, m, weights, row, sum, grad);
    }
}

}  // namespace

const Ops avx2_ops = {
    sqdist_row_avx2,
    exp_array_avx2,
    rbf_row_avx2,
};

}  // namespace wt::simd

#endif  // x86_64
