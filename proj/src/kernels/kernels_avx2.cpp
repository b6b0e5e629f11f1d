// AVX2/FMA variants of the kernel table. Compiled with -mavx2 -mfma and
// selected at runtime, so the rest of the library stays baseline-ISA.

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "meshsmith/kernels.hpp"

namespace meshsmith::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void matmul_avx2(const double* a, const double* b, double* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(arow[p]);
      const double* brow = b + static_cast<size_t>(p) * n;
      int j = 0;
      for (; j < n4; j += 4) {
        __m256d cv = _mm256_loadu_pd(crow + j);
        cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
        _mm256_storeu_pd(crow + j, cv);
      }
      for (; j < n; ++j) crow[j] += arow[p] * brow[j];
    }
  }
}

void add_rowvec_avx2(double* a, int m, int n, const double* b) {
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    double* row = a + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j < n4; j += 4)
      _mm256_storeu_pd(row + j, _mm256_add_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(b + j)));
    for (; j < n; ++j) row[j] += b[j];
  }
}

void relu_avx2(const double* x, double* y, int n) {
  const __m256d zero = _mm256_setzero_pd();
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4) _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void colmean_avx2(const double* a, int m, int n, double* mu) {
  std::memset(mu, 0, sizeof(double) * static_cast<size_t>(n));
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j < n4; j += 4)
      _mm256_storeu_pd(mu + j, _mm256_add_pd(_mm256_loadu_pd(mu + j), _mm256_loadu_pd(row + j)));
    for (; j < n; ++j) mu[j] += row[j];
  }
  const __m256d inv = _mm256_set1_pd(1.0 / static_cast<double>(m));
  int j = 0;
  for (; j < n4; j += 4) _mm256_storeu_pd(mu + j, _mm256_mul_pd(_mm256_loadu_pd(mu + j), inv));
  for (; j < n; ++j) mu[j] /= static_cast<double>(m);
}

void colvar_about_avx2(const double* a, int m, int n, const double* s, double* out) {
  std::memset(out, 0, sizeof(double) * static_cast<size_t>(n));
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j < n4; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(s + j));
      _mm256_storeu_pd(out + j, _mm256_fmadd_pd(d, d, _mm256_loadu_pd(out + j)));
    }
    for (; j < n; ++j) {
      const double d = row[j] - s[j];
      out[j] += d * d;
    }
  }
  const __m256d inv = _mm256_set1_pd(1.0 / static_cast<double>(m));
  int j = 0;
  for (; j < n4; j += 4) _mm256_storeu_pd(out + j, _mm256_mul_pd(_mm256_loadu_pd(out + j), inv));
  for (; j < n; ++j) out[j] /= static_cast<double>(m);
}

void norm_affine_avx2(const double* a, int m, int n, const double* c, const double* inv,
                      const double* g, const double* b, double* y) {
  const int n4 = n & ~3;
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    double* yrow = y + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j < n4; j += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(c + j));
      const __m256d scaled = _mm256_mul_pd(_mm256_mul_pd(_mm256_loadu_pd(g + j), d),
                                           _mm256_loadu_pd(inv + j));
      _mm256_storeu_pd(yrow + j, _mm256_add_pd(scaled, _mm256_loadu_pd(b + j)));
    }
    for (; j < n; ++j) yrow[j] = g[j] * (row[j] - c[j]) * inv[j] + b[j];
  }
}

double dot_avx2(const double* a, const double* b, int n) {
  __m256d acc = _mm256_setzero_pd();
  const int n4 = n & ~3;
  int i = 0;
  for (; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double r = hsum(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

constexpr double kFourSqrt3 = 4.0 * 1.7320508075688772935;

void tri_transformed_avx2(const double* ax, const double* ay, const double* bx,
                          const double* by, const double* cx, const double* cy,
                          int count, double* f) {
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d coef = _mm256_set1_pd(kFourSqrt3);
  const int c4 = count & ~3;
  int t = 0;
  for (; t < c4; t += 4) {
    const __m256d abx = _mm256_sub_pd(_mm256_loadu_pd(bx + t), _mm256_loadu_pd(ax + t));
    const __m256d aby = _mm256_sub_pd(_mm256_loadu_pd(by + t), _mm256_loadu_pd(ay + t));
    const __m256d acx = _mm256_sub_pd(_mm256_loadu_pd(cx + t), _mm256_loadu_pd(ax + t));
    const __m256d acy = _mm256_sub_pd(_mm256_loadu_pd(cy + t), _mm256_loadu_pd(ay + t));
    const __m256d bcx = _mm256_sub_pd(_mm256_loadu_pd(cx + t), _mm256_loadu_pd(bx + t));
    const __m256d bcy = _mm256_sub_pd(_mm256_loadu_pd(cy + t), _mm256_loadu_pd(by + t));
    const __m256d s =
        _mm256_mul_pd(half, _mm256_fmsub_pd(abx, acy, _mm256_mul_pd(aby, acx)));
    __m256d e2 = _mm256_mul_pd(abx, abx);
    e2 = _mm256_fmadd_pd(aby, aby, e2);
    e2 = _mm256_fmadd_pd(acx, acx, e2);
    e2 = _mm256_fmadd_pd(acy, acy, e2);
    e2 = _mm256_fmadd_pd(bcx, bcx, e2);
    e2 = _mm256_fmadd_pd(bcy, bcy, e2);
    const __m256d ratio = _mm256_div_pd(_mm256_mul_pd(coef, s), e2);
    _mm256_storeu_pd(f + t, _mm256_sub_pd(one, ratio));
  }
  if (t < count)
    scalar_backend().tri_transformed(ax + t, ay + t, bx + t, by + t, cx + t, cy + t,
                                     count - t, f + t);
}

const Backend kAvx2 = {
    "avx2",       matmul_avx2,      add_rowvec_avx2, relu_avx2,
    colmean_avx2, colvar_about_avx2, norm_affine_avx2, dot_avx2,
    tri_transformed_avx2,
};

}  // namespace

const Backend* avx2_backend() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") ? &kAvx2 : nullptr;
}

}  // namespace meshsmith::kernels
