#include "meshsmith/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace meshsmith::kernels {

namespace {

void matmul_scalar(const double* a, const double* b, double* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(double) * static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add_rowvec_scalar(double* a, int m, int n, const double* b) {
  for (int i = 0; i < m; ++i) {
    double* row = a + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += b[j];
  }
}

void relu_scalar(const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void colmean_scalar(const double* a, int m, int n, double* mu) {
  for (int j = 0; j < n; ++j) mu[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) mu[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (int j = 0; j < n; ++j) mu[j] *= inv;
}

void colvar_about_scalar(const double* a, int m, int n, const double* s, double* out) {
  for (int j = 0; j < n; ++j) out[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double d = row[j] - s[j];
      out[j] += d * d;
    }
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (int j = 0; j < n; ++j) out[j] *= inv;
}

void norm_affine_scalar(const double* a, int m, int n, const double* c, const double* inv,
                        const double* g, const double* b, double* y) {
  for (int i = 0; i < m; ++i) {
    const double* row = a + static_cast<size_t>(i) * n;
    double* yrow = y + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) yrow[j] = g[j] * (row[j] - c[j]) * inv[j] + b[j];
  }
}

double dot_scalar(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

constexpr double kFourSqrt3 = 4.0 * 1.7320508075688772935;

void tri_transformed_scalar(const double* ax, const double* ay, const double* bx,
                            const double* by, const double* cx, const double* cy,
                            int count, double* f) {
  for (int t = 0; t < count; ++t) {
    const double abx = bx[t] - ax[t], aby = by[t] - ay[t];
    const double acx = cx[t] - ax[t], acy = cy[t] - ay[t];
    const double bcx = cx[t] - bx[t], bcy = cy[t] - by[t];
    const double s = 0.5 * (abx * acy - aby * acx);
    const double e2 = abx * abx + aby * aby + acx * acx + acy * acy + bcx * bcx + bcy * bcy;
    f[t] = 1.0 - kFourSqrt3 * s / e2;
  }
}

const Backend kScalar = {
    "scalar",         matmul_scalar,      add_rowvec_scalar, relu_scalar,
    colmean_scalar,   colvar_about_scalar, norm_affine_scalar, dot_scalar,
    tri_transformed_scalar,
};

const Backend* pick_backend() {
  const char* force = std::getenv("MESHSMITH_KERNELS");
  if (force != nullptr) {
    if (std::strcmp(force, "scalar") == 0) return &kScalar;
    if (std::strcmp(force, "avx2") == 0 && avx2_backend() != nullptr) return avx2_backend();
  }
  if (const Backend* v = avx2_backend()) return v;
  return &kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

#ifndef MESHSMITH_KERNELS_AVX2
const Backend* avx2_backend() { return nullptr; }
#endif

const Backend& active() {
  static const Backend* chosen = pick_backend();
  return *chosen;
}

}  // namespace meshsmith::kernels
