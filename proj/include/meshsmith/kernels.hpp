#pragma once

#include <cstddef>

namespace meshsmith::kernels {

/// Data-parallel inner loops behind the model inference path and mesh-wide
/// quality scans. Every entry has a scalar reference implementation; an AVX2
/// variant is selected at runtime when the CPU supports it. The two backends
/// agree to floating-point roundoff (equivalence-tested), not bit-exactly.
struct Backend {
  const char* name;

  // C(m x n) = A(m x k) * B(k x n), row-major, C overwritten.
  void (*matmul)(const double* a, const double* b, double* c, int m, int k, int n);
  // A(m x n) += row vector b[n] on every row.
  void (*add_rowvec)(double* a, int m, int n, const double* b);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, int n);
  // mu[j] = mean over rows of A(m x n) column j.
  void (*colmean)(const double* a, int m, int n, double* mu);
  // out[j] = mean over rows of (A[i][j] - s[j])^2.
  void (*colvar_about)(const double* a, int m, int n, const double* s, double* out);
  // Y[i][j] = g[j] * (A[i][j] - c[j]) * inv[j] + b[j]
  void (*norm_affine)(const double* a, int m, int n, const double* c, const double* inv,
                      const double* g, const double* b, double* y);
  double (*dot)(const double* a, const double* b, int n);
  // Signed transformed aspect-ratio metric per triangle:
  //   f = 1 - 4*sqrt(3)*S / (m^2 + n^2 + l^2)
  // with S the signed area. f < 1 for positively oriented triangles, >= 1
  // for degenerate or inverted ones. Inputs are SoA vertex coordinates.
  void (*tri_transformed)(const double* ax, const double* ay, const double* bx,
                          const double* by, const double* cx, const double* cy,
                          int count, double* f);
};

const Backend& scalar_backend();
// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const Backend* avx2_backend();

/// Backend chosen once per process: AVX2 when available, else scalar.
/// MESHSMITH_KERNELS=scalar|avx2 forces the choice.
const Backend& active();

}  // namespace meshsmith::kernels
