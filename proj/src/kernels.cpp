#include "matnet/kernels.hpp"

#include <algorithm>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace matnet::kernels {

namespace serial {

void matmul_nn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    real_t* ci = c + i * n;
    std::fill(ci, ci + n, real_t{0});
    const real_t* ai = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const real_t av = ai[p];
      const real_t* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_nt(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const real_t* ai = a + i * k;
    real_t* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const real_t* bj = b + j * k;
      real_t acc = 0;
      for (std::int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_tn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  std::fill(c, c + m * n, real_t{0});
  for (std::int64_t p = 0; p < k; ++p) {
    const real_t* ap = a + p * m;
    const real_t* bp = b + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      const real_t av = ap[i];
      real_t* ci = c + i * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

bool minplus_pass(const double* d, double* out, int n) {
  bool changed = false;
  for (int i = 0; i < n; ++i) {
    const double* di = d + static_cast<std::int64_t>(i) * n;
    double* oi = out + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double best = di[j];
      for (int k = 0; k < n; ++k) {
        const double cand = di[k] + d[static_cast<std::int64_t>(k) * n + j];
        if (cand < best) best = cand;
      }
      oi[j] = best;
      if (best != di[j]) changed = true;
    }
  }
  return changed;
}

}  // namespace serial

namespace {

inline bool use_parallel(std::int64_t work) {
#if defined(_OPENMP)
  return work >= (1 << 16) && !omp_in_parallel() && omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}

}  // namespace

void matmul_nn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  if (!use_parallel(m * k * n)) {
    serial::matmul_nn(a, b, c, m, k, n);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    real_t* ci = c + i * n;
    std::fill(ci, ci + n, real_t{0});
    const real_t* ai = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const real_t av = ai[p];
      const real_t* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
#endif
}

void matmul_nt(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  if (!use_parallel(m * k * n)) {
    serial::matmul_nt(a, b, c, m, k, n);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const real_t* ai = a + i * k;
    real_t* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const real_t* bj = b + j * k;
      real_t acc = 0;
      for (std::int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
#endif
}

void matmul_tn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
  if (!use_parallel(m * k * n)) {
    serial::matmul_tn(a, b, c, m, k, n);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    real_t* ci = c + i * n;
    std::fill(ci, ci + n, real_t{0});
    for (std::int64_t p = 0; p < k; ++p) {
      const real_t av = a[p * m + i];
      const real_t* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
#endif
}

bool minplus_pass(const double* d, double* out, int n) {
  if (!use_parallel(static_cast<std::int64_t>(n) * n * n)) return serial::minplus_pass(d, out, n);
#if defined(_OPENMP)
  bool changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
  for (int i = 0; i < n; ++i) {
    const double* di = d + static_cast<std::int64_t>(i) * n;
    double* oi = out + static_cast<std::int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double best = di[j];
      for (int k = 0; k < n; ++k) {
        const double cand = di[k] + d[static_cast<std::int64_t>(k) * n + j];
        if (cand < best) best = cand;
      }
      oi[j] = best;
      if (best != di[j]) changed = true;
    }
  }
  return changed;
#else
  return serial::minplus_pass(d, out, n);
#endif
}

}  // namespace matnet::kernels
