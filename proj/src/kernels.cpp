#include "trajdiv/kernels.hpp"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trajdiv::kernels {

void gemm_nn_ref(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::memset(ci, 0, n * sizeof(double));
    const double* ai = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      const double* bk = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, int workers) {
#ifdef _OPENMP
  if (workers > 1 && m > 1) {
#pragma omp parallel for num_threads(workers) schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      std::memset(ci, 0, n * sizeof(double));
      const double* ai = a + i * k;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = ai[kk];
        const double* bk = b + kk * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
      }
    }
    return;
  }
#endif
  (void)workers;
  gemm_nn_ref(a, b, c, m, k, n);
}

void gemm_nt_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t n, std::size_t k, int workers) {
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers > 1 ? workers : 1) schedule(static) if (workers > 1 && m > 1)
#endif
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* bk = b + kk * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += ai[j] * bk[j];
      ci[kk] += acc;
    }
  }
  (void)workers;
}

void gemm_tn_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, int workers) {
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers > 1 ? workers : 1) schedule(static) if (workers > 1 && k > 1)
#endif
  for (std::size_t kk = 0; kk < k; ++kk) {
    double* ck = c + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aik = a[i * k + kk];
      const double* bi = b + i * n;
      for (std::size_t j = 0; j < n; ++j) ck[j] += aik * bi[j];
    }
  }
  (void)workers;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  if (workers > 1 && n > 1) {
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  (void)workers;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void parallel_for_static(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  if (workers > 1 && n > 1) {
#pragma omp parallel for num_threads(workers) schedule(static)
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  (void)workers;
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

int hardware_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace trajdiv::kernels
