#pragma once

#include <cstddef>
#include <functional>

namespace trajdiv::kernels {

// Dense kernels used by the autodiff ops, in serial reference and
// OpenMP-parallel form. The parallel paths split work by output row and keep
// the per-element accumulation order identical to the reference, so results
// are bit-identical for any worker count; tests rely on that.

// C = A * B. A is m x k, B is k x n, C is m x n (overwritten).
void gemm_nn_ref(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n, int workers);

// C += A * B^T. A is m x n, B is k x n, C is m x k.
void gemm_nt_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t n, std::size_t k, int workers);

// C += A^T * B. A is m x k, B is m x n, C is k x n.
void gemm_tn_acc(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n, int workers);

// Runs fn(i) for i in [0, n). Iterations must write disjoint state; under
// that contract the result is identical for any worker count. The default
// uses dynamic scheduling for coarse, uneven tasks (scene evaluation); the
// static variant suits fine uniform loops (distance updates, generation).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);
void parallel_for_static(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

int hardware_workers();
bool openmp_enabled();

}  // namespace trajdiv::kernels
