#pragma once

#include <cstdint>

#include "matnet/real.hpp"

// Dense kernels behind the autodiff ops and the instance generators.
// Each kernel has a plain serial version under kernels::serial and an
// OpenMP front door that falls back to it for small sizes or when
// already inside a parallel region. The serial versions double as the
// reference in tests and in the kernel benchmark tool.
namespace matnet::kernels {

namespace serial {

// C = A(m x k) * B(k x n)
void matmul_nn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);
// C = A(m x k) * B(n x k)^T
void matmul_nt(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);
// C = A(k x m)^T * B(k x n)
void matmul_tn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);

// One min-plus relaxation pass: out[i][j] = min_k (d[i][k] + d[k][j]).
// Returns true when out differs from d somewhere.
bool minplus_pass(const double* d, double* out, int n);

}  // namespace serial

void matmul_nn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);
void matmul_nt(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);
void matmul_tn(const real_t* a, const real_t* b, real_t* c, std::int64_t m, std::int64_t k,
               std::int64_t n);
bool minplus_pass(const double* d, double* out, int n);

}  // namespace matnet::kernels
