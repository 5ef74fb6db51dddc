#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "bgan/matrix.hpp"

// Numeric kernels backing the hot loops. Every kernel comes in a serial
// reference version and an OpenMP version built on the same per-element
// microkernels, so the two produce bit-identical results and the parallel
// path can be validated by exact comparison. Reductions use a fixed chunk
// grid that does not depend on the thread count, which keeps accumulation
// order (and therefore rounding) stable across 1..N threads.
namespace bgan::kernels {

// Global switch between the serial reference and the OpenMP path.
// Thread count is controlled through omp_set_num_threads / set_threads.
bool serial_mode();
void set_serial(bool on);
int max_threads();
void set_threads(int n);  // n <= 0 leaves the OpenMP default

// C[b,o] = sum_i A[b,i] * W[o,i]   (+ bias[o] if bias != nullptr)
void gemm_nt(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias = nullptr);
void gemm_nt_serial(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias = nullptr);
void gemm_nt_omp(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias = nullptr);

// C[b,i] = sum_o D[b,o] * W[o,i]
void gemm_nn(const Matrix& d, const Matrix& w, Matrix& c);
void gemm_nn_serial(const Matrix& d, const Matrix& w, Matrix& c);
void gemm_nn_omp(const Matrix& d, const Matrix& w, Matrix& c);

// C[o,i] (+)= sum_b D[b,o] * A[b,i]
void gemm_tn(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate = false);
void gemm_tn_serial(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate);
void gemm_tn_omp(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate);

// out[o] (+)= sum_b D[b,o]
void col_sum(const Matrix& d, Vector& out, bool accumulate = false);

// Deterministic sum of f(0..n-1): fixed chunk grid, serial combine.
double det_sum(std::size_t n, const std::function<double(std::size_t)>& f);
double det_sum(std::span<const double> x);

// Row-parallel loop: body(i) for i in [0,n). Bodies must be independent.
void parallel_rows(std::size_t n, const std::function<void(std::size_t)>& body);

double dot(const double* a, const double* b, std::size_t n);

}  // namespace bgan::kernels
