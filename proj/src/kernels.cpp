#include "bgan/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdint>

namespace bgan::kernels {

namespace {
std::atomic<bool> g_serial{false};
}

bool serial_mode() { return g_serial.load(std::memory_order_relaxed); }
void set_serial(bool on) { g_serial.store(on, std::memory_order_relaxed); }
int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

// Eight-lane accumulation with a fixed combine order: the lanes are
// independent partial sums, so vectorizing them changes nothing about
// the result, and serial and OpenMP paths share the same kernels, so
// their outputs match bitwise.
#if defined(__GNUC__) || defined(__clang__)
#define BGAN_VEC8 1
namespace {
using v8df = double __attribute__((vector_size(64)));

inline v8df load8(const double* p) {
    v8df v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}

inline double reduce8(v8df v, double tail) {
    return (((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]))) + tail;
}
}  // namespace
#endif

double dot(const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    const std::size_t lim = n & ~std::size_t(7);
#ifdef BGAN_VEC8
    v8df acc = {0, 0, 0, 0, 0, 0, 0, 0};
    for (; i < lim; i += 8) acc += load8(a + i) * load8(b + i);
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return reduce8(acc, tail);
#else
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (; i < lim; i += 8)
        for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((acc[0] + acc[1]) + (acc[2] + acc[3])) +
            ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
           tail;
#endif
}

namespace {

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// One output row of C = A W^T, four W rows at a time so the A loads are
// shared across the column block.
inline void gemm_nt_row(const Matrix& a, const Matrix& w, Matrix& c,
                        const Vector* bias, std::size_t b) {
    const std::size_t o_dim = w.rows(), inner = w.cols();
    const double* arow = a.row_ptr(b);
    double* crow = c.row_ptr(b);
    std::size_t o = 0;
#ifdef BGAN_VEC8
    const std::size_t inner_lim = inner & ~std::size_t(7);
    for (; o + 4 <= o_dim; o += 4) {
        const double* w0 = w.row_ptr(o);
        const double* w1 = w.row_ptr(o + 1);
        const double* w2 = w.row_ptr(o + 2);
        const double* w3 = w.row_ptr(o + 3);
        v8df a0 = {0, 0, 0, 0, 0, 0, 0, 0}, a1 = a0, a2 = a0, a3 = a0;
        std::size_t i = 0;
        for (; i < inner_lim; i += 8) {
            const v8df av = load8(arow + i);
            a0 += av * load8(w0 + i);
            a1 += av * load8(w1 + i);
            a2 += av * load8(w2 + i);
            a3 += av * load8(w3 + i);
        }
        double t0 = 0, t1 = 0, t2 = 0, t3 = 0;
        for (; i < inner; ++i) {
            const double av = arow[i];
            t0 += av * w0[i];
            t1 += av * w1[i];
            t2 += av * w2[i];
            t3 += av * w3[i];
        }
        crow[o] = reduce8(a0, t0) + (bias ? (*bias)[o] : 0.0);
        crow[o + 1] = reduce8(a1, t1) + (bias ? (*bias)[o + 1] : 0.0);
        crow[o + 2] = reduce8(a2, t2) + (bias ? (*bias)[o + 2] : 0.0);
        crow[o + 3] = reduce8(a3, t3) + (bias ? (*bias)[o + 3] : 0.0);
    }
#endif
    for (; o < o_dim; ++o) {
        double v = dot(arow, w.row_ptr(o), inner);
        crow[o] = bias ? v + (*bias)[o] : v;
    }
}

inline void gemm_nn_row(const Matrix& d, const Matrix& w, Matrix& c, std::size_t b) {
    const std::size_t o_dim = d.cols(), inner = w.cols();
    const double* drow = d.row_ptr(b);
    double* crow = c.row_ptr(b);
    for (std::size_t i = 0; i < inner; ++i) crow[i] = 0.0;
    for (std::size_t o = 0; o < o_dim; ++o) axpy(drow[o], w.row_ptr(o), crow, inner);
}

// Rank-1 accumulation over a fixed row range: every A row is streamed
// once while the C block stays cache resident.
inline void gemm_tn_range(const Matrix& d, const Matrix& a, Matrix& c, std::size_t b_lo,
                          std::size_t b_hi) {
    const std::size_t o_dim = d.cols(), inner = a.cols();
    for (std::size_t b = b_lo; b < b_hi; ++b) {
        const double* drow = d.row_ptr(b);
        const double* arow = a.row_ptr(b);
        for (std::size_t o = 0; o < o_dim; ++o)
            if (drow[o] != 0.0) axpy(drow[o], arow, c.row_ptr(o), inner);
    }
}

// Fixed chunking over the batch keeps the partial order (and rounding)
// independent of the thread count.
constexpr std::size_t kTnChunks = 8;

void gemm_tn_chunked(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate,
                     bool parallel) {
    const std::size_t b_dim = d.rows();
    const std::size_t chunks = std::min<std::size_t>(kTnChunks, b_dim == 0 ? 1 : b_dim);
    std::vector<Matrix> partial(chunks > 1 ? chunks : 0);
#pragma omp parallel for schedule(static) if (parallel && chunks > 1)
    for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(chunks); ++ci) {
        const std::size_t lo = b_dim * ci / chunks;
        const std::size_t hi = b_dim * (ci + 1) / chunks;
        if (chunks == 1) {
            if (!accumulate) c.fill(0.0);
            gemm_tn_range(d, a, c, lo, hi);
        } else {
            partial[ci] = Matrix(c.rows(), c.cols(), 0.0);
            gemm_tn_range(d, a, partial[ci], lo, hi);
        }
    }
    if (chunks > 1) {
        if (!accumulate) c.fill(0.0);
        for (const Matrix& p : partial)
            for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += p.data()[i];
    }
}

void check_gemm_nt(const Matrix& a, const Matrix& w, const Matrix& c) {
    require(a.cols() == w.cols() && c.rows() == a.rows() && c.cols() == w.rows(),
            "gemm_nt: shape mismatch");
}
void check_gemm_nn(const Matrix& d, const Matrix& w, const Matrix& c) {
    require(d.cols() == w.rows() && c.rows() == d.rows() && c.cols() == w.cols(),
            "gemm_nn: shape mismatch");
}
void check_gemm_tn(const Matrix& d, const Matrix& a, const Matrix& c) {
    require(d.rows() == a.rows() && c.rows() == d.cols() && c.cols() == a.cols(),
            "gemm_tn: shape mismatch");
}

// Fixed chunk grid for deterministic reductions. Depends on n only.
inline std::size_t chunk_count(std::size_t n) {
    const std::size_t target = 64;
    return n < target ? (n == 0 ? 0 : n) : target;
}

}  // namespace

void gemm_nt_serial(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias) {
    check_gemm_nt(a, w, c);
    for (std::size_t b = 0; b < a.rows(); ++b) gemm_nt_row(a, w, c, bias, b);
}

void gemm_nt_omp(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias) {
    check_gemm_nt(a, w, c);
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < n; ++b) gemm_nt_row(a, w, c, bias, static_cast<std::size_t>(b));
}

void gemm_nt(const Matrix& a, const Matrix& w, Matrix& c, const Vector* bias) {
    serial_mode() ? gemm_nt_serial(a, w, c, bias) : gemm_nt_omp(a, w, c, bias);
}

void gemm_nn_serial(const Matrix& d, const Matrix& w, Matrix& c) {
    check_gemm_nn(d, w, c);
    for (std::size_t b = 0; b < d.rows(); ++b) gemm_nn_row(d, w, c, b);
}

void gemm_nn_omp(const Matrix& d, const Matrix& w, Matrix& c) {
    check_gemm_nn(d, w, c);
    const std::int64_t n = static_cast<std::int64_t>(d.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < n; ++b) gemm_nn_row(d, w, c, static_cast<std::size_t>(b));
}

void gemm_nn(const Matrix& d, const Matrix& w, Matrix& c) {
    serial_mode() ? gemm_nn_serial(d, w, c) : gemm_nn_omp(d, w, c);
}

void gemm_tn_serial(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate) {
    check_gemm_tn(d, a, c);
    gemm_tn_chunked(d, a, c, accumulate, false);
}

void gemm_tn_omp(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate) {
    check_gemm_tn(d, a, c);
    gemm_tn_chunked(d, a, c, accumulate, true);
}

void gemm_tn(const Matrix& d, const Matrix& a, Matrix& c, bool accumulate) {
    serial_mode() ? gemm_tn_serial(d, a, c, accumulate) : gemm_tn_omp(d, a, c, accumulate);
}

void col_sum(const Matrix& d, Vector& out, bool accumulate) {
    require(out.size() == d.cols(), "col_sum: width mismatch");
    if (!accumulate)
        for (auto& v : out) v = 0.0;
    // Column-major accumulation keeps a fixed order per output element.
    for (std::size_t b = 0; b < d.rows(); ++b) {
        const double* row = d.row_ptr(b);
        for (std::size_t o = 0; o < d.cols(); ++o) out[o] += row[o];
    }
}

double det_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 0) return 0.0;
    std::vector<double> partial(chunks, 0.0);
    const bool serial = serial_mode();
#pragma omp parallel for schedule(static) if (!serial)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += f(i);
        partial[c] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double det_sum(std::span<const double> x) {
    return det_sum(x.size(), [&](std::size_t i) { return x[i]; });
}

void parallel_rows(std::size_t n, const std::function<void(std::size_t)>& body) {
    if (serial_mode()) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        body(static_cast<std::size_t>(i));
}

}  // namespace bgan::kernels
