#include "stylecompat/kernels.hpp"

#include <cmath>

namespace stylecompat::kernels {

namespace {

Mode g_mode =
#if STYLECOMPAT_HAVE_OPENMP
    Mode::openmp;
#else
    Mode::serial;
#endif

// Cosine table for the 32-point DCT-II: table[k][n] = cos(pi*(2n+1)*k/64).
struct DctTable {
    double c[kDctSize][kDctSize];
    DctTable() {
        for (std::size_t k = 0; k < kDctSize; ++k)
            for (std::size_t n = 0; n < kDctSize; ++n)
                c[k][n] = std::cos(M_PI * (2.0 * n + 1.0) * k / (2.0 * kDctSize));
    }
};

const DctTable& dct_table() {
    static const DctTable t;
    return t;
}

inline double row_dot(const double* w, const double* x, std::size_t k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += w[j] * x[j];
    return acc;
}

// One image: rows pass then columns pass.
void dct32_one(const double* img, double* out) {
    const auto& T = dct_table();
    double tmp[kDctSize * kDctSize];
    for (std::size_t r = 0; r < kDctSize; ++r) {
        for (std::size_t k = 0; k < kDctSize; ++k) {
            double acc = 0.0;
            for (std::size_t n = 0; n < kDctSize; ++n) acc += img[r * kDctSize + n] * T.c[k][n];
            tmp[r * kDctSize + k] = acc;
        }
    }
    for (std::size_t k = 0; k < kDctSize; ++k) {
        for (std::size_t u = 0; u < kDctSize; ++u) {
            double acc = 0.0;
            for (std::size_t r = 0; r < kDctSize; ++r) acc += tmp[r * kDctSize + k] * T.c[u][r];
            out[u * kDctSize + k] = acc;
        }
    }
}

}  // namespace

Mode mode() { return g_mode; }
void set_mode(Mode m) { g_mode = m; }

void matvec_serial(const double* W, const double* x, const double* b, double* y,
                   std::size_t m, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i)
        y[i] = row_dot(W + i * k, x, k) + (b ? b[i] : 0.0);
}

void matvec_omp(const double* W, const double* x, const double* b, double* y,
                std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i)
        y[i] = row_dot(W + i * k, x, k) + (b ? b[i] : 0.0);
}

void matvec(const double* W, const double* x, const double* b, double* y,
            std::size_t m, std::size_t k) {
    if (g_mode == Mode::openmp)
        matvec_omp(W, x, b, y, m, k);
    else
        matvec_serial(W, x, b, y, m, k);
}

void matvec_t_serial(const double* W, const double* x, double* y,
                     std::size_t m, std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += W[i * k + j] * x[i];
        y[j] = acc;
    }
}

void matvec_t_omp(const double* W, const double* x, double* y,
                  std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += W[i * k + j] * x[i];
        y[j] = acc;
    }
}

void matvec_t(const double* W, const double* x, double* y, std::size_t m, std::size_t k) {
    if (g_mode == Mode::openmp)
        matvec_t_omp(W, x, y, m, k);
    else
        matvec_t_serial(W, x, y, m, k);
}

void matmul_serial(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += A[i * k + t] * B[t * n + j];
            C[i * n + j] = acc;
        }
    }
}

void matmul_omp(const double* A, const double* B, double* C,
                std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += A[i * k + t] * B[t * n + j];
            C[i * n + j] = acc;
        }
    }
}

void matmul(const double* A, const double* B, double* C,
            std::size_t m, std::size_t k, std::size_t n) {
    if (g_mode == Mode::openmp)
        matmul_omp(A, B, C, m, k, n);
    else
        matmul_serial(A, B, C, m, k, n);
}

void matmul_bt_acc_serial(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += A[i * k + t] * B[j * k + t];
            C[i * n + j] += acc;
        }
    }
}

void matmul_bt_acc_omp(const double* A, const double* B, double* C,
                       std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += A[i * k + t] * B[j * k + t];
            C[i * n + j] += acc;
        }
    }
}

void matmul_bt_acc(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n) {
    if (g_mode == Mode::openmp)
        matmul_bt_acc_omp(A, B, C, m, k, n);
    else
        matmul_bt_acc_serial(A, B, C, m, k, n);
}

void matmul_at_acc_serial(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < m; ++t) acc += A[t * k + i] * B[t * n + j];
            C[i * n + j] += acc;
        }
    }
}

void matmul_at_acc_omp(const double* A, const double* B, double* C,
                       std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < m; ++t) acc += A[t * k + i] * B[t * n + j];
            C[i * n + j] += acc;
        }
    }
}

void matmul_at_acc(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n) {
    if (g_mode == Mode::openmp)
        matmul_at_acc_omp(A, B, C, m, k, n);
    else
        matmul_at_acc_serial(A, B, C, m, k, n);
}

void outer_acc_serial(const double* a, const double* b, double* W,
                      std::size_t m, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) W[i * k + j] += a[i] * b[j];
}

void outer_acc_omp(const double* a, const double* b, double* W,
                   std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) W[i * k + j] += a[i] * b[j];
}

void outer_acc(const double* a, const double* b, double* W, std::size_t m, std::size_t k) {
    if (g_mode == Mode::openmp)
        outer_acc_omp(a, b, W, m, k);
    else
        outer_acc_serial(a, b, W, m, k);
}

namespace {
inline double pair_dist_one(const double* rows, std::size_t dim,
                            std::uint32_t a, std::uint32_t b) {
    const double* pa = rows + std::size_t(a) * dim;
    const double* pb = rows + std::size_t(b) * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double d = pa[j] - pb[j];
        acc += d * d;
    }
    return std::sqrt(acc);
}
}  // namespace

void pair_distances_serial(const double* rows, std::size_t dim,
                           const std::pair<std::uint32_t, std::uint32_t>* pairs,
                           std::size_t n_pairs, double* out) {
    for (std::size_t p = 0; p < n_pairs; ++p)
        out[p] = pair_dist_one(rows, dim, pairs[p].first, pairs[p].second);
}

void pair_distances_omp(const double* rows, std::size_t dim,
                        const std::pair<std::uint32_t, std::uint32_t>* pairs,
                        std::size_t n_pairs, double* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < n_pairs; ++p)
        out[p] = pair_dist_one(rows, dim, pairs[p].first, pairs[p].second);
}

void pair_distances(const double* rows, std::size_t dim,
                    const std::pair<std::uint32_t, std::uint32_t>* pairs,
                    std::size_t n_pairs, double* out) {
    if (g_mode == Mode::openmp)
        pair_distances_omp(rows, dim, pairs, n_pairs, out);
    else
        pair_distances_serial(rows, dim, pairs, n_pairs, out);
}

namespace {
inline double query_score_one(const double* row, const double* query, std::size_t dim,
                              bool euclidean) {
    double acc = 0.0;
    if (euclidean) {
        for (std::size_t j = 0; j < dim; ++j) {
            double d = row[j] - query[j];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (std::size_t j = 0; j < dim; ++j) acc += row[j] * query[j];
    return acc;
}
}  // namespace

void query_scores_serial(const double* rows, std::size_t n, std::size_t dim,
                         const double* query, bool euclidean, double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = query_score_one(rows + i * dim, query, dim, euclidean);
}

void query_scores_omp(const double* rows, std::size_t n, std::size_t dim,
                      const double* query, bool euclidean, double* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i)
        out[i] = query_score_one(rows + i * dim, query, dim, euclidean);
}

void query_scores(const double* rows, std::size_t n, std::size_t dim,
                  const double* query, bool euclidean, double* out) {
    if (g_mode == Mode::openmp)
        query_scores_omp(rows, n, dim, query, euclidean, out);
    else
        query_scores_serial(rows, n, dim, query, euclidean, out);
}

void dct32_batch_serial(const double* images, double* coeffs, std::size_t count) {
    const std::size_t stride = kDctSize * kDctSize;
    for (std::size_t i = 0; i < count; ++i)
        dct32_one(images + i * stride, coeffs + i * stride);
}

void dct32_batch_omp(const double* images, double* coeffs, std::size_t count) {
    const std::size_t stride = kDctSize * kDctSize;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < count; ++i)
        dct32_one(images + i * stride, coeffs + i * stride);
}

void dct32_batch(const double* images, double* coeffs, std::size_t count) {
    if (g_mode == Mode::openmp)
        dct32_batch_omp(images, coeffs, count);
    else
        dct32_batch_serial(images, coeffs, count);
}

}  // namespace stylecompat::kernels
