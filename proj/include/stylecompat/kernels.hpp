#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace stylecompat::kernels {

// Every kernel ships in two variants: a plain serial reference and an OpenMP
// version parallelized over independent output elements. Because each output
// element is accumulated by exactly one thread in a fixed inner order, the
// OpenMP results are bit-identical to the serial ones for any thread count.
// Tests assert that equality; the benchmark tool compares their speed.

enum class Mode {
    serial,
    openmp,
};

Mode mode();
void set_mode(Mode m);

// y[m] = W[m x k] * x[k] (+ b[m] when b != nullptr). Row-major W.
void matvec_serial(const double* W, const double* x, const double* b, double* y,
                   std::size_t m, std::size_t k);
void matvec_omp(const double* W, const double* x, const double* b, double* y,
                std::size_t m, std::size_t k);
void matvec(const double* W, const double* x, const double* b, double* y,
            std::size_t m, std::size_t k);

// y[k] = W[m x k]^T * x[m]. Row-major W; parallel over output columns.
void matvec_t_serial(const double* W, const double* x, double* y,
                     std::size_t m, std::size_t k);
void matvec_t_omp(const double* W, const double* x, double* y,
                  std::size_t m, std::size_t k);
void matvec_t(const double* W, const double* x, double* y,
              std::size_t m, std::size_t k);

// C[m x n] = A[m x k] * B[k x n]. Row-major everywhere.
void matmul_serial(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n);
void matmul_omp(const double* A, const double* B, double* C,
                std::size_t m, std::size_t k, std::size_t n);
void matmul(const double* A, const double* B, double* C,
            std::size_t m, std::size_t k, std::size_t n);

// C[m x n] += A[m x k] * B[n x k]^T, i.e. A times B transposed.
void matmul_bt_acc_serial(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n);
void matmul_bt_acc_omp(const double* A, const double* B, double* C,
                       std::size_t m, std::size_t k, std::size_t n);
void matmul_bt_acc(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n);

// C[k x n] += A[m x k]^T * B[m x n].
void matmul_at_acc_serial(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n);
void matmul_at_acc_omp(const double* A, const double* B, double* C,
                       std::size_t m, std::size_t k, std::size_t n);
void matmul_at_acc(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n);

// W[m x k] += a[m] (outer) b[k]. Rank-1 gradient update.
void outer_acc_serial(const double* a, const double* b, double* W,
                      std::size_t m, std::size_t k);
void outer_acc_omp(const double* a, const double* b, double* W,
                   std::size_t m, std::size_t k);
void outer_acc(const double* a, const double* b, double* W,
               std::size_t m, std::size_t k);

// Euclidean distances between selected row pairs of a row-major matrix.
void pair_distances_serial(const double* rows, std::size_t dim,
                           const std::pair<std::uint32_t, std::uint32_t>* pairs,
                           std::size_t n_pairs, double* out);
void pair_distances_omp(const double* rows, std::size_t dim,
                        const std::pair<std::uint32_t, std::uint32_t>* pairs,
                        std::size_t n_pairs, double* out);
void pair_distances(const double* rows, std::size_t dim,
                    const std::pair<std::uint32_t, std::uint32_t>* pairs,
                    std::size_t n_pairs, double* out);

// Distances (euclidean) or similarities (dot) from one query to every row.
void query_scores_serial(const double* rows, std::size_t n, std::size_t dim,
                         const double* query, bool euclidean, double* out);
void query_scores_omp(const double* rows, std::size_t n, std::size_t dim,
                      const double* query, bool euclidean, double* out);
void query_scores(const double* rows, std::size_t n, std::size_t dim,
                  const double* query, bool euclidean, double* out);

// 2-D DCT-II of a 32x32 block, plain (unnormalized) cosine sums.
// images: batch-major, each 32*32 doubles; coeffs laid out the same way.
inline constexpr std::size_t kDctSize = 32;
void dct32_batch_serial(const double* images, double* coeffs, std::size_t count);
void dct32_batch_omp(const double* images, double* coeffs, std::size_t count);
void dct32_batch(const double* images, double* coeffs, std::size_t count);

}  // namespace stylecompat::kernels
