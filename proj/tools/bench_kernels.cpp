#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "stylecompat/kernels.hpp"
#include "stylecompat/rng.hpp"

namespace sk = stylecompat::kernels;
using stylecompat::Rng;

namespace {

double best_ms(const std::function<void()>& fn, int reps) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (ms < best) best = ms;
    }
    return best;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.gaussian();
    return v;
}

struct Row {
    std::string name;
    double serial_ms;
    double omp_ms;
    bool identical;
};

void print_rows(const std::vector<Row>& rows) {
    std::printf("%-18s %12s %12s %9s %10s\n", "kernel", "serial (ms)", "openmp (ms)",
                "speedup", "identical");
    for (const Row& r : rows)
        std::printf("%-18s %12.3f %12.3f %8.2fx %10s\n", r.name.c_str(), r.serial_ms,
                    r.omp_ms, r.serial_ms / r.omp_ms, r.identical ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::atoi(argv[1]);
    if (reps < 1) reps = 1;

    Rng rng(42);
    std::vector<Row> rows;

    {
        const std::size_t m = 256, k = 256, n = 256;
        std::vector<double> A = random_vec(m * k, rng);
        std::vector<double> B = random_vec(k * n, rng);
        std::vector<double> Cs(m * n), Co(m * n);
        double ts = best_ms([&] { sk::matmul_serial(A.data(), B.data(), Cs.data(), m, k, n); },
                            reps);
        double to =
            best_ms([&] { sk::matmul_omp(A.data(), B.data(), Co.data(), m, k, n); }, reps);
        rows.push_back({"matmul 256^3", ts, to,
                        std::memcmp(Cs.data(), Co.data(), m * n * sizeof(double)) == 0});
    }

    {
        const std::size_t n = 4096, dim = 256, n_pairs = 16384;
        std::vector<double> rowsbuf = random_vec(n * dim, rng);
        std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs(n_pairs);
        for (auto& p : pairs) {
            p.first = static_cast<std::uint32_t>(rng.below(n));
            p.second = static_cast<std::uint32_t>(rng.below(n));
        }
        std::vector<double> d_ser(n_pairs), d_omp(n_pairs);
        double ts = best_ms(
            [&] {
                sk::pair_distances_serial(rowsbuf.data(), dim, pairs.data(), n_pairs,
                                          d_ser.data());
            },
            reps);
        double to = best_ms(
            [&] {
                sk::pair_distances_omp(rowsbuf.data(), dim, pairs.data(), n_pairs,
                                       d_omp.data());
            },
            reps);
        rows.push_back({"pair_distances", ts, to,
                        std::memcmp(d_ser.data(), d_omp.data(), n_pairs * sizeof(double)) ==
                            0});
    }

    {
        const std::size_t count = 512;
        const std::size_t px = sk::kDctSize * sk::kDctSize;
        std::vector<double> images = random_vec(count * px, rng);
        std::vector<double> cs(count * px), co(count * px);
        double ts =
            best_ms([&] { sk::dct32_batch_serial(images.data(), cs.data(), count); }, reps);
        double to =
            best_ms([&] { sk::dct32_batch_omp(images.data(), co.data(), count); }, reps);
        rows.push_back({"dct32_batch 512", ts, to,
                        std::memcmp(cs.data(), co.data(), count * px * sizeof(double)) == 0});
    }

    {
        const std::size_t n = 2048, dim = 256;
        std::vector<double> rowsbuf = random_vec(n * dim, rng);
        std::vector<double> q = random_vec(dim, rng);
        std::vector<double> ss(n), so(n);
        double ts = best_ms(
            [&] { sk::query_scores_serial(rowsbuf.data(), n, dim, q.data(), true, ss.data()); },
            reps);
        double to = best_ms(
            [&] { sk::query_scores_omp(rowsbuf.data(), n, dim, q.data(), true, so.data()); },
            reps);
        rows.push_back({"query_scores", ts, to,
                        std::memcmp(ss.data(), so.data(), n * sizeof(double)) == 0});
    }

    print_rows(rows);
    for (const Row& r : rows)
        if (!r.identical) {
            std::fprintf(stderr, "mismatch between serial and openmp for %s\n",
                         r.name.c_str());
            return 1;
        }
    return 0;
}
