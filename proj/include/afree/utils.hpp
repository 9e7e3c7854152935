/*
 * utils.hpp — version constant, thread budget, small shared helpers.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace afree {

inline constexpr const char* kVersion = "0.1.0";

// Default relative tolerance for singular-value rank thresholding.
inline constexpr double kDefaultRankTol = 1e-8;

// Tighter tolerance used when extracting symbol kernels for test fields.
inline constexpr double kKernelTol = 1e-10;

// Number of worker threads for internal per-frequency loops, capped by the
// AFREE_THREADS environment variable. Defaults to 1 (sequential); reductions
// always run sequentially so reports stay byte-reproducible.
inline int thread_budget() {
    const char* env = std::getenv("AFREE_THREADS");
    if (env == nullptr) return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<int>(std::min(v, 256L));
}

// Chunked parallel map over [0, n). `fn(begin, end)` must be safe to run on
// disjoint ranges concurrently. Runs inline when the budget is 1 or the range
// is small.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    int workers = thread_budget();
    if (workers <= 1 || n < 1024) {
        fn(std::int64_t{0}, n);
        return;
    }
    workers = static_cast<int>(std::min<std::int64_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        std::int64_t lo = t * chunk;
        std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

// Uniform point on the unit sphere in R^n.
inline Eigen::VectorXd random_unit_vector(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    do {
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    } while (v.norm() < 1e-12);
    return v / v.norm();
}

// Fixed 17-significant-digit formatting used in all JSON reports.
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

// Write-then-rename so partially written reports are never observed.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace afree
