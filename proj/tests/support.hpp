#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "xbarsim/matrix.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
    CounterRng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.data) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    CounterRng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.uniform(lo, hi);
    }
    return v;
}

// max_k |a_k - b_k| / max_k |b_k|
template <typename A, typename B>
double relative_error(const A& a, const B& b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        num = std::max(num, std::abs(a[k] - b[k]));
        den = std::max(den, std::abs(b[k]));
    }
    return den > 0.0 ? num / den : num;
}

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(XBARSIM_SOURCE_DIR) / rel;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("xbarsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace xbarsim::testing
