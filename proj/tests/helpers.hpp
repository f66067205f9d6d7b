#ifndef SEQCAST_TESTS_HELPERS_HPP
#define SEQCAST_TESTS_HELPERS_HPP

// Include after doctest.h: write_temp_csv asserts with REQUIRE.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

namespace testutil {

/// Mixed absolute/relative closeness: |a-b| <= tol * max(1, |a|+|b|).
inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(a) + std::abs(b));
}

inline bool all_close(const seqcast::Tensor& a, const seqcast::Tensor& b, double tol) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!close(a[i], b[i], tol)) return false;
    return true;
}

inline bool bit_equal(const seqcast::Tensor& a, const seqcast::Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

/// Central finite difference of a scalar functional with respect to one
/// element of a tensor the functional reads.
template <typename LossFn>
double fd_grad(seqcast::Tensor& param, std::size_t index, LossFn&& loss, double h = 1e-5) {
    const double saved = param[index];
    param[index] = saved + h;
    const double up = loss();
    param[index] = saved - h;
    const double down = loss();
    param[index] = saved;
    return (up - down) / (2.0 * h);
}

/// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("seqcast_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

/// Deterministic synthetic daily series: seasonal sine plus Gaussian noise.
inline std::vector<double> sine_series(std::size_t n, double amplitude, double sigma,
                                       std::uint64_t seed, double period = 365.0) {
    seqcast::Rng rng(seed);
    std::vector<double> out;
    out.reserve(n);
    const double tau = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < n; ++i) {
        const double u1 = rng.next_double();
        const double u2 = rng.next_double();
        const double gauss = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(tau * u2);
        out.push_back(amplitude * std::sin(tau * static_cast<double>(i) / period) +
                      sigma * gauss);
    }
    return out;
}

/// Writes a minimal date,meantemp CSV. Dates walk days 1..28 of consecutive
/// months starting 2000-01 (strictly increasing; month-end gaps are fine).
inline void write_temp_csv(const std::string& path, const std::vector<double>& temps) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("date,meantemp\n", f);
    int year = 2000, month = 1, day = 1;
    for (const double t : temps) {
        std::fprintf(f, "%04d-%02d-%02d,%.17g\n", year, month, day, t);
        if (++day > 28) {
            day = 1;
            if (++month > 12) {
                month = 1;
                ++year;
            }
        }
    }
    std::fclose(f);
}

} // namespace testutil

#endif // SEQCAST_TESTS_HELPERS_HPP
