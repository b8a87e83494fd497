#pragma once

// Reproducible sample points over a chart: a Halton sequence with a seeded
// Cranley-Patterson rotation, and tensor-product grids.

#include <projcalc/fields.hpp>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

namespace projcalc {

inline constexpr std::uint64_t kDefaultSeed = 20240521;

/// PROJCALC_SEED if set to an integer, else the built-in default.
inline std::uint64_t default_seed()
{
    if (const char* env = std::getenv("PROJCALC_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw InputError(std::string("PROJCALC_SEED is not an unsigned integer: ") + env);
    }
    return kDefaultSeed;
}

inline double radical_inverse(std::uint64_t i, unsigned base)
{
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// `count` points inside the chart, kept a fraction `margin` of each
/// interval away from the boundary.
inline std::vector<std::vector<double>> sample_points(const Chart& chart, int count, std::uint64_t seed,
                                                      double margin = 0.05)
{
    static constexpr std::array<unsigned, 8> primes{2, 3, 5, 7, 11, 13, 17, 19};
    const int n = chart.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift(static_cast<std::size_t>(n));
    for (auto& s : shift) s = unit(rng);
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < count; ++k) {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double u = radical_inverse(static_cast<std::uint64_t>(k + 1), primes[static_cast<std::size_t>(i)]) + shift[static_cast<std::size_t>(i)];
            u -= std::floor(u);
            const auto& iv = chart.domain()[static_cast<std::size_t>(i)];
            const double w = iv.hi - iv.lo;
            p[static_cast<std::size_t>(i)] = iv.lo + w * (margin + (1.0 - 2.0 * margin) * u);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

inline std::vector<std::vector<double>> sample_points(const Chart& chart, int count)
{
    return sample_points(chart, count, default_seed());
}

/// Tensor-product grid with `per_axis` nodes per coordinate, including the
/// boundary when margin = 0.
inline std::vector<std::vector<double>> grid_points(const Chart& chart, int per_axis, double margin = 0.0)
{
    const int n = chart.dim();
    std::vector<std::vector<double>> pts;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
        std::vector<double> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto& iv = chart.domain()[static_cast<std::size_t>(i)];
            const double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(i)]) / (per_axis - 1);
            p[static_cast<std::size_t>(i)] = iv.lo + (iv.hi - iv.lo) * (margin + (1.0 - 2.0 * margin) * u);
        }
        pts.push_back(std::move(p));
        int d = 0;
        while (d < n && ++idx[static_cast<std::size_t>(d)] == per_axis) idx[static_cast<std::size_t>(d++)] = 0;
        if (d == n) break;
    }
    return pts;
}

} // namespace projcalc
