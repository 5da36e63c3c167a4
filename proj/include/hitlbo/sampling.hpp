#ifndef HITLBO_SAMPLING_HPP
#define HITLBO_SAMPLING_HPP

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <vector>

#include "hitlbo/core.hpp"

namespace hitlbo {

/// Plain Latin hypercube: each axis is cut into `count` equal strata and every stratum
/// receives exactly one point, placed uniformly inside it. Deterministic per seed.
[[nodiscard]] inline std::vector<Vector> latin_hypercube(const Bounds& bounds, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw InputError("latin_hypercube: count must be >= 1");
    const auto dim = bounds.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Vector> points(count, Vector(dim));
    std::vector<std::size_t> perm(count);
    for (Eigen::Index d = 0; d < dim; ++d) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const double w = bounds.upper[d] - bounds.lower[d];
        for (std::size_t i = 0; i < count; ++i) {
            const double u = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(count);
            points[i][d] = std::clamp(bounds.lower[d] + u * w, bounds.lower[d], bounds.upper[d]);
        }
    }
    return points;
}

namespace detail {

inline constexpr std::array<int, 32> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23,  29,  31,  37,  41,  43,  47,  53,
                                                59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

[[nodiscard]] inline double radical_inverse(std::uint64_t index, int base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
        f *= inv;
    }
    return r;
}

} // namespace detail

/// Halton low-discrepancy points scaled into `bounds`. Index 0 (the origin) is skipped.
[[nodiscard]] inline std::vector<Vector> halton(const Bounds& bounds, std::size_t count, std::uint64_t offset = 0) {
    const auto dim = bounds.dim();
    if (dim > static_cast<Eigen::Index>(detail::kPrimes.size())) throw InputError("halton: dimension too large");
    std::vector<Vector> points(count, Vector(dim));
    for (std::size_t i = 0; i < count; ++i) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            const double u = detail::radical_inverse(offset + i + 1, detail::kPrimes[static_cast<std::size_t>(d)]);
            points[i][d] = bounds.lower[d] + u * (bounds.upper[d] - bounds.lower[d]);
        }
    }
    return points;
}

/// Evenly spaced grid over a 1D box, endpoints included.
[[nodiscard]] inline std::vector<Vector> grid_1d(const Bounds& bounds, std::size_t count) {
    if (bounds.dim() != 1) throw InputError("grid_1d: bounds must be one-dimensional");
    std::vector<Vector> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = count == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(count - 1);
        points.push_back(Vector::Constant(1, bounds.lower[0] + u * (bounds.upper[0] - bounds.lower[0])));
    }
    return points;
}

} // namespace hitlbo

#endif // HITLBO_SAMPLING_HPP
