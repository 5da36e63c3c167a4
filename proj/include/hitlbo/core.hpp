#ifndef HITLBO_CORE_HPP
#define HITLBO_CORE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hitlbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for malformed arguments: dimension mismatches, out-of-range indices, non-finite observations.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization cannot be rescued by jitter.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned box domain.
struct Bounds {
    Vector lower;
    Vector upper;

    Bounds() = default;
    Bounds(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

    /// Same interval [lo, hi] in every one of `dim` coordinates.
    static Bounds uniform(Eigen::Index dim, double lo, double hi) {
        return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
    }

    [[nodiscard]] Eigen::Index dim() const { return lower.size(); }
    [[nodiscard]] Vector width() const { return upper - lower; }
    [[nodiscard]] double max_width() const { return dim() == 0 ? 0.0 : width().maxCoeff(); }

    [[nodiscard]] bool contains(const Vector& x, double slack = 0.0) const {
        if (x.size() != dim()) return false;
        for (Eigen::Index i = 0; i < dim(); ++i) {
            if (!(x[i] >= lower[i] - slack && x[i] <= upper[i] + slack)) return false;
        }
        return true;
    }

    [[nodiscard]] Vector clip(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

    void validate() const {
        if (lower.size() != upper.size()) throw InputError("bounds: lower and upper differ in length");
        if (lower.size() == 0) throw InputError("bounds: dimension must be at least 1");
        for (Eigen::Index i = 0; i < lower.size(); ++i) {
            if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw InputError("bounds: non-finite entry in coordinate " + std::to_string(i));
            if (!(lower[i] < upper[i]))
                throw InputError("bounds: lower >= upper in coordinate " + std::to_string(i));
        }
    }
};

/// Evaluated (x, y) pairs over a box.
struct Dataset {
    std::vector<Vector> points;
    std::vector<double> values;
    Bounds bounds;

    Dataset() = default;
    explicit Dataset(Bounds b) : bounds(std::move(b)) {}

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }
    [[nodiscard]] Eigen::Index dim() const { return bounds.dim(); }

    void add(const Vector& x, double y) {
        if (x.size() != dim()) throw InputError("dataset: point has wrong dimension");
        if (!std::isfinite(y)) throw InputError("dataset: observed value must be finite");
        if (!bounds.contains(x, 1e-12)) throw InputError("dataset: point lies outside bounds");
        points.push_back(x);
        values.push_back(y);
    }

    /// Points as rows.
    [[nodiscard]] Matrix design_matrix() const {
        Matrix X(static_cast<Eigen::Index>(points.size()), dim());
        for (std::size_t i = 0; i < points.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
        return X;
    }

    [[nodiscard]] double best_value() const {
        double best = -std::numeric_limits<double>::infinity();
        for (double v : values) best = std::max(best, v);
        return best;
    }
};

// splitmix64 finalizer; used to derive independent stream seeds from a master seed.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                                  std::uint64_t c = 0) {
    return mix_seed(mix_seed(mix_seed(mix_seed(master) ^ a) ^ b) ^ c);
}

[[nodiscard]] inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

[[nodiscard]] inline Vector from_std(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace hitlbo

#endif // HITLBO_CORE_HPP
