#ifndef HITLBO_LINALG_HPP
#define HITLBO_LINALG_HPP

#include <optional>
#include <string>

#include "hitlbo/core.hpp"

namespace hitlbo {

struct JitteredCholesky {
    Matrix lower;        // L with L L^T = A + jitter * I
    double jitter = 0.0; // absolute amount added to the diagonal
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

/// Cholesky factor of a symmetric matrix, escalating diagonal jitter (relative to the mean
/// diagonal) from 1e-10 by factors of ten up to 1e-4. Returns nullopt when every level fails.
[[nodiscard]] inline std::optional<JitteredCholesky> try_cholesky(const Matrix& a) {
    const Eigen::Index n = a.rows();
    if (n == 0) return JitteredCholesky{Matrix(0, 0), 0.0};
    const double scale = std::max(a.diagonal().cwiseAbs().mean(), std::numeric_limits<double>::min());
    if (!a.allFinite()) return std::nullopt;

    auto attempt = [&](double jitter) -> std::optional<JitteredCholesky> {
        Matrix m = a;
        m.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(m);
        if (llt.info() != Eigen::Success) return std::nullopt;
        Matrix l = llt.matrixL();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return std::nullopt;
        }
        return JitteredCholesky{std::move(l), jitter};
    };

    if (auto r = attempt(0.0)) return r;
    for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
        if (auto r = attempt(rel * scale)) return r;
    }
    return std::nullopt;
}

[[nodiscard]] inline JitteredCholesky cholesky_or_throw(const Matrix& a, const std::string& what) {
    auto r = try_cholesky(a);
    if (!r) {
        throw NumericalError(what + ": matrix of size " + std::to_string(a.rows()) +
                             " is not positive definite after jitter up to 1e-4 (relative)");
    }
    return *std::move(r);
}

/// Solves (L L^T) x = b.
template <typename Rhs>
[[nodiscard]] Matrix cholesky_solve(const Matrix& lower, const Rhs& b) {
    const Matrix half = lower.triangularView<Eigen::Lower>().solve(b);
    return lower.transpose().triangularView<Eigen::Upper>().solve(half);
}

[[nodiscard]] inline double log_det_from_cholesky(const Matrix& lower) {
    return 2.0 * lower.diagonal().array().log().sum();
}

} // namespace hitlbo

#endif // HITLBO_LINALG_HPP
