#ifndef HITLBO_OPTIMIZE_HPP
#define HITLBO_OPTIMIZE_HPP

#include <deque>
#include <functional>

#include "hitlbo/core.hpp"

namespace hitlbo {

using Objective = std::function<double(const Vector&)>;

struct AscentConfig {
    int max_iterations = 500;
    double tolerance = 1e-12;
    int memory = 10;
    /// Central-difference step as a fraction of each coordinate's width.
    double fd_step = 1e-6;
};

struct AscentResult {
    Vector x;
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
};

/// Central finite-difference gradient, one-sided where the stencil would leave the box.
[[nodiscard]] inline Vector fd_gradient(const Objective& f, const Vector& x, const Bounds& bounds, double rel_step,
                                        int* evaluations = nullptr) {
    Vector g(x.size());
    Vector probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * (bounds.upper[i] - bounds.lower[i]);
        const double lo = std::max(bounds.lower[i], x[i] - h);
        const double hi = std::min(bounds.upper[i], x[i] + h);
        probe[i] = hi;
        const double fh = f(probe);
        probe[i] = lo;
        const double fl = f(probe);
        probe[i] = x[i];
        g[i] = (hi > lo) ? (fh - fl) / (hi - lo) : 0.0;
        if (evaluations) *evaluations += 2;
    }
    return g;
}

/// Maximizes `f` over `bounds` from `start` with a projected limited-memory BFGS:
/// coordinates pinned at an active bound are frozen, the two-loop recursion runs on the
/// free coordinates, and an Armijo backtracking search follows the projected path.
[[nodiscard]] inline AscentResult maximize_box(const Objective& f, const Bounds& bounds, const Vector& start,
                                               const AscentConfig& cfg = {}) {
    const Eigen::Index n = bounds.dim();
    AscentResult res;
    // Work on the minimization of -f.
    auto neg = [&](const Vector& z) {
        ++res.evaluations;
        const double v = f(z);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };
    auto grad = [&](const Vector& z) {
        Vector g = fd_gradient(f, z, bounds, cfg.fd_step, &res.evaluations);
        return Vector(-g);
    };

    Vector x = bounds.clip(start);
    double fx = neg(x);
    res.x = x;
    res.value = -fx;
    if (!std::isfinite(fx)) return res;
    Vector g = grad(x);

    std::deque<std::pair<Vector, Vector>> mem; // (s, y)
    const double eps_bound = 1e-15;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        res.iterations = it + 1;
        Eigen::Array<bool, Eigen::Dynamic, 1> free_mask(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lo = x[i] <= bounds.lower[i] + eps_bound * (bounds.upper[i] - bounds.lower[i]);
            const bool at_hi = x[i] >= bounds.upper[i] - eps_bound * (bounds.upper[i] - bounds.lower[i]);
            free_mask[i] = !((at_lo && g[i] > 0.0) || (at_hi && g[i] < 0.0));
        }
        const Vector pg = x - bounds.clip(x - g);
        if (pg.lpNorm<Eigen::Infinity>() <= cfg.tolerance) break;

        auto mask = [&](const Vector& v) {
            Vector out = v;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!free_mask[i]) out[i] = 0.0;
            return out;
        };

        // Two-loop recursion restricted to free coordinates.
        Vector q = mask(g);
        std::vector<double> alphas(mem.size());
        for (std::size_t k = mem.size(); k-- > 0;) {
            const Vector s = mask(mem[k].first);
            const Vector y = mask(mem[k].second);
            const double sy = s.dot(y);
            if (sy <= 0.0) {
                alphas[k] = 0.0;
                continue;
            }
            alphas[k] = s.dot(q) / sy;
            q -= alphas[k] * y;
        }
        if (!mem.empty()) {
            const Vector s = mask(mem.back().first);
            const Vector y = mask(mem.back().second);
            const double yy = y.squaredNorm();
            if (yy > 0.0 && s.dot(y) > 0.0) q *= s.dot(y) / yy;
        }
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const Vector s = mask(mem[k].first);
            const Vector y = mask(mem[k].second);
            const double sy = s.dot(y);
            if (sy <= 0.0) continue;
            const double beta = y.dot(q) / sy;
            q += (alphas[k] - beta) * s;
        }
        Vector d = -q;
        if (!(d.dot(g) < 0.0)) {
            mem.clear();
            d = -mask(g);
        }
        double step = 1.0;
        if (mem.empty()) {
            // First step or reset: limit the move to a tenth of the box.
            const double dn = d.lpNorm<Eigen::Infinity>();
            if (dn > 0.0) step = std::min(1.0, 0.1 * bounds.max_width() / dn);
        }

        bool accepted = false;
        Vector xn;
        double fn = fx;
        for (int ls = 0; ls < 40; ++ls) {
            xn = bounds.clip(x + step * d);
            fn = neg(xn);
            if (fn <= fx + 1e-4 * g.dot(xn - x) && fn <= fx) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || (xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;

        const Vector gn = grad(xn);
        const Vector s = xn - x;
        const Vector y = gn - g;
        if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
            mem.emplace_back(s, y);
            if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
        }
        const double rel = std::abs(fx - fn) / std::max({std::abs(fx), std::abs(fn), 1.0});
        x = xn;
        fx = fn;
        g = gn;
        if (rel <= cfg.tolerance) break;
    }
    res.x = x;
    res.value = -fx;
    return res;
}

} // namespace hitlbo

#endif // HITLBO_OPTIMIZE_HPP
