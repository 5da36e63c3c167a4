#ifndef HITLBO_TEST_FUNCTIONS_HPP
#define HITLBO_TEST_FUNCTIONS_HPP

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "hitlbo/gp.hpp"
#include "hitlbo/linalg.hpp"
#include "hitlbo/optimize.hpp"
#include "hitlbo/sampling.hpp"

namespace hitlbo {

/// Black-box objective in maximization convention.
struct TestFunction {
    std::string name;
    /// Aggregation group, e.g. "gp-1d" for every sampled 1D function, "ackley-2d" otherwise.
    std::string family;
    Eigen::Index dimension = 0;
    Bounds bounds;
    std::function<double(const Vector&)> evaluate;
    double true_max = std::numeric_limits<double>::quiet_NaN();
    std::optional<Vector> true_argmax;
    /// Provenance echoed into run metadata (seed, lengthscale, anchors, ...).
    std::string description;

    [[nodiscard]] bool has_true_max() const { return std::isfinite(true_max); }
};

/// Noise-free conditional mean of a zero-mean Matern 5/2 GP given an exact joint sample at a
/// fixed anchor set. Smooth, deterministic, and equal to the sample at every anchor.
class SampledGpFunction {
public:
    SampledGpFunction(std::vector<Vector> anchors, const GpHyperparams& hp, std::uint64_t seed) : hp_(hp) {
        x_ = stack_rows(anchors);
        const Matrix k = kernel_matrix(x_, hp_);
        auto chol = cholesky_or_throw(k, "sample_gp_prior_function");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vector z(x_.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
        values_ = chol.lower * z;
        alpha_ = cholesky_solve(chol.lower, values_);
    }

    [[nodiscard]] double operator()(const Vector& x) const {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x_.rows(); ++i) acc += matern52((x_.row(i).transpose() - x).norm(), hp_) * alpha_[i];
        return acc;
    }

    [[nodiscard]] const Matrix& anchors() const { return x_; }
    [[nodiscard]] const Vector& sampled_values() const { return values_; }

private:
    GpHyperparams hp_;
    Matrix x_;
    Vector values_;
    Vector alpha_;
};

inline constexpr std::size_t kDefaultAnchors = 512;

/// Draws f ~ GP(0, Matern52(lengthscale, variance 1)) represented through anchor conditioning:
/// a grid in 1D, Halton points otherwise.
[[nodiscard]] inline TestFunction sample_gp_prior_function(Eigen::Index dimension, double lengthscale,
                                                           const Bounds& bounds, std::uint64_t seed,
                                                           std::size_t anchors = kDefaultAnchors) {
    if (!(lengthscale > 0.0)) throw InputError("sample_gp_prior_function: lengthscale must be > 0");
    if (bounds.dim() != dimension) throw InputError("sample_gp_prior_function: bounds dimension mismatch");
    if (anchors < 2) throw InputError("sample_gp_prior_function: need at least two anchors");
    auto pts = dimension == 1 ? grid_1d(bounds, anchors) : halton(bounds, anchors);
    auto fn = std::make_shared<const SampledGpFunction>(std::move(pts), GpHyperparams{lengthscale, 1.0, 0.0}, seed);

    TestFunction tf;
    tf.name = "gp-" + std::to_string(dimension) + "d-" + std::to_string(seed);
    tf.family = "gp-" + std::to_string(dimension) + "d";
    tf.dimension = dimension;
    tf.bounds = bounds;
    tf.evaluate = [fn](const Vector& x) { return (*fn)(x); };
    tf.description = "gp_prior seed=" + std::to_string(seed) + " lengthscale=" + std::to_string(lengthscale) +
                     " anchors=" + std::to_string(anchors);
    return tf;
}

namespace detail {

[[nodiscard]] inline double ackley(const Vector& x) {
    const double d = static_cast<double>(x.size());
    const double s1 = x.squaredNorm() / d;
    const double s2 = (2.0 * M_PI * x.array()).cos().sum() / d;
    return -20.0 * std::exp(-0.2 * std::sqrt(s1)) - std::exp(s2) + 20.0 + std::exp(1.0);
}

[[nodiscard]] inline double griewank(const Vector& x) {
    double sum = 0.0;
    double prod = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        sum += x[i] * x[i] / 4000.0;
        prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
    }
    return sum - prod + 1.0;
}

[[nodiscard]] inline double rastrigin(const Vector& x) {
    return 10.0 * static_cast<double>(x.size()) + (x.array().square() - 10.0 * (2.0 * M_PI * x.array()).cos()).sum();
}

[[nodiscard]] inline double rosenbrock(const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = x[i] - 1.0;
        s += 100.0 * a * a + b * b;
    }
    return s;
}

// Sums over complete groups of four; trailing coordinates (d not a multiple of 4) are inert.
[[nodiscard]] inline double powell(const Vector& x) {
    double s = 0.0;
    for (Eigen::Index g = 0; g + 3 < x.size(); g += 4) {
        const double a = x[g] + 10.0 * x[g + 1];
        const double b = x[g + 2] - x[g + 3];
        const double c = x[g + 1] - 2.0 * x[g + 2];
        const double d = x[g] - x[g + 3];
        s += a * a + 5.0 * b * b + c * c * c * c + 10.0 * d * d * d * d;
    }
    return s;
}

} // namespace detail

/// Negated standard minimization benchmarks on their customary domains; the maximum is 0.
[[nodiscard]] inline TestFunction standard_function(const std::string& name, Eigen::Index dimension) {
    if (dimension < 1) throw InputError("standard_function: dimension must be >= 1");
    TestFunction tf;
    tf.name = name + "-" + std::to_string(dimension) + "d";
    tf.family = tf.name;
    tf.dimension = dimension;
    tf.true_max = 0.0;
    tf.description = "standard " + name;
    double (*raw)(const Vector&) = nullptr;
    Vector argmax = Vector::Zero(dimension);
    if (name == "ackley") {
        tf.bounds = Bounds::uniform(dimension, -32.768, 32.768);
        raw = detail::ackley;
    } else if (name == "griewank") {
        tf.bounds = Bounds::uniform(dimension, -600.0, 600.0);
        raw = detail::griewank;
    } else if (name == "rastrigin") {
        tf.bounds = Bounds::uniform(dimension, -5.12, 5.12);
        raw = detail::rastrigin;
    } else if (name == "rosenbrock") {
        if (dimension < 2) throw InputError("standard_function: rosenbrock needs dimension >= 2");
        tf.bounds = Bounds::uniform(dimension, -5.0, 10.0);
        raw = detail::rosenbrock;
        argmax = Vector::Ones(dimension);
    } else if (name == "powell") {
        if (dimension < 4) throw InputError("standard_function: powell needs dimension >= 4");
        tf.bounds = Bounds::uniform(dimension, -4.0, 5.0);
        raw = detail::powell;
    } else {
        throw InputError("standard_function: unknown function '" + name + "'");
    }
    tf.evaluate = [raw](const Vector& x) { return -raw(x); };
    tf.true_argmax = argmax;
    return tf;
}

struct TrueMaxConfig {
    int starts = 256;
    std::size_t probe = 10000;
    std::size_t refine_best_probes = 16;
    std::uint64_t seed = 0;
    AscentConfig ascent{};
};

namespace detail {

// Compass search; converges on kinks (e.g. the Ackley optimum) where gradients do not help.
inline void compass_polish(const Objective& f, const Bounds& b, Vector& x, double& fx) {
    Vector step = 0.01 * b.width();
    const Vector min_step = 1e-13 * b.width();
    while ((step.array() > min_step.array()).any()) {
        bool improved = false;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            for (double sgn : {1.0, -1.0}) {
                Vector y = x;
                y[i] = std::clamp(x[i] + sgn * step[i], b.lower[i], b.upper[i]);
                const double fy = f(y);
                if (fy > fx) {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
}

} // namespace detail

/// Best value found by a dense probe followed by multistart bounded quasi-Newton and a
/// compass-search polish of the incumbent.
[[nodiscard]] inline double estimate_true_max(const TestFunction& fn, const TrueMaxConfig& cfg = {}) {
    const Objective f = fn.evaluate;
    std::vector<Vector> probe = fn.dimension == 1 ? grid_1d(fn.bounds, cfg.probe + 1) : halton(fn.bounds, cfg.probe);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) scored.emplace_back(f(probe[i]), i);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    Vector best_x = probe[scored.front().second];
    double best = scored.front().first;
    std::vector<Vector> starts = latin_hypercube(fn.bounds, static_cast<std::size_t>(cfg.starts), cfg.seed);
    for (std::size_t k = 0; k < std::min(cfg.refine_best_probes, scored.size()); ++k) starts.push_back(probe[scored[k].second]);
    for (const auto& s : starts) {
        auto r = maximize_box(f, fn.bounds, s, cfg.ascent);
        if (r.value > best) {
            best = r.value;
            best_x = r.x;
        }
    }
    detail::compass_polish(f, fn.bounds, best_x, best);
    return best;
}

} // namespace hitlbo

#endif // HITLBO_TEST_FUNCTIONS_HPP
