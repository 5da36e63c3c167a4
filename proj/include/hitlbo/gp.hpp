#ifndef HITLBO_GP_HPP
#define HITLBO_GP_HPP

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "hitlbo/core.hpp"
#include "hitlbo/linalg.hpp"
#include "hitlbo/sampling.hpp"

namespace hitlbo {

/// Isotropic Matern 5/2 hyperparameters. Variances are in squared objective units.
struct GpHyperparams {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double noise_variance = 0.0;

    void validate() const {
        if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw InputError("gp: lengthscale must be > 0");
        if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
            throw InputError("gp: signal_variance must be > 0");
        if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
            throw InputError("gp: noise_variance must be >= 0");
    }

    friend bool operator==(const GpHyperparams&, const GpHyperparams&) = default;
};

inline constexpr double kSqrt5 = 2.2360679774997896964091736687313;

/// sigma_f^2 (1 + sqrt5 d/l + 5 d^2 / (3 l^2)) exp(-sqrt5 d/l)
[[nodiscard]] inline double matern52(double distance, const GpHyperparams& hp) {
    const double s = kSqrt5 * distance / hp.lengthscale;
    return hp.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// d k / d log(l)
[[nodiscard]] inline double matern52_dlog_lengthscale(double distance, const GpHyperparams& hp) {
    const double s = kSqrt5 * distance / hp.lengthscale;
    return hp.signal_variance * s * s * (1.0 + s) / 3.0 * std::exp(-s);
}

/// Pairwise covariance of the rows of `x` (no noise term).
[[nodiscard]] inline Matrix kernel_matrix(const Matrix& x, const GpHyperparams& hp) {
    const Eigen::Index n = x.rows();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = hp.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = matern52((x.row(i) - x.row(j)).norm(), hp);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

[[nodiscard]] inline Matrix stack_rows(const std::vector<Vector>& points) {
    if (points.empty()) return Matrix(0, 0);
    const Eigen::Index dim = points.front().size();
    Matrix x(static_cast<Eigen::Index>(points.size()), dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) throw InputError("kernel_matrix: points have differing dimension");
        x.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    }
    return x;
}

[[nodiscard]] inline Matrix kernel_matrix(const std::vector<Vector>& points, const GpHyperparams& hp) {
    return kernel_matrix(stack_rows(points), hp);
}

struct LogLikelihood {
    double value = 0.0;
    /// With respect to (log lengthscale, log signal_variance, log noise_variance).
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

namespace detail {

[[nodiscard]] inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

[[nodiscard]] inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

[[nodiscard]] inline Matrix pairwise_distances(const Matrix& x) {
    const Eigen::Index n = x.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    return d;
}

// Shared by the public likelihood and the fitting loop, which caches the distance matrix.
[[nodiscard]] inline LogLikelihood lml_from_distances(const Matrix& dist, const Vector& centered,
                                                      const GpHyperparams& hp) {
    const Eigen::Index t = dist.rows();
    Matrix kf(t, t);
    Matrix dkl(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            kf(i, j) = kf(j, i) = matern52(dist(i, j), hp);
            dkl(i, j) = dkl(j, i) = matern52_dlog_lengthscale(dist(i, j), hp);
        }
    }
    Matrix k = kf;
    k.diagonal().array() += hp.noise_variance;
    const auto chol = cholesky_or_throw(k, "log_marginal_likelihood");
    const Vector alpha = cholesky_solve(chol.lower, centered);

    LogLikelihood out;
    out.value = -0.5 * centered.dot(alpha) - 0.5 * log_det_from_cholesky(chol.lower) -
                0.5 * static_cast<double>(t) * std::log(2.0 * M_PI);

    const Matrix kinv = cholesky_solve(chol.lower, Matrix::Identity(t, t));
    const Matrix w = alpha * alpha.transpose() - kinv;
    out.gradient[0] = 0.5 * (w.array() * dkl.array()).sum();
    out.gradient[1] = 0.5 * (w.array() * kf.array()).sum();
    out.gradient[2] = 0.5 * hp.noise_variance * w.trace();
    return out;
}

} // namespace detail

/// Gaussian log marginal likelihood of the mean-centered observations under
/// K + noise_variance I, with its analytic gradient in log-hyperparameter space.
[[nodiscard]] inline LogLikelihood log_marginal_likelihood(const Dataset& data, const GpHyperparams& hp) {
    if (data.empty()) throw InputError("log_marginal_likelihood: dataset is empty");
    hp.validate();
    const double offset = detail::mean_of(data.values);
    Vector centered = from_std(data.values).array() - offset;
    return detail::lml_from_distances(detail::pairwise_distances(data.design_matrix()), centered, hp);
}

struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

inline constexpr double kStdFloor = 1e-12;

/// Conditioned GP with cached factorization. Immutable once built.
class GpModel {
public:
    GpModel() = default;

    /// Conditions on `data` with fixed hyperparameters. The prior mean is the empirical mean of y.
    [[nodiscard]] static GpModel condition(const Dataset& data, const GpHyperparams& hp) {
        if (data.empty()) throw InputError("gp: cannot condition on an empty dataset");
        hp.validate();
        GpModel m;
        m.hp_ = hp;
        m.data_ = data;
        m.x_ = data.design_matrix();
        m.mean_offset_ = detail::mean_of(data.values);
        Matrix k = kernel_matrix(m.x_, hp);
        k.diagonal().array() += hp.noise_variance;
        auto chol = cholesky_or_throw(k, "gp condition");
        m.lower_ = std::move(chol.lower);
        m.jitter_ = chol.jitter;
        const Vector centered = from_std(data.values).array() - m.mean_offset_;
        m.alpha_ = cholesky_solve(m.lower_, centered);
        return m;
    }

    [[nodiscard]] const GpHyperparams& hyperparams() const { return hp_; }
    [[nodiscard]] const Dataset& data() const { return data_; }
    [[nodiscard]] const Matrix& factorization() const { return lower_; }
    [[nodiscard]] const Vector& alpha() const { return alpha_; }
    [[nodiscard]] double mean_offset() const { return mean_offset_; }
    [[nodiscard]] double jitter() const { return jitter_; }
    [[nodiscard]] Eigen::Index dim() const { return x_.cols(); }
    [[nodiscard]] double log_likelihood() const { return log_likelihood_; }

    [[nodiscard]] Prediction posterior(const Vector& x) const {
        if (x.size() != dim()) throw InputError("gp posterior: query has wrong dimension");
        const Eigen::Index t = x_.rows();
        Vector ks(t);
        for (Eigen::Index i = 0; i < t; ++i) ks[i] = matern52((x_.row(i).transpose() - x).norm(), hp_);
        const double mean = mean_offset_ + ks.dot(alpha_);
        const Vector v = lower_.triangularView<Eigen::Lower>().solve(ks);
        const double var = hp_.signal_variance - v.squaredNorm();
        return {mean, std::max(std::sqrt(std::max(var, 0.0)), kStdFloor)};
    }

private:
    GpHyperparams hp_;
    Dataset data_;
    Matrix x_;
    Matrix lower_;
    Vector alpha_;
    double mean_offset_ = 0.0;
    double jitter_ = 0.0;
    double log_likelihood_ = std::numeric_limits<double>::quiet_NaN();

    friend GpModel with_likelihood(GpModel m, double ll) {
        m.log_likelihood_ = ll;
        return m;
    }
};

[[nodiscard]] inline Prediction posterior(const GpModel& model, const Vector& x) { return model.posterior(x); }

struct FitConfig {
    int restarts = 8;
    int iterations = 750;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    /// Log-uniform candidates screened by likelihood; the best `restarts` of them seed Adam.
    int screening = 64;
    /// Final likelihoods this close to the best are treated as ties.
    double tie_tolerance = 1e-3;
};

/// Box (in log space) that hyperparameter search is confined to.
struct HyperparamBox {
    Eigen::Vector3d lower; // log l, log sf2, log sn2
    Eigen::Vector3d upper;

    [[nodiscard]] static HyperparamBox for_data(const Dataset& data) {
        const double range = data.bounds.max_width();
        double vy = detail::variance_of(data.values);
        if (!(vy > 1e-12)) vy = 1.0;
        HyperparamBox b;
        b.lower = {std::log(1e-3 * range), std::log(1e-6 * vy), std::log(1e-8 * vy)};
        b.upper = {std::log(10.0 * range), std::log(1e6 * vy), std::log(vy)};
        return b;
    }

    [[nodiscard]] Eigen::Vector3d clamp(const Eigen::Vector3d& v) const { return v.cwiseMax(lower).cwiseMin(upper); }
};

[[nodiscard]] inline GpHyperparams from_log(const Eigen::Vector3d& v) {
    return {std::exp(v[0]), std::exp(v[1]), std::exp(v[2])};
}

/// Multistart projected Adam ascent on the log marginal likelihood in log-hyperparameter
/// space. Starts are the best of a stratified log-uniform screen, the first with its noise
/// moved to the floor. Among final likelihoods within `tie_tolerance` of the best, the
/// smallest noise wins, so noiseless data that the likelihood cannot disambiguate is
/// interpolated.
[[nodiscard]] inline GpModel fit_gp(const Dataset& data, const FitConfig& cfg = {}) {
    if (data.empty()) throw InputError("fit_gp: dataset is empty");
    if (cfg.restarts < 1 || cfg.iterations < 0) throw InputError("fit_gp: invalid restart/iteration count");

    const HyperparamBox box = HyperparamBox::for_data(data);
    const Matrix dist = detail::pairwise_distances(data.design_matrix());
    const double offset = detail::mean_of(data.values);
    const Vector centered = from_std(data.values).array() - offset;

    auto evaluate = [&](const Eigen::Vector3d& theta) -> std::optional<LogLikelihood> {
        try {
            auto r = detail::lml_from_distances(dist, centered, from_log(theta));
            if (!std::isfinite(r.value) || !r.gradient.allFinite()) return std::nullopt;
            return r;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };

    const auto pool_size = static_cast<std::size_t>(std::max(cfg.screening, cfg.restarts));
    std::vector<std::pair<double, Eigen::Vector3d>> pool;
    for (const Vector& c : latin_hypercube(Bounds{box.lower, box.upper}, pool_size, cfg.seed)) {
        const Eigen::Vector3d theta = c;
        const auto ll = evaluate(theta);
        pool.emplace_back(ll ? ll->value : -std::numeric_limits<double>::infinity(), theta);
    }
    std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Eigen::Vector3d> starts;
    for (int r = 0; r < cfg.restarts; ++r) starts.push_back(pool[static_cast<std::size_t>(r)].second);
    starts.front()[2] = box.lower[2];

    std::vector<std::pair<double, Eigen::Vector3d>> finals;
    for (const auto& start : starts) {
        Eigen::Vector3d theta = start;
        Eigen::Vector3d m = Eigen::Vector3d::Zero();
        Eigen::Vector3d v = Eigen::Vector3d::Zero();
        double b1t = 1.0;
        double b2t = 1.0;
        std::pair<double, Eigen::Vector3d> best_here{-std::numeric_limits<double>::infinity(), theta};
        for (int it = 0; it <= cfg.iterations; ++it) {
            const auto ll = evaluate(theta);
            if (!ll) break;
            if (ll->value > best_here.first) best_here = {ll->value, theta};
            if (it == cfg.iterations) break;
            // ascent: Adam on the negated objective
            const Eigen::Vector3d g = -ll->gradient;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
            b1t *= cfg.beta1;
            b2t *= cfg.beta2;
            const Eigen::Vector3d mhat = m / (1.0 - b1t);
            const Eigen::Vector3d vhat = v / (1.0 - b2t);
            theta = box.clamp(theta - cfg.learning_rate * mhat.cwiseQuotient((vhat.array().sqrt() + cfg.epsilon).matrix()));
        }
        if (std::isfinite(best_here.first)) finals.push_back(best_here);
    }
    if (finals.empty()) throw NumericalError("fit_gp: every restart failed to factorize the kernel matrix");

    double top = -std::numeric_limits<double>::infinity();
    for (const auto& f : finals) top = std::max(top, f.first);
    const std::pair<double, Eigen::Vector3d>* chosen = nullptr;
    for (const auto& f : finals) {
        if (f.first < top - cfg.tie_tolerance) continue;
        if (chosen == nullptr || f.second[2] < chosen->second[2]) chosen = &f;
    }
    return with_likelihood(GpModel::condition(data, from_log(chosen->second)), chosen->first);
}


} // namespace hitlbo

#endif // HITLBO_GP_HPP
