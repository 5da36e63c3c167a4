#ifndef HITLBO_ACQUISITION_HPP
#define HITLBO_ACQUISITION_HPP

#include "hitlbo/gp.hpp"
#include "hitlbo/optimize.hpp"
#include "hitlbo/sampling.hpp"

namespace hitlbo {

/// Upper-confidence-bound weight on the posterior standard deviation.
struct UtilityConfig {
    double beta = 2.0;

    void validate() const {
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("utility: beta must be a finite value >= 0");
    }
};

[[nodiscard]] inline double ucb(const GpModel& model, const Vector& x, const UtilityConfig& cfg = {}) {
    const auto p = model.posterior(x);
    return p.mean + cfg.beta * p.std;
}

struct MaximizeConfig {
    int starts = 36;
    AscentConfig ascent{};
    std::uint64_t seed = 0;
};

struct UtilityOptimum {
    Vector x;
    double utility = -std::numeric_limits<double>::infinity();
};

/// Multistart bounded quasi-Newton ascent of the UCB from Latin-hypercube starts.
/// The best result wins; equal values keep the lowest start index.
[[nodiscard]] inline UtilityOptimum maximize_utility(const GpModel& model, const Bounds& bounds,
                                                     const UtilityConfig& ucfg = {}, const MaximizeConfig& mcfg = {}) {
    if (bounds.dim() != model.dim()) throw InputError("maximize_utility: bounds and model dimension differ");
    const Objective f = [&](const Vector& x) { return ucb(model, x, ucfg); };
    const auto starts = latin_hypercube(bounds, static_cast<std::size_t>(std::max(1, mcfg.starts)), mcfg.seed);

    UtilityOptimum best;
    for (const auto& s : starts) {
        const double v0 = f(s);
        if (v0 > best.utility) best = {s, v0};
        auto r = maximize_box(f, bounds, s, mcfg.ascent);
        if (r.value > best.utility) best = {bounds.clip(r.x), r.value};
    }
    // Report the utility at the clipped point exactly.
    best.utility = f(best.x);
    return best;
}

/// Sum of utilities over the alternate rows; the anchor is not part of the sum.
[[nodiscard]] inline double batch_utility(const GpModel& model, const Matrix& alternates,
                                          const UtilityConfig& cfg = {}) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < alternates.rows(); ++i) total += ucb(model, alternates.row(i).transpose(), cfg);
    return total;
}

/// Returned by `variability` when the augmented covariance is numerically singular.
inline constexpr double kSingularLogDet = -1e300;

/// Squared Cholesky pivots below this fraction of the signal variance count as singular.
inline constexpr double kSingularPivot = 1e-12;

[[nodiscard]] inline Matrix augment(const Matrix& alternates, const Vector& anchor) {
    if (alternates.rows() > 0 && alternates.cols() != anchor.size())
        throw InputError("variability: anchor dimension does not match alternates");
    Matrix aug(alternates.rows() + 1, anchor.size());
    aug.topRows(alternates.rows()) = alternates;
    aug.row(alternates.rows()) = anchor.transpose();
    return aug;
}

/// Log-determinant of the kernel matrix over the alternates plus the anchor, using the
/// model's fitted hyperparameters without the noise term.
[[nodiscard]] inline double variability(const GpHyperparams& hp, const Matrix& alternates, const Vector& anchor) {
    const Matrix k = kernel_matrix(augment(alternates, anchor), hp);
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success) return kSingularLogDet;
    const Matrix l = llt.matrixL();
    const double floor = kSingularPivot * hp.signal_variance;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!std::isfinite(l(i, i)) || !(l(i, i) * l(i, i) > floor)) return kSingularLogDet;
    }
    return log_det_from_cholesky(l);
}

[[nodiscard]] inline double variability(const GpModel& model, const Matrix& alternates, const Vector& anchor) {
    return variability(model.hyperparams(), alternates, anchor);
}

} // namespace hitlbo

#endif // HITLBO_ACQUISITION_HPP
