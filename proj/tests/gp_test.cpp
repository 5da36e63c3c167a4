#include <random>

#include <gtest/gtest.h>

#include "hitlbo/gp.hpp"
#include "hitlbo/sampling.hpp"

using namespace hitlbo;

namespace {

// Textbook closed form written independently of the library kernel.
double matern_oracle(double d, double ell, double sf2) {
    const double r = std::sqrt(5.0) * d / ell;
    return sf2 * (1.0 + r + 5.0 * d * d / (3.0 * ell * ell)) * std::exp(-r);
}

Dataset random_dataset(std::mt19937_64& rng, int t, int dim, double lo = 0.0, double hi = 5.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d(Bounds::uniform(dim, lo, hi));
    for (int i = 0; i < t; ++i) {
        Vector x(dim);
        for (int k = 0; k < dim; ++k) x[k] = u(rng);
        d.add(x, g(rng) + std::sin(x.sum()));
    }
    return d;
}

GpHyperparams random_hp(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {0.2 + 1.8 * u(rng), 0.5 + 1.5 * u(rng), std::exp(std::log(1e-3) + u(rng) * std::log(100.0))};
}

// Dense oracle: LU inverse of the full covariance, no Cholesky.
Prediction dense_posterior(const Dataset& data, const GpHyperparams& hp, const Vector& x) {
    const auto t = static_cast<Eigen::Index>(data.size());
    Matrix k(t, t);
    Vector ks(t);
    double m = 0.0;
    for (double y : data.values) m += y;
    m /= static_cast<double>(t);
    Vector yc(t);
    for (Eigen::Index i = 0; i < t; ++i) {
        yc[i] = data.values[static_cast<std::size_t>(i)] - m;
        ks[i] = matern_oracle((data.points[static_cast<std::size_t>(i)] - x).norm(), hp.lengthscale, hp.signal_variance);
        for (Eigen::Index j = 0; j < t; ++j)
            k(i, j) = matern_oracle((data.points[static_cast<std::size_t>(i)] - data.points[static_cast<std::size_t>(j)]).norm(),
                                    hp.lengthscale, hp.signal_variance) +
                      (i == j ? hp.noise_variance : 0.0);
    }
    const Matrix kinv = Eigen::FullPivLU<Matrix>(k).inverse();
    const double mean = m + ks.dot(kinv * yc);
    const double var = hp.signal_variance - ks.dot(kinv * ks);
    return {mean, std::sqrt(std::max(var, 0.0))};
}

} // namespace

TEST(Matern52, ZeroDistanceIsSignalVariance) {
    EXPECT_DOUBLE_EQ(matern52(0.0, {0.7, 2.5, 0.0}), 2.5);
}

TEST(Matern52, UnitDistanceMatchesHighPrecisionValue) {
    // (1 + sqrt5 + 5/3) exp(-sqrt5), evaluated at 40 digits offline.
    EXPECT_NEAR(matern52(1.0, {1.0, 1.0, 0.0}), 0.5239941088318203105927133, 1e-12);
}

TEST(Matern52, MonotoneDecayToZero) {
    const GpHyperparams hp{0.5, 1.3, 0.0};
    double prev = matern52(0.0, hp);
    for (double d = 0.01; d < 20.0; d += 0.01) {
        const double v = matern52(d, hp);
        EXPECT_LT(v, prev);
        EXPECT_GT(v, 0.0);
        prev = v;
    }
    EXPECT_LT(matern52(100.0, hp), 1e-100);
}

TEST(KernelMatrix, SinglePoint) {
    const Matrix k = kernel_matrix(std::vector<Vector>{Vector::Constant(2, 0.3)}, {1.0, 1.7, 0.1});
    ASSERT_EQ(k.rows(), 1);
    EXPECT_DOUBLE_EQ(k(0, 0), 1.7);
}

TEST(KernelMatrix, DuplicateRowsAreSingular) {
    std::vector<Vector> pts{Vector::Constant(1, 0.2), Vector::Constant(1, 0.9), Vector::Constant(1, 0.2)};
    const Matrix k = kernel_matrix(pts, {0.5, 1.0, 0.0});
    EXPECT_NEAR(k.determinant(), 0.0, 1e-12);
}

TEST(KernelMatrix, MatchesBruteForceAndIsSymmetricPsd) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = random_dataset(rng, 5, 3);
        const auto hp = random_hp(rng);
        const Matrix k = kernel_matrix(data.points, hp);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                EXPECT_NEAR(k(i, j), matern_oracle((data.points[i] - data.points[j]).norm(), hp.lengthscale, hp.signal_variance), 1e-12);
        EXPECT_LE((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        auto chol = try_cholesky(k);
        ASSERT_TRUE(chol.has_value());
        EXPECT_GT(chol->lower.diagonal().minCoeff(), 0.0);
    }
}

TEST(KernelMatrix, DimensionMismatchIsInputError) {
    std::vector<Vector> pts{Vector::Zero(2), Vector::Zero(3)};
    EXPECT_THROW((void)kernel_matrix(pts, {}), InputError);
}

TEST(LogMarginalLikelihood, SingleCenteredPoint) {
    Dataset d(Bounds::uniform(1, 0.0, 1.0));
    d.add(Vector::Constant(1, 0.4), 3.2);
    const GpHyperparams hp{0.3, 1.5, 0.25};
    EXPECT_NEAR(log_marginal_likelihood(d, hp).value, -0.5 * std::log(2.0 * M_PI * 1.75), 1e-12);
}

TEST(LogMarginalLikelihood, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(2024);
    const double h = 1e-5;
    for (int seed = 0; seed < 50; ++seed) {
        const auto data = random_dataset(rng, 6, 2);
        const auto hp = random_hp(rng);
        const auto an = log_marginal_likelihood(data, hp);
        const Eigen::Vector3d theta{std::log(hp.lengthscale), std::log(hp.signal_variance), std::log(hp.noise_variance)};
        for (int k = 0; k < 3; ++k) {
            Eigen::Vector3d tp = theta, tm = theta;
            tp[k] += h;
            tm[k] -= h;
            const double fd = (log_marginal_likelihood(data, from_log(tp)).value -
                               log_marginal_likelihood(data, from_log(tm)).value) / (2.0 * h);
            EXPECT_LE(std::abs(an.gradient[k] - fd) / std::max(1.0, std::abs(fd)), 1e-4)
                << "seed " << seed << " component " << k;
        }
    }
}

TEST(Posterior, MatchesDenseOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = random_dataset(rng, 5, 1);
        const auto hp = random_hp(rng);
        const auto model = GpModel::condition(data, hp);
        for (int q = 0; q <= 10; ++q) {
            const Vector x = Vector::Constant(1, 0.5 * q);
            const auto got = model.posterior(x);
            const auto want = dense_posterior(data, hp, x);
            EXPECT_NEAR(got.mean, want.mean, 1e-8);
            EXPECT_NEAR(got.std, want.std, 1e-8);
        }
    }
}

TEST(Posterior, NoiselessInterpolationAtTrainingPoints) {
    Dataset d(Bounds::uniform(1, 0.0, 5.0));
    d.add(Vector::Constant(1, 1.0), 0.3);
    d.add(Vector::Constant(1, 2.5), -1.1);
    d.add(Vector::Constant(1, 4.0), 0.8);
    const auto m = GpModel::condition(d, {1.0, 1.0, 0.0});
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto p = m.posterior(d.points[i]);
        EXPECT_NEAR(p.mean, d.values[i], 1e-6);
        EXPECT_LE(p.std, 1e-4);
    }
}

TEST(Posterior, RevertsToPriorFarFromData) {
    Dataset d(Bounds::uniform(1, 0.0, 1000.0));
    d.add(Vector::Constant(1, 1.0), 2.0);
    d.add(Vector::Constant(1, 1.5), 4.0);
    const auto m = GpModel::condition(d, {0.5, 2.0, 1e-6});
    const auto p = m.posterior(Vector::Constant(1, 900.0));
    EXPECT_NEAR(p.mean, m.mean_offset(), 1e-10);
    EXPECT_NEAR(p.std, std::sqrt(2.0), 1e-10);
}

TEST(Posterior, DimensionMismatchIsInputError) {
    Dataset d(Bounds::uniform(2, 0.0, 1.0));
    d.add(Vector::Constant(2, 0.5), 1.0);
    const auto m = GpModel::condition(d, {});
    EXPECT_THROW((void)m.posterior(Vector::Zero(3)), InputError);
}

TEST(Posterior, StdNeverExceedsPriorScale) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 7.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = random_dataset(rng, 8, 2);
        const auto hp = random_hp(rng);
        const auto m = GpModel::condition(data, hp);
        for (int q = 0; q < 50; ++q) {
            const Vector x{{u(rng), u(rng)}};
            const auto p = m.posterior(x);
            EXPECT_GE(p.std, 0.0);
            EXPECT_LE(p.std, std::sqrt(hp.signal_variance + hp.noise_variance) + 1e-8);
        }
    }
}

TEST(Posterior, ExtraObservationNeverIncreasesVariance) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto data = random_dataset(rng, 5, 2);
        const GpHyperparams hp{0.3 + u(rng) / 5.0, 1.0, 1e-8};
        const auto before = GpModel::condition(data, hp);
        data.add(Vector{{u(rng), u(rng)}}, 0.0);
        const auto after = GpModel::condition(data, hp);
        for (int q = 0; q < 40; ++q) {
            const Vector x{{u(rng), u(rng)}};
            EXPECT_LE(after.posterior(x).std, before.posterior(x).std + 1e-8);
        }
    }
}

TEST(FitGp, RecoversLengthscaleOfSampledData) {
    const GpHyperparams truth{0.5, 1.0, 0.0};
    const Bounds b = Bounds::uniform(1, 0.0, 5.0);
    const auto xs = latin_hypercube(b, 30, 17);
    Matrix k = kernel_matrix(xs, truth);
    k.diagonal().array() += 1e-8;
    const Matrix l = Eigen::LLT<Matrix>(k).matrixL();
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector z(30);
    for (auto& v : z) v = g(rng);
    const Vector y = l * z;
    Dataset d(b);
    for (int i = 0; i < 30; ++i) d.add(xs[static_cast<std::size_t>(i)], y[i]);

    FitConfig cfg;
    cfg.seed = 42;
    const auto model = fit_gp(d, cfg);
    EXPECT_GT(model.hyperparams().lengthscale, 0.25);
    EXPECT_LT(model.hyperparams().lengthscale, 1.0);
    EXPECT_TRUE(std::isfinite(model.log_likelihood()));
}

TEST(FitGp, ScalingObservationsLeavesLengthscaleUnchanged) {
    std::mt19937_64 rng(8);
    const auto data = random_dataset(rng, 12, 1);
    Dataset scaled(data.bounds);
    for (std::size_t i = 0; i < data.size(); ++i) scaled.add(data.points[i], 37.5 * data.values[i]);
    FitConfig cfg;
    cfg.seed = 1;
    const auto a = fit_gp(data, cfg);
    const auto b = fit_gp(scaled, cfg);
    EXPECT_NEAR(a.hyperparams().lengthscale / b.hyperparams().lengthscale, 1.0, 1e-6);
    EXPECT_NEAR(b.hyperparams().signal_variance / a.hyperparams().signal_variance, 37.5 * 37.5, 1e-3 * 37.5 * 37.5);
}

TEST(FitGp, ContradictoryDuplicatesNeedNoise) {
    Dataset d(Bounds::uniform(1, 0.0, 1.0));
    d.add(Vector::Constant(1, 0.5), 1.0);
    d.add(Vector::Constant(1, 0.5), -1.0);
    d.add(Vector::Constant(1, 0.1), 0.2);
    FitConfig cfg;
    cfg.seed = 4;
    const auto m = fit_gp(d, cfg);
    const double mu = 0.2 / 3.0;
    const double vy = ((1.0 - mu) * (1.0 - mu) + (1.0 + mu) * (1.0 + mu) + (0.2 - mu) * (0.2 - mu)) / 3.0;
    EXPECT_GT(m.hyperparams().noise_variance, 1e-3 * vy);
}

TEST(FitGp, TwoPointsInterpolate) {
    Dataset d(Bounds::uniform(1, 0.0, 10.0));
    d.add(Vector::Constant(1, 2.0), 1.0);
    d.add(Vector::Constant(1, 7.0), -0.5);
    FitConfig cfg;
    cfg.seed = 9;
    const auto m = fit_gp(d, cfg);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(m.posterior(d.points[i]).mean, d.values[i], 1e-6);
}

TEST(FitGp, SinglePointFallsBackToPrior) {
    Dataset d(Bounds::uniform(1, 0.0, 1.0));
    d.add(Vector::Constant(1, 0.5), 3.0);
    const auto m = fit_gp(d, {});
    EXPECT_NEAR(m.posterior(Vector::Constant(1, 0.5)).mean, 3.0, 1e-6);
}

TEST(FitGp, EmptyDatasetIsInputError) {
    Dataset d(Bounds::uniform(1, 0.0, 1.0));
    EXPECT_THROW((void)fit_gp(d, {}), InputError);
}

TEST(FitGp, DeterministicPerSeed) {
    std::mt19937_64 rng(12);
    const auto data = random_dataset(rng, 10, 2);
    FitConfig cfg;
    cfg.seed = 77;
    EXPECT_EQ(fit_gp(data, cfg).hyperparams(), fit_gp(data, cfg).hyperparams());
}
