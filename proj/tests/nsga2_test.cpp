#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hitlbo/acquisition.hpp"
#include "hitlbo/nsga2.hpp"

using namespace hitlbo;

namespace {

// Reference ranking: peel off points that no remaining point dominates, by exhaustive scan.
std::vector<std::set<std::size_t>> brute_force_fronts(const std::vector<ObjectivePair>& pts) {
    std::set<std::size_t> remaining;
    for (std::size_t i = 0; i < pts.size(); ++i) remaining.insert(i);
    std::vector<std::set<std::size_t>> out;
    while (!remaining.empty()) {
        std::set<std::size_t> front;
        for (auto i : remaining) {
            bool dominated = false;
            for (auto j : remaining) {
                const bool geq = pts[j][0] >= pts[i][0] && pts[j][1] >= pts[i][1];
                const bool gt = pts[j][0] > pts[i][0] || pts[j][1] > pts[i][1];
                if (geq && gt) dominated = true;
            }
            if (!dominated) front.insert(i);
        }
        for (auto i : front) remaining.erase(i);
        out.push_back(front);
    }
    return out;
}

std::vector<ObjectivePair> random_points(std::size_t n, std::uint64_t seed, bool integer_grid) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> k(0, 6);
    std::vector<ObjectivePair> pts(n);
    for (auto& p : pts) p = integer_grid ? ObjectivePair{double(k(rng)), double(k(rng))} : ObjectivePair{u(rng), u(rng)};
    return pts;
}

MooProblem line_problem() {
    return {Bounds::uniform(1, 0.0, 1.0), [](const Vector& x) { return ObjectivePair{x[0], 1.0 - x[0]}; }};
}

Nsga2Config small_config(std::uint64_t seed) {
    Nsga2Config c;
    c.population = 40;
    c.generations = 60;
    c.offspring_per_gen = 20;
    c.seed = seed;
    return c;
}

double min_pairwise(const Matrix& rows) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        for (Eigen::Index j = i + 1; j < rows.rows(); ++j) best = std::min(best, (rows.row(i) - rows.row(j)).norm());
    return best;
}

} // namespace

TEST(NonDominatedSort, StrictDomination) {
    const auto fronts = non_dominated_sort({{1, 1}, {2, 2}});
    ASSERT_EQ(fronts.size(), 2u);
    EXPECT_EQ(fronts[0], std::vector<std::size_t>{1});
    EXPECT_EQ(fronts[1], std::vector<std::size_t>{0});
}

TEST(NonDominatedSort, TradeOffIsOneFront) {
    const auto fronts = non_dominated_sort({{1, 2}, {2, 1}});
    ASSERT_EQ(fronts.size(), 1u);
    EXPECT_EQ(fronts[0].size(), 2u);
}

TEST(NonDominatedSort, SentinelIsAlwaysDominated) {
    const double s = std::numeric_limits<double>::lowest();
    const auto fronts = non_dominated_sort({{s, s}, {-5.0, -5.0}});
    EXPECT_EQ(fronts[0], std::vector<std::size_t>{1});
}

TEST(NonDominatedSort, MatchesBruteForceOracle) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        for (bool grid : {false, true}) {
            for (std::size_t n : {50u, 200u}) {
                const auto pts = random_points(n, seed, grid);
                const auto fronts = non_dominated_sort(pts);
                const auto oracle = brute_force_fronts(pts);
                ASSERT_EQ(fronts.size(), oracle.size());
                for (std::size_t r = 0; r < fronts.size(); ++r)
                    EXPECT_EQ(std::set<std::size_t>(fronts[r].begin(), fronts[r].end()), oracle[r]);
            }
        }
    }
}

TEST(CrowdingDistance, TwoMembersAreInfinite) {
    const auto cd = crowding_distance({{0, 1}, {1, 0}});
    EXPECT_TRUE(std::isinf(cd[0]));
    EXPECT_TRUE(std::isinf(cd[1]));
}

TEST(CrowdingDistance, CollinearInteriorIsTwo) {
    const auto cd = crowding_distance({{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}});
    EXPECT_TRUE(std::isinf(cd[0]));
    EXPECT_NEAR(cd[1], 2.0, 1e-15);
    EXPECT_TRUE(std::isinf(cd[2]));
}

TEST(CrowdingDistance, IdenticalMembers) {
    const auto cd = crowding_distance({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    int infinite = 0;
    for (double c : cd) {
        if (std::isinf(c)) ++infinite;
        else EXPECT_EQ(c, 0.0);
    }
    EXPECT_EQ(infinite, 2);
}

TEST(KneePoint, MiddleOfBentFront) { EXPECT_EQ(knee_point({{0, 1}, {0.5, 0.9}, {1, 0}}), 1u); }

TEST(KneePoint, TwoMembersPickLargerFirstObjective) {
    EXPECT_EQ(knee_point({{0.2, 5.0}, {0.7, 1.0}}), 1u);
    EXPECT_EQ(knee_point({{0.3, 1.0}}), 0u);
}

TEST(KneePoint, CollinearPicksLargerFirstObjective) {
    EXPECT_EQ(knee_point({{0.0, 1.0}, {0.25, 0.75}, {0.5, 0.5}, {0.75, 0.25}, {1.0, 0.0}}), 4u);
}

TEST(KneePoint, InvariantUnderPositiveAffineMaps) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
        // Concave trade-off front with random spacing.
        std::vector<ObjectivePair> front;
        const int n = 3 + trial % 8;
        for (int i = 0; i < n; ++i) {
            const double t = u(rng);
            front.push_back({t, std::sqrt(1.0 - t * t) + 0.05 * u(rng)});
        }
        const auto base = knee_point(front);
        const double a0 = scale(rng), b0 = shift(rng), a1 = scale(rng), b1 = shift(rng);
        std::vector<ObjectivePair> mapped;
        for (const auto& p : front) mapped.push_back({a0 * p[0] + b0, a1 * p[1] + b1});
        EXPECT_EQ(knee_point(mapped), base) << "trial " << trial;
    }
}

TEST(Hypervolume, UnitSquareCorner) {
    EXPECT_DOUBLE_EQ(hypervolume_2d({{1.0, 1.0}}, {0.0, 0.0}), 1.0);
    EXPECT_DOUBLE_EQ(hypervolume_2d({{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}}, {0.0, 0.0}), 0.25);
}

TEST(Nsga2, LineProblemCoversInterval) {
    const auto r = nsga2(line_problem(), Nsga2Config{});
    EXPECT_GE(hypervolume_2d(r.front.objective_values, {0.0, 0.0}), 0.45);
}

TEST(Nsga2, ConstantSecondObjectiveCollapsesToArgmax) {
    const MooProblem p{Bounds::uniform(1, -2.0, 3.0),
                       [](const Vector& x) { return ObjectivePair{-(x[0] - 1.3) * (x[0] - 1.3), 7.0}; }};
    const auto r = nsga2(p, Nsga2Config{});
    for (const auto& s : r.front.solutions) EXPECT_NEAR(s[0], 1.3, 1e-2);
}

TEST(Nsga2, DeterministicPerSeed) {
    const auto a = nsga2(line_problem(), small_config(21));
    const auto b = nsga2(line_problem(), small_config(21));
    ASSERT_EQ(a.front.size(), b.front.size());
    for (std::size_t i = 0; i < a.front.size(); ++i) {
        EXPECT_EQ(a.front.solutions[i], b.front.solutions[i]);
        EXPECT_EQ(a.front.objective_values[i], b.front.objective_values[i]);
    }
    EXPECT_EQ(a.front.knee_index, b.front.knee_index);
}

TEST(Nsga2, NanObjectivesAreDominatedNotPropagated) {
    const MooProblem p{Bounds::uniform(1, 0.0, 1.0), [](const Vector& x) {
                           if (x[0] < 0.5) return ObjectivePair{std::nan(""), 0.0};
                           return ObjectivePair{x[0], 1.0 - x[0]};
                       }};
    const auto r = nsga2(p, small_config(4));
    for (std::size_t i = 0; i < r.front.size(); ++i) {
        EXPECT_TRUE(std::isfinite(r.front.objective_values[i][0]));
        EXPECT_GE(r.front.solutions[i][0], 0.5);
    }
}

TEST(Nsga2, InvalidConfigIsInputError) {
    Nsga2Config c;
    c.offspring_per_gen = 3;
    EXPECT_THROW((void)nsga2(line_problem(), c), InputError);
    c = {};
    c.population = 3;
    EXPECT_THROW((void)nsga2(line_problem(), c), InputError);
}

// Front and progress properties on the batch problem itself.
class BatchProblem : public ::testing::TestWithParam<std::uint64_t> {
protected:
    void SetUp() override {
        const std::uint64_t seed = GetParam();
        Dataset d(Bounds::uniform(1, 0.0, 10.0));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        for (const auto& x : latin_hypercube(d.bounds, 5, seed)) d.add(x, g(rng));
        model_ = GpModel::condition(d, {1.2, 1.0, 1e-6});
        anchor_ = maximize_utility(model_, d.bounds, {}, {}).x;
        problem_.bounds = Bounds::uniform(3, 0.0, 10.0);
        problem_.objectives = [this](const Vector& v) {
            const Matrix x = unflatten(v, 3, 1);
            return ObjectivePair{batch_utility(model_, x), variability(model_, x, anchor_)};
        };
        Nsga2Config cfg;
        cfg.seed = seed;
        result_ = nsga2(problem_, cfg);
    }

    GpModel model_;
    Vector anchor_;
    MooProblem problem_;
    Nsga2Result result_;
};

TEST_P(BatchProblem, FrontIsMutuallyNonDominated) {
    const auto& f = result_.front.objective_values;
    ASSERT_FALSE(f.empty());
    for (std::size_t a = 0; a < f.size(); ++a)
        for (std::size_t b = 0; b < f.size(); ++b) EXPECT_FALSE(dominates(f[a], f[b]));
    EXPECT_LT(result_.front.knee_index, f.size());
}

TEST_P(BatchProblem, BestFirstObjectiveNeverDecreases) {
    const auto& h = result_.best_first_objective;
    ASSERT_EQ(h.size(), 151u);
    for (std::size_t g = 1; g < h.size(); ++g) EXPECT_GE(h[g], h[g - 1]);
}

TEST_P(BatchProblem, VariabilityExtremeSpreadsAtLeastAsWideAsKnee) {
    const auto& f = result_.front;
    std::size_t s_best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f.objective_values[i][1] > f.objective_values[s_best][1]) s_best = i;
    const auto spread = [&](std::size_t i) { return min_pairwise(augment(unflatten(f.solutions[i], 3, 1), anchor_)); };
    EXPECT_GE(spread(s_best), spread(f.knee_index) - 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, BatchProblem, ::testing::Values(1u, 2u, 3u, 4u, 5u));
