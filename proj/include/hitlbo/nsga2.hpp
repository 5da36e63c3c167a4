#ifndef HITLBO_NSGA2_HPP
#define HITLBO_NSGA2_HPP

#include <algorithm>
#include <array>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "hitlbo/core.hpp"
#include "hitlbo/sampling.hpp"

namespace hitlbo {

/// Two objectives, both maximized. Index 0 is the batch utility, index 1 the variability.
using ObjectivePair = std::array<double, 2>;

[[nodiscard]] inline bool dominates(const ObjectivePair& a, const ObjectivePair& b) {
    return a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1]);
}

/// Fast non-dominated sort. Fronts are ordered by rank; indices inside a front ascend.
[[nodiscard]] inline std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<ObjectivePair>& pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(pts[i], pts[j])) {
                dominated_by_me[i].push_back(j);
                ++domination_count[j];
            } else if (dominates(pts[j], pts[i])) {
                dominated_by_me[j].push_back(i);
                ++domination_count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (domination_count[i] == 0) current.push_back(i);

    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current) {
            for (auto j : dominated_by_me[i]) {
                if (--domination_count[j] == 0) next.push_back(j);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance of each member of one front. Boundary members per objective get +inf;
/// interior members accumulate neighbor gaps normalized by that objective's range.
[[nodiscard]] inline std::vector<double> crowding_distance(const std::vector<ObjectivePair>& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 2; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][m] < front[b][m]; });
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double range = front[order.back()][m] - front[order.front()][m];
        if (!(range > 0.0) || !std::isfinite(range)) continue;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double gap = (front[order[k + 1]][m] - front[order[k - 1]][m]) / range;
            if (std::isfinite(gap)) dist[order[k]] += gap;
        }
    }
    return dist;
}

/// Member maximizing the signed perpendicular distance (toward the ideal corner) to the chord
/// joining the two extreme members, after min-max normalizing both objectives over the front.
/// Fronts of one or two members, and ties within 1e-12, resolve to the larger first objective,
/// then the lower index.
[[nodiscard]] inline std::size_t knee_point(const std::vector<ObjectivePair>& front) {
    const std::size_t n = front.size();
    if (n == 0) throw InputError("knee_point: empty front");
    auto better_u = [&](std::size_t a, std::size_t b) { return front[a][0] > front[b][0]; };
    if (n <= 2) return (n == 2 && better_u(1, 0)) ? 1 : 0;

    std::array<double, 2> lo{}, hi{};
    for (std::size_t m = 0; m < 2; ++m) {
        lo[m] = hi[m] = front[0][m];
        for (const auto& p : front) {
            lo[m] = std::min(lo[m], p[m]);
            hi[m] = std::max(hi[m], p[m]);
        }
    }
    std::vector<std::array<double, 2>> z(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < 2; ++m) {
            const double r = hi[m] - lo[m];
            z[i][m] = (r > 0.0 && std::isfinite(r)) ? (front[i][m] - lo[m]) / r : 0.0;
        }

    std::size_t a = 0, b = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (z[i][0] > z[a][0] || (z[i][0] == z[a][0] && z[i][1] > z[a][1])) a = i;
        if (z[i][1] > z[b][1] || (z[i][1] == z[b][1] && z[i][0] > z[b][0])) b = i;
    }

    std::vector<double> d(n, 0.0);
    const double dx = z[b][0] - z[a][0];
    const double dy = z[b][1] - z[a][1];
    const double len = std::hypot(dx, dy);
    if (len > 0.0) {
        const double nx = dy / len;
        const double ny = -dx / len;
        for (std::size_t i = 0; i < n; ++i) d[i] = (z[i][0] - z[a][0]) * nx + (z[i][1] - z[a][1]) * ny;
    }

    constexpr double tie = 1e-12;
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (d[i] > d[best] + tie) {
            best = i;
        } else if (std::abs(d[i] - d[best]) <= tie && better_u(i, best)) {
            best = i;
        }
    }
    return best;
}

/// Dominated hypervolume of a maximization front relative to `ref`.
[[nodiscard]] inline double hypervolume_2d(std::vector<ObjectivePair> pts, const ObjectivePair& ref) {
    std::erase_if(pts, [&](const ObjectivePair& p) { return !(p[0] > ref[0] && p[1] > ref[1]); });
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
    double hv = 0.0;
    double top = ref[1];
    for (const auto& p : pts) {
        if (p[1] > top) {
            hv += (p[0] - ref[0]) * (p[1] - top);
            top = p[1];
        }
    }
    return hv;
}

struct MooProblem {
    Bounds bounds; // over the flattened decision vector
    std::function<ObjectivePair(const Vector&)> objectives;
};

struct Nsga2Config {
    int population = 100;
    int generations = 150;
    int offspring_per_gen = 30;
    double crossover_prob = 0.9;
    int mutations_per_gen = 20;
    double sbx_eta = 15.0;
    double mutation_eta = 20.0;
    std::uint64_t seed = 0;
    double dedup_tolerance = 1e-9;

    void validate() const {
        if (population < 4) throw InputError("nsga2: population must be >= 4");
        if (offspring_per_gen < 2 || offspring_per_gen % 2 != 0)
            throw InputError("nsga2: offspring_per_gen must be even and >= 2");
        if (generations < 0 || mutations_per_gen < 0) throw InputError("nsga2: negative generation/mutation count");
        if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) throw InputError("nsga2: crossover_prob not in [0,1]");
        if (!(sbx_eta > 0.0) || !(mutation_eta > 0.0)) throw InputError("nsga2: distribution indices must be > 0");
    }
};

struct ParetoFront {
    std::vector<Vector> solutions;
    std::vector<ObjectivePair> objective_values;
    std::size_t knee_index = 0;

    [[nodiscard]] std::size_t size() const { return solutions.size(); }
};

struct Nsga2Result {
    ParetoFront front;
    /// Largest first objective in the population after each generation (index 0 = initial).
    std::vector<double> best_first_objective;
};

/// Objective values at or below this are treated as failed evaluations when extracting the front.
inline constexpr double kDegenerateObjective = -1e299;

namespace detail {

inline void sbx_crossover(Vector& c1, Vector& c2, const Bounds& b, double eta, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index i = 0; i < c1.size(); ++i) {
        if (unit(rng) > 0.5) continue;
        if (std::abs(c1[i] - c2[i]) <= 1e-14) continue;
        const double y1 = std::min(c1[i], c2[i]);
        const double y2 = std::max(c1[i], c2[i]);
        const double yl = b.lower[i];
        const double yu = b.upper[i];
        const double r = unit(rng);

        auto betaq_for = [&](double beta) {
            const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            return r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                                    : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
        };
        double v1 = 0.5 * ((y1 + y2) - betaq_for(1.0 + 2.0 * (y1 - yl) / (y2 - y1)) * (y2 - y1));
        double v2 = 0.5 * ((y1 + y2) + betaq_for(1.0 + 2.0 * (yu - y2) / (y2 - y1)) * (y2 - y1));
        v1 = std::clamp(v1, yl, yu);
        v2 = std::clamp(v2, yl, yu);
        if (unit(rng) <= 0.5) std::swap(v1, v2);
        c1[i] = v1;
        c2[i] = v2;
    }
}

inline void polynomial_mutation(Vector& x, Eigen::Index i, const Bounds& b, double eta, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double yl = b.lower[i];
    const double yu = b.upper[i];
    const double y = x[i];
    const double d1 = (y - yl) / (yu - yl);
    const double d2 = (yu - y) / (yu - yl);
    const double r = unit(rng);
    const double pw = 1.0 / (eta + 1.0);
    double dq;
    if (r <= 0.5) {
        const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(val, pw) - 1.0;
    } else {
        const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(val, pw);
    }
    x[i] = std::clamp(y + dq * (yu - yl), yl, yu);
}

[[nodiscard]] inline ObjectivePair sanitize(ObjectivePair v) {
    for (auto& x : v)
        if (std::isnan(x)) x = std::numeric_limits<double>::lowest();
    for (auto& x : v)
        if (x == -std::numeric_limits<double>::infinity()) x = std::numeric_limits<double>::lowest();
    return v;
}

} // namespace detail

/// Elitist NSGA-II with a steady injection of `offspring_per_gen` children per generation.
/// `seeds` replace the first individuals of the Latin-hypercube initial population.
[[nodiscard]] inline Nsga2Result nsga2(const MooProblem& problem, const Nsga2Config& cfg,
                                       const std::vector<Vector>& seeds = {}) {
    cfg.validate();
    const Bounds& box = problem.bounds;
    const auto pop_size = static_cast<std::size_t>(cfg.population);
    std::mt19937_64 rng(cfg.seed);

    std::vector<Vector> pop = latin_hypercube(box, pop_size, rng());
    for (std::size_t i = 0; i < seeds.size() && i < pop_size; ++i) {
        if (seeds[i].size() != box.dim()) throw InputError("nsga2: seed individual has wrong dimension");
        pop[i] = box.clip(seeds[i]);
    }
    std::vector<ObjectivePair> fit(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = detail::sanitize(problem.objectives(pop[i]));

    std::vector<std::size_t> rank(pop.size());
    std::vector<double> crowd(pop.size());
    auto assign_rank_crowding = [&]() {
        const auto fronts = non_dominated_sort(fit);
        rank.assign(pop.size(), 0);
        crowd.assign(pop.size(), 0.0);
        for (std::size_t r = 0; r < fronts.size(); ++r) {
            std::vector<ObjectivePair> f;
            for (auto i : fronts[r]) f.push_back(fit[i]);
            const auto cd = crowding_distance(f);
            for (std::size_t k = 0; k < fronts[r].size(); ++k) {
                rank[fronts[r][k]] = r;
                crowd[fronts[r][k]] = cd[k];
            }
        }
        return fronts;
    };

    Nsga2Result result;
    auto record_best = [&]() {
        double b = -std::numeric_limits<double>::infinity();
        for (const auto& f : fit) b = std::max(b, f[0]);
        result.best_first_objective.push_back(b);
    };
    assign_rank_crowding();
    record_best();

    std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto tournament = [&]() {
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        if (rank[a] != rank[b]) return rank[a] < rank[b] ? a : b;
        if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? a : b;
        return a;
    };

    const auto n_off = static_cast<std::size_t>(cfg.offspring_per_gen);
    for (int gen = 0; gen < cfg.generations; ++gen) {
        std::vector<Vector> children;
        children.reserve(n_off);
        while (children.size() < n_off) {
            Vector c1 = pop[tournament()];
            Vector c2 = pop[tournament()];
            if (unit(rng) <= cfg.crossover_prob) detail::sbx_crossover(c1, c2, box, cfg.sbx_eta, rng);
            children.push_back(std::move(c1));
            children.push_back(std::move(c2));
        }
        if (box.dim() > 0) {
            std::uniform_int_distribution<std::size_t> pick_child(0, children.size() - 1);
            std::uniform_int_distribution<Eigen::Index> pick_coord(0, box.dim() - 1);
            for (int m = 0; m < cfg.mutations_per_gen; ++m) {
                const std::size_t c = pick_child(rng);
                const Eigen::Index k = pick_coord(rng);
                detail::polynomial_mutation(children[c], k, box, cfg.mutation_eta, rng);
            }
        }
        for (auto& c : children) {
            fit.push_back(detail::sanitize(problem.objectives(c)));
            pop.push_back(std::move(c));
        }

        // Survivor selection over parents + children: whole fronts by rank, the last one by crowding.
        const auto fronts = assign_rank_crowding();
        std::vector<std::size_t> keep;
        keep.reserve(pop_size);
        for (const auto& f : fronts) {
            if (keep.size() + f.size() <= pop_size) {
                keep.insert(keep.end(), f.begin(), f.end());
                if (keep.size() == pop_size) break;
                continue;
            }
            std::vector<std::size_t> last = f;
            std::stable_sort(last.begin(), last.end(), [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
            last.resize(pop_size - keep.size());
            std::sort(last.begin(), last.end());
            keep.insert(keep.end(), last.begin(), last.end());
            break;
        }
        std::vector<Vector> npop;
        std::vector<ObjectivePair> nfit;
        npop.reserve(pop_size);
        nfit.reserve(pop_size);
        for (auto i : keep) {
            npop.push_back(std::move(pop[i]));
            nfit.push_back(fit[i]);
        }
        pop = std::move(npop);
        fit = std::move(nfit);
        assign_rank_crowding();
        record_best();
    }

    // Final rank-0 front, degenerate members dropped when possible, duplicates removed.
    const auto fronts = non_dominated_sort(fit);
    std::vector<std::size_t> members = fronts.front();
    std::vector<std::size_t> healthy;
    for (auto i : members)
        if (fit[i][0] > kDegenerateObjective && fit[i][1] > kDegenerateObjective) healthy.push_back(i);
    if (!healthy.empty()) members = std::move(healthy);
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return fit[a][0] > fit[b][0]; });

    ParetoFront& front = result.front;
    for (auto i : members) {
        bool dup = false;
        for (const auto& s : front.solutions) {
            if ((s - pop[i]).lpNorm<Eigen::Infinity>() <= cfg.dedup_tolerance) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        front.solutions.push_back(pop[i]);
        front.objective_values.push_back(fit[i]);
    }
    front.knee_index = knee_point(front.objective_values);
    return result;
}

/// Rows of a flattened (rows x cols) decision vector, row-major.
[[nodiscard]] inline Matrix unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw InputError("unflatten: size mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = v.segment(r * cols, cols).transpose();
    return m;
}

[[nodiscard]] inline Vector flatten(const Matrix& m) {
    Vector v(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) v.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
    return v;
}

} // namespace hitlbo

#endif // HITLBO_NSGA2_HPP
