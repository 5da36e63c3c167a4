#ifndef HITLBO_LOOP_HPP
#define HITLBO_LOOP_HPP

#include <functional>
#include <optional>
#include <random>
#include <string>

#include "hitlbo/acquisition.hpp"
#include "hitlbo/gp.hpp"
#include "hitlbo/nsga2.hpp"
#include "hitlbo/sampling.hpp"

namespace hitlbo {

enum class ChoiceSource { utility_optimum, knee_alternate, fallback };

[[nodiscard]] inline const char* to_string(ChoiceSource s) {
    switch (s) {
        case ChoiceSource::utility_optimum: return "utility_optimum";
        case ChoiceSource::knee_alternate: return "knee_alternate";
        case ChoiceSource::fallback: return "fallback";
    }
    return "unknown";
}

struct Choice {
    Vector point;
    double utility = 0.0;
    double predicted_mean = 0.0;
    double predicted_std = 0.0;
    ChoiceSource source = ChoiceSource::knee_alternate;
};

struct ParetoSummary {
    std::size_t front_size = 0;
    ObjectivePair knee_objectives{0.0, 0.0};
    bool degenerate = false;   // alternates came from the LHS fallback
    std::size_t repaired = 0;  // alternates replaced because they collided with another choice
};

struct ChoiceSet {
    std::size_t iteration = 0;
    std::vector<Choice> choices;
    std::optional<ParetoSummary> pareto_summary;

    [[nodiscard]] std::size_t size() const { return choices.size(); }

    [[nodiscard]] std::size_t optimum_index() const {
        for (std::size_t i = 0; i < choices.size(); ++i)
            if (choices[i].source == ChoiceSource::utility_optimum) return i;
        throw InputError("choice set has no utility optimum");
    }
};

struct LoopConfig {
    int p = 4;
    int init_points = 4;
    int max_evaluations = 20;
    std::uint64_t seed = 0;
    UtilityConfig utility{};
    FitConfig fit{};
    MaximizeConfig maximize{};
    Nsga2Config nsga2{};
    /// Expert-supplied starting points, evaluated alongside the LHS design.
    std::vector<Vector> expert_seeds;

    void validate() const {
        if (p < 2) throw InputError("loop config: p must be >= 2");
        if (init_points < 1) throw InputError("loop config: init_points must be >= 1");
        if (max_evaluations <= init_points)
            throw InputError("loop config: max_evaluations must exceed init_points");
        utility.validate();
        nsga2.validate();
    }
};

struct HistoryRecord {
    ChoiceSet choices;
    /// Index into choices, or -1 when the expert supplied their own point.
    int selected = 0;
    Vector point;
    double observed = 0.0;
};

struct LoopState {
    Dataset dataset;
    GpModel model;
    std::vector<HistoryRecord> history;
    std::size_t init_count = 0;
    /// All randomness is derived from (seed, dataset size, purpose), so this is the whole generator state.
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t iteration() const { return history.size(); }
};

namespace stream {
inline constexpr std::uint64_t kDesign = 1;
inline constexpr std::uint64_t kFit = 2;
inline constexpr std::uint64_t kMaximize = 3;
inline constexpr std::uint64_t kNsga = 4;
inline constexpr std::uint64_t kRepair = 5;
inline constexpr std::uint64_t kSelector = 6;
} // namespace stream

/// LHS design plus any expert seeds (seeds first).
[[nodiscard]] inline std::vector<Vector> initial_design(const Bounds& bounds, const LoopConfig& cfg) {
    std::vector<Vector> pts;
    for (const auto& s : cfg.expert_seeds) {
        if (!bounds.contains(s)) throw InputError("initial design: expert seed lies outside bounds");
        pts.push_back(s);
    }
    auto lhs = latin_hypercube(bounds, static_cast<std::size_t>(cfg.init_points), derive_seed(cfg.seed, stream::kDesign));
    pts.insert(pts.end(), lhs.begin(), lhs.end());
    return pts;
}

[[nodiscard]] inline GpModel refit(const Dataset& data, const LoopConfig& cfg, std::uint64_t seed) {
    FitConfig fc = cfg.fit;
    fc.seed = derive_seed(seed, stream::kFit, data.size());
    return fit_gp(data, fc);
}

/// Loop state after the initial design has been evaluated.
[[nodiscard]] inline LoopState start_loop(Dataset initial, const LoopConfig& cfg) {
    cfg.validate();
    if (initial.empty()) throw InputError("start_loop: initial dataset is empty");
    LoopState st;
    st.seed = cfg.seed;
    st.init_count = initial.size();
    st.model = refit(initial, cfg, cfg.seed);
    st.dataset = std::move(initial);
    return st;
}

/// The single-objective utility step, shared with standard BO so trajectories can be compared.
[[nodiscard]] inline UtilityOptimum utility_step(const LoopState& state, const LoopConfig& cfg) {
    MaximizeConfig mc = cfg.maximize;
    mc.seed = derive_seed(state.seed, stream::kMaximize, state.dataset.size());
    return maximize_utility(state.model, state.dataset.bounds, cfg.utility, mc);
}

using FrontSink = std::function<void(std::size_t iteration, const ParetoFront&, Eigen::Index rows, Eigen::Index cols)>;

inline constexpr double kDistinctTolerance = 1e-9;

namespace detail {

[[nodiscard]] inline bool too_close(const Vector& a, const Vector& b) {
    return (a - b).lpNorm<Eigen::Infinity>() <= kDistinctTolerance;
}

[[nodiscard]] inline bool collides(const Vector& x, const std::vector<Vector>& taken) {
    return std::any_of(taken.begin(), taken.end(), [&](const Vector& t) { return too_close(x, t); });
}

} // namespace detail

/// Utility optimum plus the knee-point alternates of the bi-objective batch problem,
/// annotated with utility and predictive distribution and ordered by descending utility.
[[nodiscard]] inline ChoiceSet propose_choices(const LoopState& state, const LoopConfig& cfg,
                                               const FrontSink& sink = nullptr) {
    cfg.validate();
    const Bounds& bounds = state.dataset.bounds;
    const Eigen::Index n = bounds.dim();
    const Eigen::Index rows = cfg.p - 1;
    const GpModel& model = state.model;

    UtilityOptimum opt = utility_step(state, cfg);
    Vector xstar = opt.x;

    const Bounds flat(bounds.lower.replicate(rows, 1), bounds.upper.replicate(rows, 1));
    MooProblem problem{flat, [&](const Vector& v) {
                           const Matrix x = unflatten(v, rows, n);
                           return ObjectivePair{batch_utility(model, x, cfg.utility), variability(model, x, xstar)};
                       }};

    std::mt19937_64 rng(derive_seed(state.seed, stream::kRepair, state.dataset.size()));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector anchor_seed(rows * n);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index d = 0; d < n; ++d)
            anchor_seed[r * n + d] = xstar[d] + 1e-3 * bounds.width()[d] * gauss(rng);

    Nsga2Config nc = cfg.nsga2;
    nc.seed = derive_seed(state.seed, stream::kNsga, state.dataset.size());
    const auto result = nsga2(problem, nc, {flat.clip(anchor_seed)});
    const ParetoFront& front = result.front;
    if (sink) sink(state.iteration(), front, rows, n);

    ParetoSummary summary;
    summary.front_size = front.size();
    summary.knee_objectives = front.objective_values[front.knee_index];

    std::vector<Vector> taken{xstar};
    std::vector<Vector> alternates;
    if (summary.knee_objectives[1] <= kDegenerateObjective) {
        summary.degenerate = true;
        for (auto& x : latin_hypercube(bounds, static_cast<std::size_t>(rows), derive_seed(state.seed, stream::kRepair, 1000 + state.dataset.size()))) {
            while (detail::collides(x, taken)) x = bounds.clip(x + 1e-6 * bounds.width());
            taken.push_back(x);
            alternates.push_back(x);
        }
    } else {
        const Matrix knee = unflatten(front.solutions[front.knee_index], rows, n);
        // Other front members, nearest to the knee first, supply replacement rows.
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return (front.solutions[a] - front.solutions[front.knee_index]).norm() <
                   (front.solutions[b] - front.solutions[front.knee_index]).norm();
        });
        for (Eigen::Index r = 0; r < rows; ++r) {
            Vector x = knee.row(r).transpose();
            if (detail::collides(x, taken)) {
                ++summary.repaired;
                bool replaced = false;
                for (auto m : order) {
                    if (m == front.knee_index) continue;
                    Vector cand = front.solutions[m].segment(r * n, n);
                    if (!detail::collides(cand, taken)) {
                        x = cand;
                        replaced = true;
                        break;
                    }
                }
                std::uniform_int_distribution<int> coin(0, 1);
                while (!replaced || detail::collides(x, taken)) {
                    Vector step(n);
                    for (Eigen::Index d = 0; d < n; ++d) step[d] = (coin(rng) ? 1.0 : -1.0) * 1e-6 * bounds.width()[d];
                    x = bounds.clip(x + step);
                    replaced = true;
                }
            }
            taken.push_back(x);
            alternates.push_back(x);
        }
    }

    // The optimum must carry the largest utility; if an alternate beats it, polish that alternate
    // and promote it, demoting the old optimum into its slot.
    for (int guard = 0; guard < cfg.p; ++guard) {
        std::size_t best = alternates.size();
        double best_u = opt.utility;
        for (std::size_t i = 0; i < alternates.size(); ++i) {
            const double u = ucb(model, alternates[i], cfg.utility);
            if (u > best_u) {
                best_u = u;
                best = i;
            }
        }
        if (best == alternates.size()) break;
        const Objective f = [&](const Vector& x) { return ucb(model, x, cfg.utility); };
        auto polished = maximize_box(f, bounds, alternates[best], cfg.maximize.ascent);
        Vector promoted = alternates[best];
        std::vector<Vector> others{xstar};
        for (std::size_t i = 0; i < alternates.size(); ++i)
            if (i != best) others.push_back(alternates[i]);
        if (polished.value > best_u && !detail::collides(bounds.clip(polished.x), others)) promoted = bounds.clip(polished.x);
        alternates[best] = xstar;
        xstar = promoted;
        opt.utility = ucb(model, xstar, cfg.utility);
    }

    auto annotate = [&](const Vector& x, ChoiceSource src) {
        const auto pr = model.posterior(x);
        return Choice{x, pr.mean + cfg.utility.beta * pr.std, pr.mean, pr.std, src};
    };
    ChoiceSet cs;
    cs.iteration = state.iteration();
    cs.choices.push_back(annotate(xstar, ChoiceSource::utility_optimum));
    for (const auto& a : alternates)
        cs.choices.push_back(annotate(a, summary.degenerate ? ChoiceSource::fallback : ChoiceSource::knee_alternate));
    std::stable_sort(cs.choices.begin(), cs.choices.end(),
                     [](const Choice& a, const Choice& b) { return a.utility > b.utility; });
    cs.pareto_summary = summary;
    return cs;
}

/// Appends (point, y), refits the surrogate and records the decision. The input state is untouched.
[[nodiscard]] inline LoopState apply_selection(const LoopState& state, const ChoiceSet& choices, int choice_index,
                                               double observed_y, const LoopConfig& cfg) {
    if (choice_index < 0 || static_cast<std::size_t>(choice_index) >= choices.size())
        throw InputError("apply_selection: choice index " + std::to_string(choice_index) + " out of range");
    if (!std::isfinite(observed_y)) throw InputError("apply_selection: observed value must be finite");
    LoopState next = state;
    const Vector& x = choices.choices[static_cast<std::size_t>(choice_index)].point;
    next.dataset.add(x, observed_y);
    next.model = refit(next.dataset, cfg, next.seed);
    next.history.push_back({choices, choice_index, x, observed_y});
    return next;
}

/// Records an evaluation at a point the expert chose instead of any offered choice.
[[nodiscard]] inline LoopState apply_override(const LoopState& state, const ChoiceSet& choices, const Vector& point,
                                              double observed_y, const LoopConfig& cfg) {
    if (!std::isfinite(observed_y)) throw InputError("apply_override: observed value must be finite");
    if (!state.dataset.bounds.contains(point)) throw InputError("apply_override: point lies outside bounds");
    LoopState next = state;
    next.dataset.add(point, observed_y);
    next.model = refit(next.dataset, cfg, next.seed);
    next.history.push_back({choices, -1, point, observed_y});
    return next;
}

using BlackBox = std::function<double(const Vector&)>;
using Selector = std::function<std::size_t(const ChoiceSet&)>;

struct LoopRun {
    LoopState state;
    std::vector<double> observed;      // every evaluation in order, initial design included
    std::optional<std::string> error;  // set when the run aborted; `observed` keeps the partial trace
};

/// Evaluates the initial design, then proposes, selects, evaluates and refits until the
/// evaluation budget is spent.
[[nodiscard]] inline LoopRun run_loop(const BlackBox& objective, const Selector& selector, const Bounds& bounds,
                                      const LoopConfig& cfg, const FrontSink& sink = nullptr) {
    cfg.validate();
    LoopRun run;
    Dataset init(bounds);
    for (const auto& x : initial_design(bounds, cfg)) {
        const double y = objective(x);
        init.add(x, y);
        run.observed.push_back(y);
    }
    run.state = start_loop(std::move(init), cfg);
    while (static_cast<int>(run.state.dataset.size()) < cfg.max_evaluations) {
        const ChoiceSet cs = propose_choices(run.state, cfg, sink);
        std::size_t idx = 0;
        try {
            idx = selector(cs);
        } catch (const std::exception& e) {
            run.error = std::string("selector failed: ") + e.what();
            return run;
        }
        if (idx >= cs.size()) {
            run.error = "selector returned out-of-range index " + std::to_string(idx);
            return run;
        }
        const double y = objective(cs.choices[idx].point);
        if (!std::isfinite(y)) {
            run.error = "objective returned a non-finite value";
            return run;
        }
        run.state = apply_selection(run.state, cs, static_cast<int>(idx), y, cfg);
        run.observed.push_back(y);
    }
    return run;
}

} // namespace hitlbo

#endif // HITLBO_LOOP_HPP
