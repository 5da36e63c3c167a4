#ifndef HITLBO_BENCHMARK_HPP
#define HITLBO_BENCHMARK_HPP

#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hitlbo/loop.hpp"
#include "hitlbo/practitioners.hpp"
#include "hitlbo/serialization.hpp"
#include "hitlbo/test_functions.hpp"

namespace hitlbo {

inline constexpr int kSchemaVersion = 1;

struct RegretTrace {
    std::vector<double> simple_regret;
    std::vector<double> average_regret;
    std::string function;
    std::string behavior;
    std::uint64_t seed = 0;
};

/// Simple and average regret after each evaluation (maximization convention).
/// Shortfalls of f_star below the observed maximum up to 1e-6 are clamped to zero regret.
[[nodiscard]] inline RegretTrace regret(const std::vector<double>& observed, double f_star) {
    RegretTrace t;
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i] > f_star + 1e-6)
            throw InputError("regret: observed value exceeds f_star by more than 1e-6");
        best = std::max(best, observed[i]);
        sum += std::max(f_star - observed[i], 0.0);
        t.simple_regret.push_back(std::max(f_star - best, 0.0));
        t.average_regret.push_back(sum / static_cast<double>(i + 1));
    }
    return t;
}

struct ExperimentGrid {
    std::vector<TestFunction> functions;
    std::vector<Behavior> behaviors;
    int repeats = 1;
    LoopConfig loop{};
    std::uint64_t master_seed = 0;
    int jobs = 1;
    /// Free-form settings echoed into the JSON bundle.
    nlohmann::json metadata = nlohmann::json::object();

    void validate() const {
        if (repeats < 1) throw InputError("experiment grid: repeats must be >= 1");
        if (functions.empty()) throw InputError("experiment grid: no functions");
        if (behaviors.empty()) throw InputError("experiment grid: no behaviors");
        for (const auto& f : functions)
            if (!f.has_true_max()) throw InputError("experiment grid: function " + f.name + " has no true maximum");
        loop.validate();
    }
};

struct CellResult {
    std::size_t function_index = 0;
    std::size_t behavior_index = 0;
    int repeat = 0;
    std::uint64_t loop_seed = 0;
    std::uint64_t selector_seed = 0;
    bool ok = false;
    std::string message;
    RegretTrace trace;
    std::vector<double> observed;
};

struct AggregateCurve {
    std::string family;
    std::string behavior;
    std::size_t runs = 0;
    std::vector<double> mean_simple, std_simple, mean_average, std_average;
};

struct GridResults {
    std::vector<CellResult> cells;
    std::vector<AggregateCurve> aggregates;

    [[nodiscard]] const AggregateCurve& curve(const std::string& family, const std::string& behavior) const {
        for (const auto& a : aggregates)
            if (a.family == family && a.behavior == behavior) return a;
        throw InputError("no aggregate for " + family + "/" + behavior);
    }
};

namespace detail {

[[nodiscard]] inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void mean_std(const std::vector<const std::vector<double>*>& series, std::vector<double>& mean,
                     std::vector<double>& sd) {
    std::size_t len = 0;
    for (auto* s : series) len = std::max(len, s->size());
    mean.assign(len, 0.0);
    sd.assign(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double acc = 0.0;
        std::size_t n = 0;
        for (auto* s : series)
            if (t < s->size()) {
                acc += (*s)[t];
                ++n;
            }
        if (n == 0) continue;
        const double m = acc / static_cast<double>(n);
        double v = 0.0;
        for (auto* s : series)
            if (t < s->size()) v += ((*s)[t] - m) * ((*s)[t] - m);
        mean[t] = m;
        sd[t] = std::sqrt(v / static_cast<double>(n));
    }
}

} // namespace detail

[[nodiscard]] inline std::vector<AggregateCurve> aggregate(const ExperimentGrid& grid,
                                                           const std::vector<CellResult>& cells) {
    // Keys in first-seen order so output is independent of completion order.
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& c : cells) {
        std::pair<std::string, std::string> k{grid.functions[c.function_index].family,
                                              grid.behaviors[c.behavior_index].name()};
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    std::vector<AggregateCurve> out;
    for (const auto& [family, behavior] : keys) {
        AggregateCurve a{family, behavior, 0, {}, {}, {}, {}};
        std::vector<const std::vector<double>*> simple, average;
        for (const auto& c : cells) {
            if (!c.ok) continue;
            if (grid.functions[c.function_index].family != family) continue;
            if (grid.behaviors[c.behavior_index].name() != behavior) continue;
            simple.push_back(&c.trace.simple_regret);
            average.push_back(&c.trace.average_regret);
        }
        a.runs = simple.size();
        detail::mean_std(simple, a.mean_simple, a.std_simple);
        detail::mean_std(average, a.mean_average, a.std_average);
        out.push_back(std::move(a));
    }
    return out;
}

/// Runs every (function, behavior, repeat) cell. The initial design and surrogate seeds depend
/// only on (master seed, function, repeat), so behaviors are compared on common random numbers;
/// each cell's selector draws from its own stream derived from (master seed, cell index).
[[nodiscard]] inline GridResults run_experiment_grid(const ExperimentGrid& grid,
                                                     const std::function<void(const CellResult&)>& progress = nullptr) {
    grid.validate();
    const std::size_t nf = grid.functions.size();
    const std::size_t nb = grid.behaviors.size();
    const auto nr = static_cast<std::size_t>(grid.repeats);
    std::vector<CellResult> cells(nf * nb * nr);
    for (std::size_t f = 0; f < nf; ++f)
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t r = 0; r < nr; ++r) {
                const std::size_t idx = (f * nb + b) * nr + r;
                auto& c = cells[idx];
                c.function_index = f;
                c.behavior_index = b;
                c.repeat = static_cast<int>(r);
                c.loop_seed = derive_seed(grid.master_seed, 100 + f, r);
                c.selector_seed = derive_seed(grid.master_seed, idx, stream::kSelector);
            }

    std::mutex progress_mutex;
    auto run_cell = [&](CellResult& c) {
        const TestFunction& fn = grid.functions[c.function_index];
        const Behavior& behavior = grid.behaviors[c.behavior_index];
        LoopConfig cfg = grid.loop;
        cfg.seed = c.loop_seed;
        std::mt19937_64 rng(c.selector_seed);
        // True values are visible to the simulated practitioner only.
        const Selector selector = [&](const ChoiceSet& cs) {
            std::vector<double> truth;
            for (const auto& ch : cs.choices) truth.push_back(fn.evaluate(ch.point));
            return select(behavior, cs, truth, rng);
        };
        try {
            auto run = run_loop(fn.evaluate, selector, fn.bounds, cfg);
            c.observed = run.observed;
            if (run.error) throw std::runtime_error(*run.error);
            double f_star = fn.true_max;
            const double seen = *std::max_element(run.observed.begin(), run.observed.end());
            if (seen > f_star) {
                c.message = "observed value exceeded estimated f_star by " + detail::fmt_double(seen - f_star);
                f_star = seen;
            }
            c.trace = regret(run.observed, f_star);
            c.trace.function = fn.name;
            c.trace.behavior = behavior.name();
            c.trace.seed = c.loop_seed;
            c.ok = true;
        } catch (const std::exception& e) {
            c.ok = false;
            c.message = e.what();
        }
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(c);
        }
    };

    const int jobs = std::max(1, grid.jobs);
    if (jobs == 1) {
        for (auto& c : cells) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (int w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
            });
        for (auto& t : workers) t.join();
    }

    GridResults res;
    res.aggregates = aggregate(grid, cells);
    res.cells = std::move(cells);
    return res;
}

/// function,dimension,behavior,seed,iteration,simple_regret,average_regret,schema_version
[[nodiscard]] inline std::string results_csv(const ExperimentGrid& grid, const GridResults& res) {
    std::ostringstream os;
    os << "function,dimension,behavior,seed,iteration,simple_regret,average_regret,schema_version\n";
    for (const auto& c : res.cells) {
        if (!c.ok) continue;
        const auto& fn = grid.functions[c.function_index];
        for (std::size_t t = 0; t < c.trace.simple_regret.size(); ++t) {
            os << fn.name << ',' << fn.dimension << ',' << grid.behaviors[c.behavior_index].name() << ','
               << c.loop_seed << ',' << (t + 1) << ',' << detail::fmt_double(c.trace.simple_regret[t]) << ','
               << detail::fmt_double(c.trace.average_regret[t]) << ',' << kSchemaVersion << '\n';
        }
    }
    return os.str();
}

[[nodiscard]] inline nlohmann::json aggregates_json(const std::vector<AggregateCurve>& aggs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : aggs) {
        out.push_back({{"family", a.family},
                       {"behavior", a.behavior},
                       {"runs", a.runs},
                       {"mean_simple_regret", a.mean_simple},
                       {"std_simple_regret", a.std_simple},
                       {"mean_average_regret", a.mean_average},
                       {"std_average_regret", a.std_average}});
    }
    return out;
}

/// Config echo, per-cell status and aggregates.
[[nodiscard]] inline nlohmann::json results_json(const ExperimentGrid& grid, const GridResults& res) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["master_seed"] = grid.master_seed;
    j["repeats"] = grid.repeats;
    j["loop"] = to_json(grid.loop);
    j["metadata"] = grid.metadata;
    j["functions"] = nlohmann::json::array();
    for (const auto& f : grid.functions)
        j["functions"].push_back({{"name", f.name}, {"family", f.family}, {"dimension", f.dimension},
                                  {"true_max", f.true_max}, {"description", f.description},
                                  {"lower", to_std(f.bounds.lower)}, {"upper", to_std(f.bounds.upper)}});
    j["behaviors"] = nlohmann::json::array();
    for (const auto& b : grid.behaviors) j["behaviors"].push_back(b.name());
    j["cells"] = nlohmann::json::array();
    std::size_t failed = 0;
    for (const auto& c : res.cells) {
        failed += c.ok ? 0 : 1;
        j["cells"].push_back({{"function", grid.functions[c.function_index].name},
                              {"behavior", grid.behaviors[c.behavior_index].name()},
                              {"repeat", c.repeat},
                              {"seed", c.loop_seed},
                              {"status", c.ok ? "ok" : "failed"},
                              {"message", c.message},
                              {"observed", c.observed}});
    }
    j["failed_cells"] = failed;
    j["aggregates"] = aggregates_json(res.aggregates);
    return j;
}

/// Mean +/- std per iteration per behavior, for external plotting.
[[nodiscard]] inline nlohmann::json plot_data_json(const std::vector<AggregateCurve>& aggs) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["series"] = nlohmann::json::array();
    for (const auto& a : aggs) {
        nlohmann::json s{{"family", a.family}, {"behavior", a.behavior}, {"runs", a.runs}};
        s["points"] = nlohmann::json::array();
        for (std::size_t t = 0; t < a.mean_simple.size(); ++t)
            s["points"].push_back({{"iteration", t + 1},
                                   {"simple_mean", a.mean_simple[t]},
                                   {"simple_std", a.std_simple[t]},
                                   {"average_mean", a.mean_average[t]},
                                   {"average_std", a.std_average[t]}});
        j["series"].push_back(std::move(s));
    }
    return j;
}

struct SuiteOptions {
    std::size_t count = 10;
    double lengthscale = 0.3;
    double lower = 0.0;
    double upper = 10.0;
    std::size_t anchors = kDefaultAnchors;
    bool include_10d = false;
};

/// Named function suites: "1d-gp", "2d-gp", "5d-gp", "standard", or "<name>:<dim>" for one
/// standard function. Sampled functions get their maximum estimated here.
[[nodiscard]] inline std::vector<TestFunction> make_suite(const std::string& suite, std::uint64_t master_seed,
                                                          const SuiteOptions& opt = {}) {
    std::vector<TestFunction> out;
    auto gp_suite = [&](Eigen::Index dim) {
        for (std::size_t i = 0; i < opt.count; ++i) {
            const std::uint64_t seed = derive_seed(master_seed, 7777, static_cast<std::uint64_t>(dim), i);
            auto f = sample_gp_prior_function(dim, opt.lengthscale, Bounds::uniform(dim, opt.lower, opt.upper), seed,
                                              opt.anchors);
            f.name = "gp-" + std::to_string(dim) + "d-" + std::to_string(i);
            TrueMaxConfig tm;
            tm.seed = seed;
            f.true_max = estimate_true_max(f, tm);
            out.push_back(std::move(f));
        }
    };
    if (suite == "1d-gp") {
        gp_suite(1);
    } else if (suite == "2d-gp") {
        gp_suite(2);
    } else if (suite == "5d-gp") {
        gp_suite(5);
    } else if (suite == "standard") {
        for (auto [name, dim] : std::vector<std::pair<std::string, int>>{{"ackley", 2},
                                                                        {"ackley", 5},
                                                                        {"griewank", 2},
                                                                        {"griewank", 5},
                                                                        {"rastrigin", 2},
                                                                        {"rastrigin", 5},
                                                                        {"rosenbrock", 2},
                                                                        {"rosenbrock", 5},
                                                                        {"powell", 5}})
            out.push_back(standard_function(name, dim));
        if (opt.include_10d) {
            out.push_back(standard_function("ackley", 10));
            out.push_back(standard_function("griewank", 10));
        }
    } else if (auto colon = suite.find(':'); colon != std::string::npos) {
        int dim = 0;
        try {
            dim = std::stoi(suite.substr(colon + 1));
        } catch (const std::exception&) {
            throw InputError("suite: malformed dimension in '" + suite + "'");
        }
        out.push_back(standard_function(suite.substr(0, colon), dim));
    } else {
        throw InputError("suite: unknown suite '" + suite + "'");
    }
    return out;
}

} // namespace hitlbo

#endif // HITLBO_BENCHMARK_HPP
