#ifndef HITLBO_TOOLS_CLI_HPP
#define HITLBO_TOOLS_CLI_HPP

#include <atomic>
#include <csignal>
#include <cstdlib>

#include "hitlbo/http_service.hpp"

#include <CLI11.hpp>

namespace hitlbo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad arguments detected after parsing; maps to the usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::atomic<bool> g_stop{false};

inline void on_stop_signal(int) { g_stop = true; }

[[nodiscard]] inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

[[nodiscard]] inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

[[nodiscard]] inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

[[nodiscard]] inline nlohmann::json front_json(std::size_t iteration, const ParetoFront& front, Eigen::Index rows,
                                               Eigen::Index cols) {
    nlohmann::json sets = nlohmann::json::array();
    nlohmann::json objectives = nlohmann::json::array();
    for (std::size_t i = 0; i < front.size(); ++i) {
        const Matrix m = unflatten(front.solutions[i], rows, cols);
        nlohmann::json set = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) set.push_back(to_std(Vector(m.row(r).transpose())));
        sets.push_back(std::move(set));
        objectives.push_back({front.objective_values[i][0], front.objective_values[i][1]});
    }
    return {{"schema_version", kStateSchemaVersion}, {"iteration", iteration}, {"knee_index", front.knee_index},
            {"objectives", objectives}, {"alternate_sets", sets}};
}

/// Loop config shared by `run` and `benchmark`.
struct LoopFlags {
    int budget = 20;
    int p = 4;
    int init_points = 4;

    void add(CLI::App& app) {
        app.add_option("--budget", budget, "Total evaluations including the initial design")->check(CLI::PositiveNumber);
        app.add_option("-p,--choices", p, "Choices presented per iteration")->check(CLI::PositiveNumber);
        app.add_option("--init-points", init_points, "Initial LHS design size")->check(CLI::PositiveNumber);
    }

    [[nodiscard]] LoopConfig config(std::uint64_t seed) const {
        LoopConfig c;
        c.max_evaluations = budget;
        c.p = p;
        c.init_points = init_points;
        c.seed = seed;
        try {
            c.validate();
        } catch (const InputError& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

/// A named standard function, or "gp" for a GP-prior sample.
struct FunctionFlags {
    std::string name = "gp";
    int dim = 1;
    double lengthscale = 0.3;
    double lower = 0.0;
    double upper = 10.0;
    std::size_t anchors = kDefaultAnchors;
    std::uint64_t function_seed = 0;

    void add(CLI::App& app) {
        app.add_option("--function", name, "ackley|griewank|rastrigin|rosenbrock|powell|gp");
        app.add_option("--dim", dim, "Input dimension");
        app.add_option("--lengthscale", lengthscale, "GP-prior lengthscale (gp only)");
        app.add_option("--lower", lower, "Lower bound per coordinate (gp only)");
        app.add_option("--upper", upper, "Upper bound per coordinate (gp only)");
        app.add_option("--anchors", anchors, "Anchor points for the GP-prior sample (gp only)");
        app.add_option("--function-seed", function_seed, "Seed of the GP-prior sample (gp only)");
    }

    [[nodiscard]] TestFunction make() const {
        try {
            if (name != "gp") return standard_function(name, dim);
            if (dim < 1) throw InputError("--dim must be >= 1");
            if (!(lower < upper)) throw InputError("--lower must be < --upper");
            auto f = sample_gp_prior_function(dim, lengthscale, Bounds::uniform(dim, lower, upper), function_seed, anchors);
            TrueMaxConfig tm;
            tm.seed = function_seed;
            f.true_max = estimate_true_max(f, tm);
            return f;
        } catch (const InputError& e) {
            throw UsageError(e.what());
        }
    }
};

[[nodiscard]] inline std::vector<Behavior> parse_behaviors(const std::string& list) {
    std::vector<Behavior> out;
    for (const auto& s : split(list)) {
        try {
            out.push_back(Behavior::parse(s));
        } catch (const InputError& e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) throw UsageError("--behaviors: at least one behavior required");
    return out;
}

// ---- commands ----

struct BenchmarkArgs {
    std::string suites = "1d-gp";
    std::string behaviors = "expert,trusting,adversarial,pbest:0.5";
    int repeats = 4;
    std::uint64_t seed = 0;
    int jobs = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    bool full = false;
    std::string out = "results";
    SuiteOptions suite;
    LoopFlags loop;
    bool quiet = false;
};

inline int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
    ExperimentGrid grid;
    SuiteOptions sopt = a.suite;
    std::vector<std::string> suites = split(a.suites);
    grid.repeats = a.repeats;
    if (a.full) {
        // Large grid: 50 sampled functions per dimension, 16 repeats, 10D standard functions included.
        suites = {"1d-gp", "2d-gp", "5d-gp", "standard"};
        sopt.count = 50;
        sopt.include_10d = true;
        grid.repeats = 16;
    }
    grid.behaviors = parse_behaviors(a.behaviors);
    grid.loop = a.loop.config(a.seed);
    grid.master_seed = a.seed;
    grid.jobs = std::max(1, a.jobs);
    if (suites.empty()) throw UsageError("--suite: at least one suite required");
    for (const auto& s : suites) {
        try {
            auto fns = make_suite(s, a.seed, sopt);
            grid.functions.insert(grid.functions.end(), fns.begin(), fns.end());
        } catch (const InputError& e) {
            throw UsageError(e.what());
        }
    }
    grid.metadata = {{"suites", suites},
                     {"full", a.full},
                     {"gp_prior", {{"lengthscale", sopt.lengthscale}, {"lower", sopt.lower}, {"upper", sopt.upper},
                                   {"anchors", sopt.anchors}, {"count", sopt.count}}},
                     {"note", "GP-prior defaults are lengthscale 0.3 on [0, 10]; lengthscale 0.04 on [0, 1] is "
                              "available via --lengthscale/--lower/--upper"}};

    const std::size_t total = grid.functions.size() * grid.behaviors.size() * static_cast<std::size_t>(grid.repeats);
    std::size_t done = 0;
    const auto results = run_experiment_grid(grid, [&](const CellResult& c) {
        ++done;
        if (a.quiet) return;
        err << '[' << done << '/' << total << "] " << grid.functions[c.function_index].name << ' '
            << grid.behaviors[c.behavior_index].name() << " repeat " << c.repeat << (c.ok ? " ok" : " FAILED: " + c.message)
            << '\n';
    });
    const std::filesystem::path dir(a.out);
    write_file(dir / "results.csv", results_csv(grid, results));
    const auto bundle = results_json(grid, results);
    write_file(dir / "results.json", bundle.dump(1) + "\n");
    write_file(dir / "plot_data.json", plot_data_json(results.aggregates).dump(1) + "\n");
    out << "wrote " << (dir / "results.csv").string() << ", results.json, plot_data.json (" << total << " cells, "
        << bundle["failed_cells"].get<std::size_t>() << " failed)\n";
    return bundle["failed_cells"].get<std::size_t>() == 0 ? kExitOk : kExitRuntime;
}

struct RunArgs {
    FunctionFlags function;
    std::string behavior = "trusting";
    std::uint64_t seed = 0;
    LoopFlags loop{10, 4, 4};
    std::string out = "trace.json";
    std::string dump_fronts;
};

inline int cmd_run(const RunArgs& a, std::ostream& out, std::ostream&) {
    const Behavior behavior = parse_behaviors(a.behavior).front();
    const TestFunction fn = a.function.make();
    const LoopConfig cfg = a.loop.config(a.seed);
    std::mt19937_64 rng(derive_seed(a.seed, stream::kSelector));

    nlohmann::json choice_sets = nlohmann::json::array();
    const Selector selector = [&](const ChoiceSet& cs) {
        std::vector<double> truth;
        for (const auto& c : cs.choices) truth.push_back(fn.evaluate(c.point));
        const std::size_t idx = select(behavior, cs, truth, rng);
        out << "iteration " << cs.iteration << ":\n";
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const auto& c = cs.choices[i];
            out << (i == idx ? "  * " : "    ") << '[' << i << "] " << to_string(c.source) << " x=" << nlohmann::json(to_std(c.point)).dump()
                << " utility=" << c.utility << " mean=" << c.predicted_mean << " std=" << c.predicted_std << '\n';
        }
        nlohmann::json j = io::choice_set(cs);
        j["selected"] = idx;
        choice_sets.push_back(std::move(j));
        return idx;
    };

    std::ofstream fronts;
    FrontSink sink;
    if (!a.dump_fronts.empty()) {
        const std::filesystem::path p(a.dump_fronts);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        fronts.open(p, std::ios::trunc);
        if (!fronts) throw std::runtime_error("cannot write " + a.dump_fronts);
        sink = [&](std::size_t it, const ParetoFront& f, Eigen::Index rows, Eigen::Index cols) {
            fronts << front_json(it, f, rows, cols).dump() << '\n';
        };
    }

    const auto run = run_loop(fn.evaluate, selector, fn.bounds, cfg, sink);
    for (std::size_t i = 0; i < choice_sets.size() && i < run.state.history.size(); ++i)
        choice_sets[i]["observed"] = run.state.history[i].observed;
    nlohmann::json trace{{"schema_version", kStateSchemaVersion},
                         {"function", {{"name", fn.name}, {"dimension", fn.dimension}, {"description", fn.description},
                                       {"bounds", io::bounds(fn.bounds)}}},
                         {"behavior", behavior.name()},
                         {"seed", a.seed},
                         {"config", to_json(cfg)},
                         {"choice_sets", choice_sets},
                         {"observed", run.observed},
                         {"state", to_json(run.state)},
                         {"error", run.error ? nlohmann::json(*run.error) : nlohmann::json(nullptr)}};
    if (fn.has_true_max() && !run.observed.empty()) {
        const double f_star = std::max(fn.true_max, *std::max_element(run.observed.begin(), run.observed.end()));
        const auto r = regret(run.observed, f_star);
        trace["regret"] = {{"f_star", f_star}, {"simple_regret", r.simple_regret}, {"average_regret", r.average_regret}};
    }
    write_file(a.out, trace.dump(1) + "\n");
    out << "best y=" << run.state.dataset.best_value() << " after " << run.observed.size() << " evaluations; trace written to "
        << a.out << '\n';
    if (run.error) {
        out << "run aborted: " << *run.error << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

struct ReplayArgs {
    std::string input;
    std::string out;
};

/// Re-derives every ChoiceSet of a saved trace or session from its config and recorded
/// selections; any difference from the saved record is a failure.
inline int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
    const auto doc = read_json(a.input);
    if (!doc.contains("state") || doc.at("state").is_null() || !doc.contains("config"))
        throw UsageError(a.input + ": not a trace or session document with a started loop");
    LoopConfig cfg;
    LoopState saved;
    try {
        cfg = loop_config_from_json(doc.at("config"));
        saved = loop_state_from_json(doc.at("state"));
    } catch (const InputError& e) {
        throw UsageError(a.input + ": " + e.what());
    }
    Dataset init(saved.dataset.bounds);
    for (std::size_t i = 0; i < saved.init_count; ++i) init.add(saved.dataset.points[i], saved.dataset.values[i]);
    LoopState state = start_loop(std::move(init), cfg);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < saved.history.size(); ++i) {
        const auto& rec = saved.history[i];
        const ChoiceSet cs = propose_choices(state, cfg);
        if (io::choice_set(cs) != io::choice_set(rec.choices)) {
            ++mismatches;
            err << "iteration " << i << ": replayed choices differ from the saved record\n";
        }
        state = rec.selected >= 0 ? apply_selection(state, cs, rec.selected, rec.observed, cfg)
                                  : apply_override(state, cs, rec.point, rec.observed, cfg);
    }
    const bool state_equal = to_json(state) == to_json(saved);
    if (!state_equal) err << "final replayed state differs from the saved state\n";
    nlohmann::json report{{"schema_version", kStateSchemaVersion},
                          {"input", a.input},
                          {"iterations", saved.history.size()},
                          {"mismatched_iterations", mismatches},
                          {"identical", mismatches == 0 && state_equal}};
    if (!a.out.empty()) write_file(a.out, report.dump(1) + "\n");
    out << "replayed " << saved.history.size() << " iterations: "
        << (report["identical"].get<bool>() ? "identical" : "MISMATCH") << '\n';
    return report["identical"].get<bool>() ? kExitOk : kExitRuntime;
}

struct PlotArgs {
    std::string input;
    std::string out;
    std::string format = "json";
};

/// Re-emits the aggregates of a results bundle as plot data (JSON or long-form CSV).
inline int cmd_plot_data(const PlotArgs& a, std::ostream& out, std::ostream&) {
    const auto doc = read_json(a.input);
    if (!doc.contains("aggregates")) throw UsageError(a.input + ": not a benchmark results bundle");
    std::vector<AggregateCurve> aggs;
    for (const auto& j : doc.at("aggregates")) {
        AggregateCurve c;
        c.family = j.at("family");
        c.behavior = j.at("behavior");
        c.runs = j.at("runs");
        c.mean_simple = j.at("mean_simple_regret").get<std::vector<double>>();
        c.std_simple = j.at("std_simple_regret").get<std::vector<double>>();
        c.mean_average = j.at("mean_average_regret").get<std::vector<double>>();
        c.std_average = j.at("std_average_regret").get<std::vector<double>>();
        aggs.push_back(std::move(c));
    }
    std::string text;
    if (a.format == "json") {
        text = plot_data_json(aggs).dump(1) + "\n";
    } else {
        std::ostringstream os;
        os << "family,behavior,runs,iteration,simple_mean,simple_std,average_mean,average_std,schema_version\n";
        for (const auto& c : aggs)
            for (std::size_t t = 0; t < c.mean_simple.size(); ++t)
                os << c.family << ',' << c.behavior << ',' << c.runs << ',' << (t + 1) << ','
                   << hitlbo::detail::fmt_double(c.mean_simple[t]) << ',' << hitlbo::detail::fmt_double(c.std_simple[t]) << ','
                   << hitlbo::detail::fmt_double(c.mean_average[t]) << ',' << hitlbo::detail::fmt_double(c.std_average[t])
                   << ',' << kSchemaVersion << '\n';
        text = os.str();
    }
    if (a.out.empty()) {
        out << text;
    } else {
        write_file(a.out, text);
    }
    return kExitOk;
}

struct ServeArgs {
    std::string host = env_or("HITLBO_HOST", "127.0.0.1");
    int port = std::atoi(env_or("HITLBO_PORT", "8080").c_str());
    std::string data = env_or("HITLBO_DATA", "./sessions");
    std::uint64_t seed = std::strtoull(env_or("HITLBO_SEED", "0").c_str(), nullptr, 10);
};

/// Serves until SIGTERM/SIGINT, then persists every session and returns.
inline int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    SessionManager mgr({a.data, a.seed, true});
    httplib::Server server;
    // httplib defaults to SO_REUSEPORT, which would let a second server share the port silently.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    register_routes(server, mgr);
    if (!server.bind_to_port(a.host, a.port)) {
        err << "cannot bind " << a.host << ':' << a.port << '\n';
        return kExitRuntime;
    }
    g_stop = false;
    auto prev_term = std::signal(SIGTERM, on_stop_signal);
    auto prev_int = std::signal(SIGINT, on_stop_signal);
    std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        server.stop();
    });
    out << "listening on http://" << a.host << ':' << a.port << " (data " << a.data << ", " << mgr.ids().size()
        << " sessions restored)" << std::endl;
    const bool ok = server.listen_after_bind();
    g_stop = true;
    watcher.join();
    mgr.shutdown();
    std::signal(SIGTERM, prev_term);
    std::signal(SIGINT, prev_int);
    out << "stopped; sessions persisted" << std::endl;
    return ok ? kExitOk : kExitRuntime;
}

} // namespace detail

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Expert-guided Bayesian optimisation with alternative-set selection"};
    app.require_subcommand(1);

    BenchmarkArgs bench;
    auto* b = app.add_subcommand("benchmark", "Run a grid of simulated practitioners and write regret results");
    b->add_option("--suite", bench.suites, "Comma-separated: 1d-gp, 2d-gp, 5d-gp, standard, or name:dim");
    b->add_option("--behaviors", bench.behaviors, "Comma-separated: expert, trusting, adversarial, pbest:<p>");
    b->add_option("--repeats", bench.repeats, "Repeats per function and behavior")->check(CLI::PositiveNumber);
    b->add_option("--seed", bench.seed, "Master seed");
    b->add_option("--jobs", bench.jobs, "Worker threads")->check(CLI::PositiveNumber);
    b->add_flag("--full", bench.full, "Large grid: 50 functions per dimension, 16 repeats (slow)");
    b->add_option("--out", bench.out, "Output directory");
    b->add_option("--count", bench.suite.count, "Sampled functions per GP suite")->check(CLI::PositiveNumber);
    b->add_option("--lengthscale", bench.suite.lengthscale, "GP-prior lengthscale")->check(CLI::PositiveNumber);
    b->add_option("--lower", bench.suite.lower, "GP-prior lower bound per coordinate");
    b->add_option("--upper", bench.suite.upper, "GP-prior upper bound per coordinate");
    b->add_option("--anchors", bench.suite.anchors, "Anchor points per GP-prior sample")->check(CLI::PositiveNumber);
    b->add_flag("--quiet", bench.quiet, "No per-cell progress");
    bench.loop.add(*b);

    RunArgs run;
    auto* r = app.add_subcommand("run", "Optimise one function with one simulated practitioner");
    run.function.add(*r);
    r->add_option("--behavior", run.behavior, "expert, trusting, adversarial or pbest:<p>");
    r->add_option("--seed", run.seed, "Seed");
    r->add_option("--out", run.out, "Trace JSON path");
    r->add_option("--dump-fronts", run.dump_fronts, "Write every final Pareto front as JSON lines");
    run.loop.add(*r);

    ServeArgs serve;
    auto* s = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
    s->add_option("--host", serve.host, "Bind address (env HITLBO_HOST)");
    s->add_option("--port", serve.port, "Port (env HITLBO_PORT)")->check(CLI::Range(0, 65535));
    s->add_option("--data", serve.data, "Session directory (env HITLBO_DATA)");
    s->add_option("--seed", serve.seed, "Master seed for sessions without one (env HITLBO_SEED)");

    ReplayArgs replay;
    auto* rp = app.add_subcommand("replay", "Recompute a saved trace or session and verify it bit-for-bit");
    rp->add_option("input", replay.input, "Trace or session JSON")->required();
    rp->add_option("--out", replay.out, "Write the replay report here");
    std::uint64_t unused_seed = 0;
    rp->add_option("--seed", unused_seed, "Accepted for uniformity; the saved seed is used");

    PlotArgs plot;
    auto* pd = app.add_subcommand("plot-data", "Emit mean and std regret curves from a results bundle");
    pd->add_option("input", plot.input, "results.json from `benchmark`")->required();
    pd->add_option("--out", plot.out, "Output path (stdout if omitted)");
    pd->add_option("--format", plot.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    pd->add_option("--seed", unused_seed, "Accepted for uniformity; output is deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << failing->help();
        return kExitUsage;
    }

    try {
        if (b->parsed()) return cmd_benchmark(bench, out, err);
        if (r->parsed()) return cmd_run(run, out, err);
        if (s->parsed()) return cmd_serve(serve, out, err);
        if (rp->parsed()) return cmd_replay(replay, out, err);
        if (pd->parsed()) return cmd_plot_data(plot, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace hitlbo::cli

#endif // HITLBO_TOOLS_CLI_HPP
