#ifndef HITLBO_SESSION_HPP
#define HITLBO_SESSION_HPP

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "hitlbo/benchmark.hpp"
#include "hitlbo/serialization.hpp"

namespace hitlbo {

enum class SessionMode { demo, external };
enum class SessionStatus { awaiting_selection, awaiting_observation, running_proposal, finished };

[[nodiscard]] inline const char* to_string(SessionMode m) { return m == SessionMode::demo ? "demo" : "external"; }

[[nodiscard]] inline const char* to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::awaiting_selection: return "awaiting_selection";
        case SessionStatus::awaiting_observation: return "awaiting_observation";
        case SessionStatus::running_proposal: return "running_proposal";
        case SessionStatus::finished: return "finished";
    }
    return "unknown";
}

[[nodiscard]] inline SessionStatus session_status_from(const std::string& s) {
    for (auto v : {SessionStatus::awaiting_selection, SessionStatus::awaiting_observation,
                   SessionStatus::running_proposal, SessionStatus::finished})
        if (s == to_string(v)) return v;
    throw InputError("unknown session status '" + s + "'");
}

/// Error surfaced to API clients as {code, message} with a matching HTTP status.
class SessionError : public std::runtime_error {
public:
    SessionError(std::string code, int http_status, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)), http_status_(http_status) {}

    [[nodiscard]] const std::string& code() const { return code_; }
    [[nodiscard]] int http_status() const { return http_status_; }

    static SessionError not_found(const std::string& id) { return {"not_found", 404, "no session with id '" + id + "'"}; }
    static SessionError conflict(const std::string& m) { return {"conflict", 409, m}; }
    static SessionError invalid(const std::string& m) { return {"invalid_argument", 400, m}; }

private:
    std::string code_;
    int http_status_;
};

/// Synthetic objective attached to a demo session, rebuilt from its JSON descriptor:
/// {"kind": "standard", "name", "dimension"} or
/// {"kind": "gp_prior", "dimension", "lengthscale", "seed", "lower", "upper", "anchors"}.
[[nodiscard]] inline TestFunction demo_function(const nlohmann::json& d) {
    if (!d.is_object()) throw InputError("function: expected an object");
    std::string kind = "standard";
    io::optional_field(d, "kind", kind, "function");
    int dim = 1;
    io::optional_field(d, "dimension", dim, "function");
    if (dim < 1) throw InputError("function.dimension: must be >= 1");
    if (kind == "standard") {
        std::string name;
        io::optional_field(d, "name", name, "function");
        return standard_function(name, dim);
    }
    if (kind == "gp_prior") {
        double lengthscale = 0.3, lower = 0.0, upper = 10.0;
        std::uint64_t seed = 0;
        std::size_t anchors = kDefaultAnchors;
        io::optional_field(d, "lengthscale", lengthscale, "function");
        io::optional_field(d, "lower", lower, "function");
        io::optional_field(d, "upper", upper, "function");
        io::optional_field(d, "seed", seed, "function");
        io::optional_field(d, "anchors", anchors, "function");
        if (!(lower < upper)) throw InputError("function: lower must be < upper");
        return sample_gp_prior_function(dim, lengthscale, Bounds::uniform(dim, lower, upper), seed, anchors);
    }
    throw InputError("function.kind: expected 'standard' or 'gp_prior'");
}

struct Session {
    std::string id;
    SessionMode mode = SessionMode::demo;
    SessionStatus status = SessionStatus::running_proposal;
    LoopConfig config;
    Bounds bounds;
    nlohmann::json function; // demo descriptor, null in external mode
    std::vector<Vector> design;
    std::vector<double> design_values; // filled in order; complete once the loop has started
    std::optional<LoopState> state;
    std::optional<ChoiceSet> pending;
    std::optional<int> selected; // choice index, or -1 for an expert-supplied point
    std::optional<Vector> selected_point;
    std::optional<double> observed; // outcome for selected_point awaiting incorporation
    std::optional<double> true_max;
    std::string error;
    std::string created;
    std::string updated;
};

namespace detail {

[[nodiscard]] inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

[[nodiscard]] inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

template <typename T>
[[nodiscard]] nlohmann::json opt(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_same_v<T, Vector>) return io::vec(*v);
    else return *v;
}

} // namespace detail

[[nodiscard]] inline nlohmann::json to_json(const Session& s) {
    nlohmann::json design = nlohmann::json::array();
    for (const auto& p : s.design) design.push_back(io::vec(p));
    return {{"schema_version", kStateSchemaVersion},
            {"id", s.id},
            {"mode", to_string(s.mode)},
            {"status", to_string(s.status)},
            {"config", to_json(s.config)},
            {"bounds", io::bounds(s.bounds)},
            {"function", s.function},
            {"design", design},
            {"design_values", s.design_values},
            {"state", s.state ? to_json(*s.state) : nlohmann::json(nullptr)},
            {"pending", s.pending ? io::choice_set(*s.pending) : nlohmann::json(nullptr)},
            {"selected", detail::opt(s.selected)},
            {"selected_point", detail::opt(s.selected_point)},
            {"observed", detail::opt(s.observed)},
            {"true_max", detail::opt(s.true_max)},
            {"error", s.error},
            {"created", s.created},
            {"updated", s.updated}};
}

[[nodiscard]] inline Session session_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kStateSchemaVersion) throw InputError("session: unsupported schema_version");
    Session s;
    s.id = j.at("id").get<std::string>();
    s.mode = j.at("mode").get<std::string>() == "demo" ? SessionMode::demo : SessionMode::external;
    s.status = session_status_from(j.at("status").get<std::string>());
    s.config = loop_config_from_json(j.at("config"));
    s.bounds = io::bounds(j.at("bounds"), "bounds");
    s.function = j.at("function");
    for (const auto& p : j.at("design")) s.design.push_back(io::vec(p, "design"));
    s.design_values = j.at("design_values").get<std::vector<double>>();
    if (!j.at("state").is_null()) s.state = loop_state_from_json(j.at("state"));
    if (!j.at("pending").is_null()) s.pending = io::choice_set(j.at("pending"));
    if (!j.at("selected").is_null()) s.selected = j.at("selected").get<int>();
    if (!j.at("selected_point").is_null()) s.selected_point = io::vec(j.at("selected_point"), "selected_point");
    if (!j.at("observed").is_null()) s.observed = j.at("observed").get<double>();
    if (!j.at("true_max").is_null()) s.true_max = j.at("true_max").get<double>();
    s.error = j.value("error", "");
    s.created = j.value("created", "");
    s.updated = j.value("updated", "");
    return s;
}

/// Incorporates any recorded outcome, then proposes the next choice set or finishes.
/// This is the only place the expensive work (GP fit, NSGA-II) happens.
inline void advance(Session& s, const TestFunction* fn) {
    if (!s.state) {
        Dataset d(s.bounds);
        for (std::size_t i = 0; i < s.design.size(); ++i) d.add(s.design[i], s.design_values.at(i));
        s.state = start_loop(std::move(d), s.config);
    } else if (s.selected && s.selected_point && s.observed) {
        if (*s.selected >= 0)
            s.state = apply_selection(*s.state, *s.pending, *s.selected, *s.observed, s.config);
        else
            s.state = apply_override(*s.state, *s.pending, *s.selected_point, *s.observed, s.config);
    }
    s.pending.reset();
    s.selected.reset();
    s.selected_point.reset();
    s.observed.reset();
    if (static_cast<int>(s.state->dataset.size()) >= s.config.max_evaluations) {
        if (fn && !s.true_max) s.true_max = fn->has_true_max() ? fn->true_max : estimate_true_max(*fn);
        s.status = SessionStatus::finished;
        return;
    }
    s.pending = propose_choices(*s.state, s.config);
    s.status = SessionStatus::awaiting_selection;
}

// ---- read-only views ----

[[nodiscard]] inline nlohmann::json history_view(const Session& s) {
    nlohmann::json rows = nlohmann::json::array();
    if (s.state) {
        const auto& d = s.state->dataset;
        for (std::size_t i = 0; i < d.size(); ++i) {
            nlohmann::json r{{"evaluation", i + 1}, {"point", io::vec(d.points[i])}, {"y", d.values[i]}};
            if (i < s.state->init_count) {
                r["source"] = "initial";
            } else {
                const auto& h = s.state->history[i - s.state->init_count];
                r["source"] = h.selected >= 0 ? "selection" : "override";
                r["iteration"] = h.choices.iteration;
                r["selected"] = h.selected;
                r["choices"] = io::choice_set(h.choices)["choices"];
            }
            rows.push_back(std::move(r));
        }
    } else {
        for (std::size_t i = 0; i < s.design_values.size(); ++i)
            rows.push_back({{"evaluation", i + 1}, {"point", io::vec(s.design[i])}, {"y", s.design_values[i]}, {"source", "initial"}});
    }
    return {{"id", s.id}, {"evaluations", rows}};
}

/// Posterior mean, std and utility on a regular grid: `n` points in 1D, n x n in 2D.
[[nodiscard]] inline nlohmann::json posterior_view(const Session& s, std::size_t n) {
    const Eigen::Index dim = s.bounds.dim();
    if (dim > 2) throw SessionError::invalid("posterior view is available for 1D and 2D problems only");
    if (!s.state) throw SessionError::conflict("no surrogate yet: initial observations are still pending");
    if (n < 2 || n > (dim == 1 ? 5001u : 201u)) throw SessionError::invalid("grid: out of range");
    const GpModel& m = s.state->model;
    nlohmann::json rows = nlohmann::json::array();
    auto row = [&](const Vector& x) {
        const auto p = m.posterior(x);
        nlohmann::json xj = dim == 1 ? nlohmann::json(x[0]) : io::vec(x);
        rows.push_back({{"x", xj}, {"mean", p.mean}, {"std", p.std}, {"utility", ucb(m, x, s.config.utility)}});
    };
    if (dim == 1) {
        for (const auto& x : grid_1d(s.bounds, n)) row(x);
    } else {
        const auto gx = grid_1d(Bounds::uniform(1, s.bounds.lower[0], s.bounds.upper[0]), n);
        const auto gy = grid_1d(Bounds::uniform(1, s.bounds.lower[1], s.bounds.upper[1]), n);
        for (const auto& a : gx)
            for (const auto& b : gy) row(Vector{{a[0], b[0]}});
    }
    return {{"id", s.id}, {"dimension", dim}, {"grid", n}, {"rows", rows}};
}

[[nodiscard]] inline nlohmann::json choices_view(const Session& s) {
    if (s.status != SessionStatus::awaiting_selection || !s.pending)
        throw SessionError::conflict(std::string("no pending choices: session is ") + to_string(s.status));
    nlohmann::json j = io::choice_set(*s.pending);
    j["id"] = s.id;
    j["history"] = history_view(s)["evaluations"];
    if (s.bounds.dim() <= 2) j["posterior"] = posterior_view(s, s.bounds.dim() == 1 ? 201 : 41)["rows"];
    return j;
}

[[nodiscard]] inline nlohmann::json summary_view(const Session& s) {
    nlohmann::json j{{"id", s.id},
                     {"mode", to_string(s.mode)},
                     {"status", to_string(s.status)},
                     {"dimension", s.bounds.dim()},
                     {"bounds", io::bounds(s.bounds)},
                     {"budget", s.config.max_evaluations},
                     {"p", s.config.p},
                     {"created", s.created},
                     {"updated", s.updated},
                     {"error", s.error}};
    const std::size_t evals = s.state ? s.state->dataset.size() : s.design_values.size();
    j["evaluations"] = evals;
    j["iteration"] = s.state ? s.state->iteration() : 0;
    if (!s.state && s.mode == SessionMode::external) {
        nlohmann::json req = nlohmann::json::array();
        for (std::size_t i = s.design_values.size(); i < s.design.size(); ++i) req.push_back(io::vec(s.design[i]));
        j["required_observations"] = req;
    }
    if (s.status == SessionStatus::awaiting_observation && s.selected_point) j["point_to_evaluate"] = io::vec(*s.selected_point);
    if (s.state) {
        const auto& d = s.state->dataset;
        const auto best = static_cast<std::size_t>(
            std::max_element(d.values.begin(), d.values.end()) - d.values.begin());
        j["best"] = {{"point", io::vec(d.points[best])}, {"y", d.values[best]}};
    }
    if (s.status == SessionStatus::finished && s.state) {
        nlohmann::json fin{{"best", j["best"]}};
        if (s.true_max) {
            const double f_star = std::max(*s.true_max, *std::max_element(s.state->dataset.values.begin(),
                                                                          s.state->dataset.values.end()));
            const auto t = regret(s.state->dataset.values, f_star);
            fin["true_max"] = f_star;
            fin["simple_regret"] = t.simple_regret;
            fin["average_regret"] = t.average_regret;
        }
        j["summary"] = fin;
    }
    return j;
}

struct SessionManagerOptions {
    std::filesystem::path data_dir;
    std::uint64_t master_seed = 0;
    /// Run proposals on background threads (clients poll); otherwise inline.
    bool async = true;
};

/// Owns every session. Mutations are serialized per session; proposals run without holding
/// the session lock, so reads always see the last committed state.
class SessionManager {
public:
    explicit SessionManager(SessionManagerOptions opt) : opt_(std::move(opt)) {
        if (!opt_.data_dir.empty()) {
            std::filesystem::create_directories(opt_.data_dir);
            load_all();
        }
    }

    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    ~SessionManager() { shutdown(); }

    /// Waits for in-flight proposals, then persists every session.
    void shutdown() {
        std::vector<std::thread> workers;
        {
            std::lock_guard lock(workers_mutex_);
            workers.swap(workers_);
        }
        for (auto& t : workers)
            if (t.joinable()) t.join();
        std::lock_guard lock(map_mutex_);
        for (auto& [id, slot] : slots_) {
            std::lock_guard sl(slot->m);
            persist(slot->s);
        }
    }

    [[nodiscard]] nlohmann::json create(const nlohmann::json& req) {
        if (!req.is_object()) throw SessionError::invalid("request body must be a JSON object");
        Session s;
        s.id = new_id();
        s.created = s.updated = detail::utc_now();
        const std::string mode = req.value("mode", "demo");
        if (mode != "demo" && mode != "external") throw SessionError::invalid("mode: expected 'demo' or 'external'");
        s.mode = mode == "demo" ? SessionMode::demo : SessionMode::external;

        auto slot = std::make_shared<Slot>();
        try {
            nlohmann::json cfg = req.value("config", nlohmann::json::object());
            if (!cfg.is_object()) throw InputError("config: expected an object");
            if (!cfg.contains("seed")) cfg["seed"] = derive_seed(opt_.master_seed, detail::fnv1a(s.id));
            s.config = loop_config_from_json(cfg);
            if (s.mode == SessionMode::demo) {
                if (!req.contains("function")) throw InputError("function: required in demo mode");
                s.function = req.at("function");
                slot->fn = demo_function(s.function);
                s.bounds = slot->fn->bounds;
                if (req.contains("bounds")) throw InputError("bounds: taken from the demo function, do not supply");
            } else {
                if (!req.contains("bounds")) throw InputError("bounds: required in external mode");
                s.bounds = io::bounds(req.at("bounds"), "bounds");
            }
            s.design = initial_design(s.bounds, s.config);
            for (const auto& p : s.config.expert_seeds)
                if (p.size() != s.bounds.dim()) throw InputError("config.expert_seeds: dimension mismatch");
        } catch (const InputError& e) {
            throw SessionError::invalid(e.what());
        } catch (const nlohmann::json::exception& e) {
            throw SessionError::invalid(e.what());
        }

        if (s.mode == SessionMode::demo) {
            for (const auto& x : s.design) s.design_values.push_back(slot->fn->evaluate(x));
            s.status = SessionStatus::running_proposal;
        } else {
            s.status = SessionStatus::awaiting_observation;
        }
        const std::string id = s.id;
        slot->s = std::move(s);
        {
            std::lock_guard lock(map_mutex_);
            slots_[id] = slot;
        }
        std::unique_lock sl(slot->m);
        persist(slot->s);
        if (slot->s.status == SessionStatus::running_proposal) schedule(slot, sl);
        return summary_view(slot->s);
    }

    [[nodiscard]] nlohmann::json get(const std::string& id) { return read(id, summary_view); }
    [[nodiscard]] nlohmann::json choices(const std::string& id) { return read(id, choices_view); }
    [[nodiscard]] nlohmann::json history(const std::string& id) { return read(id, history_view); }

    [[nodiscard]] nlohmann::json posterior(const std::string& id, std::size_t n) {
        return read(id, [n](const Session& s) { return posterior_view(s, n); });
    }

    [[nodiscard]] nlohmann::json list() {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& id : ids()) out.push_back(get(id));
        return out;
    }

    [[nodiscard]] std::vector<std::string> ids() {
        std::lock_guard lock(map_mutex_);
        std::vector<std::string> out;
        for (const auto& [id, slot] : slots_) out.push_back(id);
        return out;
    }

    /// Accepts choice `index`. External sessions then await the outcome at the returned point;
    /// demo sessions evaluate it and start the next proposal.
    /// `iteration`, when given, must match the pending choice set so a replayed request cannot
    /// select from a newer one.
    [[nodiscard]] nlohmann::json select(const std::string& id, long long index,
                                        std::optional<std::size_t> iteration = std::nullopt) {
        auto slot = find(id);
        std::unique_lock sl(slot->m);
        Session& s = slot->s;
        require(s, SessionStatus::awaiting_selection, "selection");
        if (iteration && *iteration != s.pending->iteration)
            throw SessionError::conflict("selection refers to iteration " + std::to_string(*iteration) +
                                         ", pending choices are for iteration " + std::to_string(s.pending->iteration));
        if (index < 0 || static_cast<std::size_t>(index) >= s.pending->size())
            throw SessionError::invalid("index: must lie in [0, " + std::to_string(s.pending->size()) + ")");
        const Vector point = s.pending->choices[static_cast<std::size_t>(index)].point;
        return accept(slot, sl, static_cast<int>(index), point);
    }

    /// Expert declines every choice and supplies their own point.
    [[nodiscard]] nlohmann::json override_point(const std::string& id, const Vector& point) {
        auto slot = find(id);
        std::unique_lock sl(slot->m);
        Session& s = slot->s;
        require(s, SessionStatus::awaiting_selection, "override");
        if (point.size() != s.bounds.dim()) throw SessionError::invalid("point: dimension mismatch");
        if (!point.allFinite() || !s.bounds.contains(point, 0.0)) throw SessionError::invalid("point: must lie within bounds");
        return accept(slot, sl, -1, point);
    }

    [[nodiscard]] nlohmann::json observe(const std::string& id, double y) {
        auto slot = find(id);
        std::unique_lock sl(slot->m);
        Session& s = slot->s;
        require(s, SessionStatus::awaiting_observation, "observation");
        if (!std::isfinite(y)) throw SessionError::invalid("y: must be a finite number");
        if (!s.state) {
            s.design_values.push_back(y);
            if (s.design_values.size() < s.design.size()) {
                touch(s);
                return summary_view(s);
            }
        } else {
            s.observed = y;
        }
        s.status = SessionStatus::running_proposal;
        touch(s);
        schedule(slot, sl);
        return summary_view(s);
    }

    /// Blocks until the session leaves running_proposal or the timeout expires.
    bool wait_settled(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(5)) {
        auto slot = find(id);
        std::unique_lock sl(slot->m);
        return slot->cv.wait_for(sl, timeout, [&] { return !slot->busy; });
    }

    [[nodiscard]] Session snapshot(const std::string& id) {
        auto slot = find(id);
        std::lock_guard sl(slot->m);
        return slot->s;
    }

private:
    struct Slot {
        std::mutex m;
        std::condition_variable cv;
        Session s;
        std::optional<TestFunction> fn;
        bool busy = false;
    };

    SessionManagerOptions opt_;
    std::mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;

    [[nodiscard]] std::string new_id() {
        static thread_local std::mt19937_64 rng(std::random_device{}());
        for (;;) {
            char buf[17];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
            std::lock_guard lock(map_mutex_);
            if (!slots_.count(buf)) return buf;
        }
    }

    [[nodiscard]] std::shared_ptr<Slot> find(const std::string& id) {
        std::lock_guard lock(map_mutex_);
        auto it = slots_.find(id);
        if (it == slots_.end()) throw SessionError::not_found(id);
        return it->second;
    }

    template <typename View>
    [[nodiscard]] nlohmann::json read(const std::string& id, View view) {
        auto slot = find(id);
        std::lock_guard sl(slot->m);
        return view(slot->s);
    }

    static void require(const Session& s, SessionStatus want, const char* what) {
        if (s.status != want)
            throw SessionError::conflict(std::string(what) + " not accepted: session is " + to_string(s.status));
    }

    static void touch(Session& s) { s.updated = detail::utc_now(); }

    nlohmann::json accept(const std::shared_ptr<Slot>& slot, std::unique_lock<std::mutex>& sl, int index, const Vector& point) {
        Session& s = slot->s;
        s.selected = index;
        s.selected_point = point;
        nlohmann::json ack{{"id", s.id}, {"selected", index}, {"point", io::vec(point)}};
        if (s.mode == SessionMode::demo) {
            const double y = slot->fn->evaluate(point);
            s.observed = y;
            ack["y"] = y;
            s.status = SessionStatus::running_proposal;
            touch(s);
            ack["status"] = to_string(s.status);
            schedule(slot, sl);
        } else {
            s.status = SessionStatus::awaiting_observation;
            touch(s);
            ack["status"] = to_string(s.status);
            persist(s);
        }
        return ack;
    }

    // Called with the session lock held and status running_proposal; persists first so a
    // crash mid-proposal resumes by recomputing the same deterministic proposal.
    void schedule(const std::shared_ptr<Slot>& slot, std::unique_lock<std::mutex>& sl) {
        persist(slot->s);
        slot->busy = true;
        if (!opt_.async) {
            sl.unlock();
            run_proposal(slot);
            sl.lock();
            return;
        }
        std::lock_guard lock(workers_mutex_);
        workers_.emplace_back([this, slot] { run_proposal(slot); });
    }

    void run_proposal(const std::shared_ptr<Slot>& slot) {
        Session work;
        const TestFunction* fn = nullptr;
        {
            std::lock_guard sl(slot->m);
            work = slot->s;
            fn = slot->fn ? &*slot->fn : nullptr;
        }
        std::string failure;
        try {
            advance(work, fn);
            work.error.clear();
        } catch (const std::exception& e) {
            failure = e.what();
        }
        std::lock_guard sl(slot->m);
        if (failure.empty()) {
            slot->s = std::move(work);
        } else {
            slot->s.error = "proposal failed: " + failure;
        }
        touch(slot->s);
        persist(slot->s);
        slot->busy = false;
        slot->cv.notify_all();
    }

    void persist(const Session& s) const {
        if (opt_.data_dir.empty()) return;
        const auto path = opt_.data_dir / (s.id + ".json");
        const auto tmp = opt_.data_dir / (s.id + ".json.tmp");
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << to_json(s).dump(1) << '\n';
            if (!out) throw std::runtime_error("cannot write session file " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }

    void load_all() {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(opt_.data_dir))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            try {
                std::ifstream in(f);
                auto slot = std::make_shared<Slot>();
                slot->s = session_from_json(nlohmann::json::parse(in));
                if (slot->s.mode == SessionMode::demo) slot->fn = demo_function(slot->s.function);
                const std::string id = slot->s.id;
                {
                    std::lock_guard lock(map_mutex_);
                    slots_[id] = slot;
                }
                if (slot->s.status == SessionStatus::running_proposal) {
                    std::unique_lock sl(slot->m);
                    schedule(slot, sl);
                }
            } catch (const std::exception& e) {
                std::cerr << "skipping unreadable session file " << f << ": " << e.what() << '\n';
            }
        }
    }
};

} // namespace hitlbo

#endif // HITLBO_SESSION_HPP
