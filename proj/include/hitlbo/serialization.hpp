#ifndef HITLBO_SERIALIZATION_HPP
#define HITLBO_SERIALIZATION_HPP

#include <json.hpp>

#include "hitlbo/loop.hpp"

namespace hitlbo {

/// Version stamped on every JSON document written by this library.
inline constexpr int kStateSchemaVersion = 1;

namespace io {

using nlohmann::json;

[[nodiscard]] inline json vec(const Vector& v) { return to_std(v); }

[[nodiscard]] inline Vector vec(const json& j, const std::string& field) {
    if (!j.is_array()) throw InputError(field + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(field + "[" + std::to_string(i) + "]: expected a number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

/// Reads `j[key]` as T if present, leaving `out` untouched otherwise.
template <typename T>
void optional_field(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const std::string where = path + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw InputError(where + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_unsigned() == false && v.get<long long>() < 0) throw InputError(where + ": must be >= 0");
        }
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw InputError(where + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw InputError(where + ": expected a string");
    }
    out = v.get<T>();
}

[[nodiscard]] inline json bounds(const Bounds& b) { return {{"lower", vec(b.lower)}, {"upper", vec(b.upper)}}; }

[[nodiscard]] inline Bounds bounds(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("lower") || !j.contains("upper"))
        throw InputError(path + ": expected {lower, upper}");
    Vector lo = vec(j.at("lower"), path + ".lower");
    Vector hi = vec(j.at("upper"), path + ".upper");
    if (lo.size() == 0) throw InputError(path + ": dimension must be >= 1");
    try {
        return Bounds(std::move(lo), std::move(hi));
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

[[nodiscard]] inline json hyperparams(const GpHyperparams& hp) {
    return {{"lengthscale", hp.lengthscale}, {"signal_variance", hp.signal_variance}, {"noise_variance", hp.noise_variance}};
}

[[nodiscard]] inline GpHyperparams hyperparams(const json& j) {
    GpHyperparams hp{j.at("lengthscale").get<double>(), j.at("signal_variance").get<double>(),
                     j.at("noise_variance").get<double>()};
    hp.validate();
    return hp;
}

[[nodiscard]] inline json dataset(const Dataset& d) {
    json pts = json::array();
    for (const auto& p : d.points) pts.push_back(vec(p));
    return {{"bounds", bounds(d.bounds)}, {"points", pts}, {"values", d.values}};
}

[[nodiscard]] inline Dataset dataset(const json& j) {
    Dataset d(bounds(j.at("bounds"), "dataset.bounds"));
    const auto& pts = j.at("points");
    const auto& vals = j.at("values");
    if (pts.size() != vals.size()) throw InputError("dataset: points and values differ in length");
    for (std::size_t i = 0; i < pts.size(); ++i) d.add(vec(pts[i], "dataset.points"), vals[i].get<double>());
    return d;
}

[[nodiscard]] inline ChoiceSource choice_source(const std::string& s) {
    if (s == "utility_optimum") return ChoiceSource::utility_optimum;
    if (s == "knee_alternate") return ChoiceSource::knee_alternate;
    if (s == "fallback") return ChoiceSource::fallback;
    throw InputError("unknown choice source '" + s + "'");
}

[[nodiscard]] inline json choice_set(const ChoiceSet& cs) {
    json choices = json::array();
    for (std::size_t i = 0; i < cs.choices.size(); ++i) {
        const auto& c = cs.choices[i];
        choices.push_back({{"index", i},
                           {"point", vec(c.point)},
                           {"utility", c.utility},
                           {"predicted_mean", c.predicted_mean},
                           {"predicted_std", c.predicted_std},
                           {"source", to_string(c.source)}});
    }
    json j{{"iteration", cs.iteration}, {"choices", choices}, {"pareto_summary", nullptr}};
    if (cs.pareto_summary) {
        const auto& s = *cs.pareto_summary;
        j["pareto_summary"] = {{"front_size", s.front_size},
                               {"knee_objectives", {s.knee_objectives[0], s.knee_objectives[1]}},
                               {"degenerate", s.degenerate},
                               {"repaired", s.repaired}};
    }
    return j;
}

[[nodiscard]] inline ChoiceSet choice_set(const json& j) {
    ChoiceSet cs;
    cs.iteration = j.at("iteration").get<std::size_t>();
    for (const auto& c : j.at("choices")) {
        Choice ch;
        ch.point = vec(c.at("point"), "choice.point");
        ch.utility = c.at("utility").get<double>();
        ch.predicted_mean = c.at("predicted_mean").get<double>();
        ch.predicted_std = c.at("predicted_std").get<double>();
        ch.source = choice_source(c.at("source").get<std::string>());
        cs.choices.push_back(std::move(ch));
    }
    if (j.contains("pareto_summary") && !j.at("pareto_summary").is_null()) {
        const auto& s = j.at("pareto_summary");
        ParetoSummary ps;
        ps.front_size = s.at("front_size").get<std::size_t>();
        ps.knee_objectives = {s.at("knee_objectives")[0].get<double>(), s.at("knee_objectives")[1].get<double>()};
        ps.degenerate = s.at("degenerate").get<bool>();
        ps.repaired = s.at("repaired").get<std::size_t>();
        cs.pareto_summary = ps;
    }
    return cs;
}

} // namespace io

[[nodiscard]] inline nlohmann::json to_json(const LoopConfig& c) {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : c.expert_seeds) seeds.push_back(io::vec(s));
    return {{"p", c.p},
            {"init_points", c.init_points},
            {"max_evaluations", c.max_evaluations},
            {"seed", c.seed},
            {"beta", c.utility.beta},
            {"fit",
             {{"restarts", c.fit.restarts},
              {"iterations", c.fit.iterations},
              {"learning_rate", c.fit.learning_rate},
              {"screening", c.fit.screening}}},
            {"maximize",
             {{"starts", c.maximize.starts},
              {"tolerance", c.maximize.ascent.tolerance},
              {"max_iterations", c.maximize.ascent.max_iterations}}},
            {"nsga2",
             {{"population", c.nsga2.population},
              {"generations", c.nsga2.generations},
              {"offspring_per_gen", c.nsga2.offspring_per_gen},
              {"crossover_prob", c.nsga2.crossover_prob},
              {"mutations_per_gen", c.nsga2.mutations_per_gen},
              {"sbx_eta", c.nsga2.sbx_eta},
              {"mutation_eta", c.nsga2.mutation_eta}}},
            {"expert_seeds", seeds}};
}

/// Defaults for every absent field; type and range errors name the offending field.
[[nodiscard]] inline LoopConfig loop_config_from_json(const nlohmann::json& j, const std::string& path = "config") {
    if (!j.is_object()) throw InputError(path + ": expected an object");
    LoopConfig c;
    io::optional_field(j, "p", c.p, path);
    io::optional_field(j, "init_points", c.init_points, path);
    io::optional_field(j, "max_evaluations", c.max_evaluations, path);
    io::optional_field(j, "seed", c.seed, path);
    io::optional_field(j, "beta", c.utility.beta, path);
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        io::optional_field(f, "restarts", c.fit.restarts, path + ".fit");
        io::optional_field(f, "iterations", c.fit.iterations, path + ".fit");
        io::optional_field(f, "learning_rate", c.fit.learning_rate, path + ".fit");
        io::optional_field(f, "screening", c.fit.screening, path + ".fit");
        if (c.fit.restarts < 1) throw InputError(path + ".fit.restarts: must be >= 1");
        if (c.fit.iterations < 0) throw InputError(path + ".fit.iterations: must be >= 0");
    }
    if (j.contains("maximize")) {
        const auto& m = j.at("maximize");
        io::optional_field(m, "starts", c.maximize.starts, path + ".maximize");
        io::optional_field(m, "tolerance", c.maximize.ascent.tolerance, path + ".maximize");
        io::optional_field(m, "max_iterations", c.maximize.ascent.max_iterations, path + ".maximize");
        if (c.maximize.starts < 1) throw InputError(path + ".maximize.starts: must be >= 1");
    }
    if (j.contains("nsga2")) {
        const auto& n = j.at("nsga2");
        const std::string np = path + ".nsga2";
        io::optional_field(n, "population", c.nsga2.population, np);
        io::optional_field(n, "generations", c.nsga2.generations, np);
        io::optional_field(n, "offspring_per_gen", c.nsga2.offspring_per_gen, np);
        io::optional_field(n, "crossover_prob", c.nsga2.crossover_prob, np);
        io::optional_field(n, "mutations_per_gen", c.nsga2.mutations_per_gen, np);
        io::optional_field(n, "sbx_eta", c.nsga2.sbx_eta, np);
        io::optional_field(n, "mutation_eta", c.nsga2.mutation_eta, np);
    }
    if (j.contains("expert_seeds")) {
        const auto& s = j.at("expert_seeds");
        if (!s.is_array()) throw InputError(path + ".expert_seeds: expected an array of points");
        for (std::size_t i = 0; i < s.size(); ++i)
            c.expert_seeds.push_back(io::vec(s[i], path + ".expert_seeds[" + std::to_string(i) + "]"));
    }
    try {
        c.validate();
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
    return c;
}

/// The model is stored as hyperparameters; restoring reconditions on the stored dataset, which
/// reproduces the cached factorization exactly.
[[nodiscard]] inline nlohmann::json to_json(const LoopState& s) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : s.history)
        history.push_back({{"choices", io::choice_set(h.choices)},
                           {"selected", h.selected},
                           {"point", io::vec(h.point)},
                           {"observed", h.observed}});
    return {{"schema_version", kStateSchemaVersion},
            {"dataset", io::dataset(s.dataset)},
            {"hyperparams", io::hyperparams(s.model.hyperparams())},
            {"log_likelihood", s.model.log_likelihood()},
            {"history", history},
            {"init_count", s.init_count},
            {"seed", s.seed}};
}

[[nodiscard]] inline LoopState loop_state_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kStateSchemaVersion)
        throw InputError("loop state: unsupported schema_version " + j.value("schema_version", nlohmann::json()).dump());
    LoopState s;
    s.dataset = io::dataset(j.at("dataset"));
    const double ll = j.at("log_likelihood").is_number() ? j.at("log_likelihood").get<double>()
                                                         : std::numeric_limits<double>::quiet_NaN();
    s.model = with_likelihood(GpModel::condition(s.dataset, io::hyperparams(j.at("hyperparams"))), ll);
    for (const auto& h : j.at("history"))
        s.history.push_back({io::choice_set(h.at("choices")), h.at("selected").get<int>(), io::vec(h.at("point"), "history.point"),
                             h.at("observed").get<double>()});
    s.init_count = j.at("init_count").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

} // namespace hitlbo

#endif // HITLBO_SERIALIZATION_HPP
