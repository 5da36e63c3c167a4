#ifndef HITLBO_PRACTITIONERS_HPP
#define HITLBO_PRACTITIONERS_HPP

#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "hitlbo/loop.hpp"

namespace hitlbo {

/// Simulated selection behaviors used for automated benchmarking.
struct Behavior {
    enum class Kind { expert, adversarial, trusting, prob_best };

    Kind kind = Kind::trusting;
    double p_best = 0.0; // only meaningful for prob_best

    [[nodiscard]] static Behavior expert() { return {Kind::expert, 0.0}; }
    [[nodiscard]] static Behavior adversarial() { return {Kind::adversarial, 0.0}; }
    [[nodiscard]] static Behavior trusting() { return {Kind::trusting, 0.0}; }
    [[nodiscard]] static Behavior prob_best(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw InputError("behavior: p_best must lie in [0, 1]");
        return {Kind::prob_best, p};
    }

    /// "expert", "adversarial", "trusting" or "pbest:<q>".
    [[nodiscard]] static Behavior parse(std::string_view s) {
        if (s == "expert") return expert();
        if (s == "adversarial") return adversarial();
        if (s == "trusting") return trusting();
        constexpr std::string_view prefix = "pbest:";
        if (s.substr(0, prefix.size()) == prefix) {
            const std::string rest(s.substr(prefix.size()));
            std::size_t used = 0;
            double q = 0.0;
            try {
                q = std::stod(rest, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != rest.size()) throw InputError("behavior: malformed probability in '" + std::string(s) + "'");
            return prob_best(q);
        }
        throw InputError("behavior: unknown behavior '" + std::string(s) + "'");
    }

    [[nodiscard]] std::string name() const {
        switch (kind) {
            case Kind::expert: return "expert";
            case Kind::adversarial: return "adversarial";
            case Kind::trusting: return "trusting";
            case Kind::prob_best: {
                std::ostringstream os;
                os << "pbest:" << p_best;
                return os.str();
            }
        }
        return "unknown";
    }
};

namespace detail {

template <typename Better>
[[nodiscard]] std::size_t arg_best(const std::vector<double>& v, Better better) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (better(v[i], v[best])) best = i;
    return best;
}

} // namespace detail

/// Index chosen by `behavior`. Ties go to the lowest index. `prob_best` picks the best
/// true value with probability p_best and otherwise one of the remaining choices uniformly.
[[nodiscard]] inline std::size_t select(const Behavior& behavior, const ChoiceSet& choices,
                                        const std::vector<double>& true_values, std::mt19937_64& rng) {
    if (true_values.size() != choices.size()) throw InputError("select: one true value per choice is required");
    if (choices.size() == 0) throw InputError("select: empty choice set");
    auto greater = [](double a, double b) { return a > b; };
    auto less = [](double a, double b) { return a < b; };
    switch (behavior.kind) {
        case Behavior::Kind::expert: return detail::arg_best(true_values, greater);
        case Behavior::Kind::adversarial: return detail::arg_best(true_values, less);
        case Behavior::Kind::trusting: {
            std::vector<double> u;
            for (const auto& c : choices.choices) u.push_back(c.utility);
            return detail::arg_best(u, greater);
        }
        case Behavior::Kind::prob_best: {
            const std::size_t best = detail::arg_best(true_values, greater);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            if (unit(rng) < behavior.p_best || choices.size() == 1) return best;
            std::uniform_int_distribution<std::size_t> other(0, choices.size() - 2);
            const std::size_t k = other(rng);
            return k < best ? k : k + 1;
        }
    }
    return 0;
}

} // namespace hitlbo

#endif // HITLBO_PRACTITIONERS_HPP
