#ifndef HITLBO_HTTP_SERVICE_HPP
#define HITLBO_HTTP_SERVICE_HPP

// Eigen must be seen before httplib: <resolv.h> defines a `_res` macro that collides with it.
#include "hitlbo/session.hpp"

#include <httplib.h>

namespace hitlbo {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"code", code}, {"message", message}});
}

/// Runs a handler, mapping library exceptions onto {code, message} error bodies.
template <typename Handler>
void guarded(httplib::Response& res, Handler&& h) {
    try {
        h();
    } catch (const SessionError& e) {
        send_error(res, e.http_status(), e.code(), e.what());
    } catch (const InputError& e) {
        send_error(res, 400, "invalid_argument", e.what());
    } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "invalid_argument", std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

[[nodiscard]] inline nlohmann::json body_object(const httplib::Request& req) {
    const auto j = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
    if (!j.is_object()) throw SessionError::invalid("request body must be a JSON object");
    return j;
}

} // namespace detail

/// Routes:
///   GET  /health
///   GET  /sessions                      POST /sessions
///   GET  /sessions/{id}                 GET  /sessions/{id}/choices
///   GET  /sessions/{id}/history         GET  /sessions/{id}/posterior?grid=N
///   POST /sessions/{id}/selection {index, iteration?}
///   POST /sessions/{id}/override  {point}
///   POST /sessions/{id}/observation {y}
inline void register_routes(httplib::Server& server, SessionManager& mgr) {
    using detail::guarded;
    using detail::send_json;
    using Req = httplib::Request;
    using Res = httplib::Response;
    const std::string id = "/sessions/([0-9a-f]+)";

    server.Get("/health", [](const Req&, Res& res) { send_json(res, 200, {{"status", "ok"}}); });

    server.Get("/sessions", [&mgr](const Req&, Res& res) {
        guarded(res, [&] { send_json(res, 200, {{"sessions", mgr.list()}}); });
    });

    server.Post("/sessions", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] { send_json(res, 201, mgr.create(detail::body_object(req))); });
    });

    server.Get(id, [&mgr](const Req& req, Res& res) {
        guarded(res, [&] { send_json(res, 200, mgr.get(req.matches[1])); });
    });

    server.Get(id + "/choices", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] { send_json(res, 200, mgr.choices(req.matches[1])); });
    });

    server.Get(id + "/history", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] { send_json(res, 200, mgr.history(req.matches[1])); });
    });

    server.Get(id + "/posterior", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] {
            std::size_t n = 0;
            if (req.has_param("grid")) {
                const std::string g = req.get_param_value("grid");
                std::size_t used = 0;
                long long v = -1;
                try {
                    v = std::stoll(g, &used);
                } catch (const std::exception&) {
                }
                if (used != g.size() || v < 2) throw SessionError::invalid("grid: expected an integer >= 2");
                n = static_cast<std::size_t>(v);
            } else {
                n = mgr.snapshot(req.matches[1]).bounds.dim() == 1 ? 201 : 41;
            }
            send_json(res, 200, mgr.posterior(req.matches[1], n));
        });
    });

    server.Post(id + "/selection", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] {
            const auto body = detail::body_object(req);
            if (!body.contains("index") || !body.at("index").is_number_integer())
                throw SessionError::invalid("index: expected an integer");
            std::optional<std::size_t> iteration;
            if (body.contains("iteration")) {
                if (!body.at("iteration").is_number_unsigned()) throw SessionError::invalid("iteration: expected an integer >= 0");
                iteration = body.at("iteration").get<std::size_t>();
            }
            send_json(res, 200, mgr.select(req.matches[1], body.at("index").get<long long>(), iteration));
        });
    });

    server.Post(id + "/override", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] {
            const auto body = detail::body_object(req);
            if (!body.contains("point")) throw SessionError::invalid("point: required");
            send_json(res, 200, mgr.override_point(req.matches[1], io::vec(body.at("point"), "point")));
        });
    });

    server.Post(id + "/observation", [&mgr](const Req& req, Res& res) {
        guarded(res, [&] {
            const auto body = detail::body_object(req);
            // JSON has no NaN literal; accept the strings clients produce so they are rejected by value.
            if (!body.contains("y")) throw SessionError::invalid("y: required");
            const auto& y = body.at("y");
            double v = 0.0;
            if (y.is_number()) {
                v = y.get<double>();
            } else if (y.is_string() && (y == "NaN" || y == "nan" || y == "Infinity" || y == "-Infinity")) {
                v = std::numeric_limits<double>::quiet_NaN();
            } else {
                throw SessionError::invalid("y: expected a finite number");
            }
            send_json(res, 200, mgr.observe(req.matches[1], v));
        });
    });

    server.set_error_handler([](const Req&, Res& res) {
        if (res.body.empty()) detail::send_error(res, res.status, res.status == 404 ? "not_found" : "error", "no such route");
    });
}

} // namespace hitlbo

#endif // HITLBO_HTTP_SERVICE_HPP
