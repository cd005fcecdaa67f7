#ifndef SPANAGG_HTTP_API_HPP
#define SPANAGG_HTTP_API_HPP

#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "spanagg/error.hpp"
#include "spanagg/session.hpp"

namespace spanagg {

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::version_conflict:
    case ErrorKind::no_data:
    case ErrorKind::escalate: return 409;
    case ErrorKind::resource: return 422;
    case ErrorKind::invalid_judgment:
    case ErrorKind::conflict:
    case ErrorKind::domain:
    case ErrorKind::undefined_spectrum:
    case ErrorKind::parse: return 400;
  }
  return 500;
}

namespace detail {

inline void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    reply(res, http_status(e.kind()), json{{"error", to_string(e.kind())}, {"message", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, json{{"error", "internal"}, {"message", e.what()}});
  }
}

inline json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return parse_json_text(req.body, "request body");
}

}  // namespace detail

/// Registers the session routes on `server`. `store` must outlive it.
///
///   POST /sessions                      create
///   PUT  /sessions/{id}/judgments       add or replace judgments
///   POST /sessions/{id}/evaluate        run the pipeline
///   GET  /sessions/{id}/agreement       last agreement report
///   GET  /sessions/{id}/revision        open revision request
///   POST /sessions/{id}/revision        answer it
inline void mount_session_api(httplib::Server& server, SessionStore& store) {
  using detail::guarded;
  using detail::reply;
  const std::string id = R"(/sessions/([A-Za-z0-9_\-]+))";

  server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 201, store.create(detail::body_json(req))); });
  });

  // Body: a list of judgments, or {judgments: [...], version}.
  server.Put(id + "/judgments", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = detail::body_json(req);
      std::optional<std::uint64_t> version;
      json list = body;
      if (body.is_object()) {
        list = body.contains("judgments") ? body.at("judgments") : json();
        if (body.contains("version") && !body.at("version").is_null()) {
          version = detail::field<std::uint64_t>(body, "version", "request body");
        }
      }
      reply(res, 200, store.submit_judgments(req.matches[1], list, version));
    });
  });

  server.Post(id + "/evaluate", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = detail::body_json(req);
      std::optional<std::uint64_t> version;
      if (body.is_object() && body.contains("version") && !body.at("version").is_null()) {
        version = detail::field<std::uint64_t>(body, "version", "request body");
      }
      reply(res, 200, store.evaluate(req.matches[1], version));
    });
  });

  server.Get(id + "/agreement", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, store.agreement(req.matches[1])); });
  });

  server.Get(id + "/revision", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, store.revision_request(req.matches[1])); });
  });

  server.Post(id + "/revision", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, store.respond_revision(req.matches[1], detail::body_json(req))); });
  });
}

}  // namespace spanagg

#endif  // SPANAGG_HTTP_API_HPP
