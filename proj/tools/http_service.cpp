#include "http_service.hpp"

#include <string>

#include <json.hpp>

namespace discofeed::http {

using json = nlohmann::json;

int http_status(df_status s) noexcept {
  switch (s) {
    case DF_OK: return 200;
    case DF_ERR_NOT_FOUND: return 404;
    case DF_ERR_EMPTY_INPUT: return 422;
    case DF_ERR_NOT_READY: return 503;
    case DF_ERR_INVALID_ARGUMENT:
    case DF_ERR_PARSE: return 400;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}}.dump());
}

// Forwards a C API call's JSON output or error.
template <typename Call>
void respond(httplib::Response& res, Call&& call, int ok_status = 200) {
  char* out = nullptr;
  const df_status s = call(&out);
  if (s != DF_OK) {
    send_error(res, http_status(s), df_last_error());
    return;
  }
  send_json(res, ok_status, out ? out : "null");
  df_string_free(out);
}

bool parse_body(const httplib::Request& req, httplib::Response& res, json& body) {
  try {
    body = json::parse(req.body);
  } catch (const json::exception&) {
    send_error(res, 400, "request body is not valid JSON");
    return false;
  }
  if (!body.is_object()) {
    send_error(res, 400, "request body must be a JSON object");
    return false;
  }
  return true;
}

bool string_field(const json& body, const char* key, std::string& value) {
  if (!body.contains(key) || !body.at(key).is_string()) return false;
  value = body.at(key).get<std::string>();
  return true;
}

}  // namespace

void register_routes(httplib::Server& server, df_engine* engine) {
  server.Get("/exercises", [engine](const httplib::Request&, httplib::Response& res) {
    respond(res, [&](char** out) { return df_list_exercises(engine, out); });
  });

  server.Get(R"(/exercises/([^/]+))", [engine](const httplib::Request& req,
                                                httplib::Response& res) {
    const std::string id = req.matches[1];
    respond(res, [&](char** out) { return df_get_exercise(engine, id.c_str(), out); });
  });

  server.Post("/sessions", [engine](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (!parse_body(req, res, body)) return;
    std::string exercise;
    std::string mode = "full";
    if (!string_field(body, "exercise_id", exercise)) {
      send_error(res, 400, "exercise_id is required");
      return;
    }
    if (body.contains("mode") && !string_field(body, "mode", mode)) {
      send_error(res, 400, "mode must be a string");
      return;
    }
    respond(
        res, [&](char** out) { return df_session_create(engine, exercise.c_str(), mode.c_str(), out); },
        201);
  });

  server.Post(R"(/sessions/([^/]+)/attempts)", [engine](const httplib::Request& req,
                                                         httplib::Response& res) {
    const std::string id = req.matches[1];
    json body;
    if (!parse_body(req, res, body)) return;
    // A missing text is an empty attempt; a non-string one is malformed.
    std::string text;
    if (body.contains("text") && !string_field(body, "text", text)) {
      send_error(res, 400, "text must be a string");
      return;
    }
    respond(res, [&](char** out) { return df_session_attempt(engine, id.c_str(), text.c_str(), out); });
  });

  server.Get(R"(/sessions/([^/]+))", [engine](const httplib::Request& req,
                                               httplib::Response& res) {
    const std::string id = req.matches[1];
    respond(res, [&](char** out) { return df_session_get(engine, id.c_str(), out); });
  });
}

}  // namespace discofeed::http
