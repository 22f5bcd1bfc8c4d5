#include "discofeed/discofeed.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "discofeed/error.hpp"
#include "discofeed/pipeline.hpp"
#include "text_util.hpp"

using discofeed::Error;
using discofeed::ErrorCode;
using json = nlohmann::json;

struct df_engine {
  discofeed::Config config;
  std::mutex lock;
  std::shared_ptr<const discofeed::Artifacts> artifacts;
  std::shared_ptr<discofeed::SessionStore> sessions;
};

namespace {

thread_local std::string last_error;

df_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_argument: return DF_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return DF_ERR_IO;
    case ErrorCode::parse: return DF_ERR_PARSE;
    case ErrorCode::not_found: return DF_ERR_NOT_FOUND;
    case ErrorCode::not_ready: return DF_ERR_NOT_READY;
    case ErrorCode::empty_input: return DF_ERR_EMPTY_INPUT;
    case ErrorCode::dimension_mismatch: return DF_ERR_DIMENSION_MISMATCH;
    case ErrorCode::internal: return DF_ERR_INTERNAL;
  }
  return DF_ERR_INTERNAL;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const json& doc) {
  if (out) *out = dup(doc.dump());
}

template <typename F>
df_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return DF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return DF_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DF_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::invalid_argument, std::string(what) + " is null");
}

json report_json(const discofeed::StageReport& r) {
  return {{"warnings", r.warnings}, {"summary", r.summary}};
}

discofeed::FeedbackMode mode_of(const char* mode) {
  const auto m = discofeed::parse_feedback_mode(mode ? mode : "full");
  if (!m) throw Error(ErrorCode::invalid_argument, std::string("unknown mode '") + mode + "'");
  return *m;
}

struct Loaded {
  std::shared_ptr<const discofeed::Artifacts> artifacts;
  std::shared_ptr<discofeed::SessionStore> sessions;
};

Loaded loaded(df_engine* e) {
  std::lock_guard<std::mutex> g(e->lock);
  if (!e->artifacts) {
    e->artifacts = discofeed::load_artifacts(e->config);
    e->sessions = std::make_shared<discofeed::SessionStore>(e->artifacts);
  }
  return {e->artifacts, e->sessions};
}

// Stage runs invalidate whatever inference state was loaded before.
template <typename Stage>
df_status run_stage(df_engine* e, char** report, Stage stage) {
  return guarded([&] {
    require(e, "engine");
    const auto r = stage(e->config);
    {
      std::lock_guard<std::mutex> g(e->lock);
      e->sessions.reset();
      e->artifacts.reset();
    }
    put(report, report_json(r));
  });
}

}  // namespace

extern "C" {

df_status df_engine_create(const char* config_path, df_engine** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto e = std::make_unique<df_engine>();
    std::optional<std::string> explicit_path;
    if (config_path) explicit_path = config_path;
    if (const auto path = discofeed::resolve_config_path(explicit_path)) {
      e->config = discofeed::load_config(*path);
    }
    *out = e.release();
  });
}

void df_engine_destroy(df_engine* engine) { delete engine; }

const char* df_last_error(void) { return last_error.c_str(); }

const char* df_status_string(df_status status) {
  switch (status) {
    case DF_OK: return "ok";
    case DF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DF_ERR_IO: return "i/o error";
    case DF_ERR_PARSE: return "parse error";
    case DF_ERR_NOT_FOUND: return "not found";
    case DF_ERR_NOT_READY: return "artifacts not built";
    case DF_ERR_EMPTY_INPUT: return "empty input";
    case DF_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case DF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void df_string_free(char* s) { std::free(s); }

df_status df_config(df_engine* engine, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    put(out_json, discofeed::config_to_json(engine->config));
  });
}

df_status df_config_set(df_engine* engine, const char* key, const char* value_json) {
  return guarded([&] {
    require(engine, "engine");
    require(key, "key");
    require(value_json, "value_json");
    json doc = discofeed::config_to_json(engine->config);
    if (!doc.contains(key)) {
      throw Error(ErrorCode::invalid_argument, std::string("unknown config key '") + key + "'");
    }
    json value;
    try {
      value = json::parse(value_json);
    } catch (const json::exception&) {
      throw Error(ErrorCode::parse, std::string("value for '") + key + "' is not JSON");
    }
    doc[key] = value;
    auto updated = discofeed::config_from_json(doc, "");
    std::lock_guard<std::mutex> g(engine->lock);
    engine->config = std::move(updated);
    engine->sessions.reset();
    engine->artifacts.reset();
  });
}

df_status df_ingest(df_engine* engine, char** report_json) {
  return run_stage(engine, report_json, discofeed::ingest);
}
df_status df_build_graphs(df_engine* engine, char** report_json) {
  return run_stage(engine, report_json, discofeed::build_graphs);
}
df_status df_generate_triplets(df_engine* engine, char** report_json) {
  return run_stage(engine, report_json, discofeed::generate_triplets);
}
df_status df_train(df_engine* engine, char** report_json) {
  return run_stage(engine, report_json, discofeed::train);
}

df_status df_load(df_engine* engine) {
  return guarded([&] {
    require(engine, "engine");
    loaded(engine);
  });
}

df_status df_feedback(df_engine* engine, const char* exercise_id, const char* text,
                      const char* mode, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(exercise_id, "exercise_id");
    require(text, "text");
    require(out_json, "out_json");
    const auto m = mode_of(mode);
    const auto l = loaded(engine);
    const auto& a = *l.artifacts;
    const auto fb = discofeed::run_feedback(a, exercise_id, text, m);
    put(out_json, discofeed::feedback_to_json(a, exercise_id, fb, a.config.alpha));
  });
}

df_status df_evaluate(df_engine* engine, const char* eval_path, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(eval_path, "eval_path");
    require(out_json, "out_json");
    const auto l = loaded(engine);
    const auto& a = *l.artifacts;
    put(out_json, discofeed::evaluate_modes(a, discofeed::load_eval(eval_path)));
  });
}

df_status df_segment(df_engine* engine, const char* text, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(text, "text");
    require(out_json, "out_json");
    if (discofeed::text_util::trim(text).empty()) throw Error(ErrorCode::empty_input, "empty text");
    const discofeed::FeatureExtractor ex(engine->config,
                                         discofeed::RelationDecoder::zeros(engine->config.dimension));
    json units = json::array();
    for (const auto& edu : ex.segment(text)) {
      units.push_back({{"text", edu.text}, {"char_start", edu.char_start},
                       {"char_end", edu.char_end}});
    }
    put(out_json, units);
  });
}

df_status df_list_exercises(df_engine* engine, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(out_json, "out_json");
    const auto l = loaded(engine);
    const auto& a = *l.artifacts;
    json list = json::array();
    for (const auto& [id, g] : a.graphs) {
      const auto p = a.prompts.find(id);
      list.push_back({{"id", id}, {"prompt", p == a.prompts.end() ? "" : p->second}});
    }
    put(out_json, list);
  });
}

df_status df_get_exercise(df_engine* engine, const char* exercise_id, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(exercise_id, "exercise_id");
    require(out_json, "out_json");
    const auto l = loaded(engine);
    const auto& a = *l.artifacts;
    const auto g = a.graphs.find(exercise_id);
    if (g == a.graphs.end()) {
      throw Error(ErrorCode::not_found, std::string("unknown exercise '") + exercise_id + "'");
    }
    const auto p = a.prompts.find(exercise_id);
    std::size_t references = 0;
    for (const auto& n : g->second.nodes()) references += n.contains_reference ? 1 : 0;
    put(out_json, {{"id", exercise_id},
                   {"prompt", p == a.prompts.end() ? "" : p->second},
                   {"nodes", g->second.nodes().size()},
                   {"edges", g->second.edges().size()},
                   {"reference_nodes", references}});
  });
}

df_status df_session_create(df_engine* engine, const char* exercise_id, const char* mode,
                            char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(exercise_id, "exercise_id");
    require(out_json, "out_json");
    const auto m = mode_of(mode);
    put(out_json, loaded(engine).sessions->create(exercise_id, m));
  });
}

df_status df_session_attempt(df_engine* engine, const char* session_id, const char* text,
                             char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(session_id, "session_id");
    require(text, "text");
    require(out_json, "out_json");
    put(out_json, loaded(engine).sessions->attempt(session_id, text));
  });
}

df_status df_session_get(df_engine* engine, const char* session_id, char** out_json) {
  return guarded([&] {
    require(engine, "engine");
    require(session_id, "session_id");
    require(out_json, "out_json");
    put(out_json, loaded(engine).sessions->get(session_id));
  });
}

}  // extern "C"
