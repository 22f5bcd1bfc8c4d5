#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "discofeed/discofeed.h"
#include "http_service.hpp"

namespace {

using json = nlohmann::json;

httplib::Server* running_server = nullptr;

void stop_server(int) {
  if (running_server) running_server->stop();
}

int fail(df_status s) {
  std::cerr << "discofeed: " << df_status_string(s) << ": " << df_last_error() << "\n";
  return static_cast<int>(s) + 1;
}

// Runs `call`, then prints stage warnings to stderr and the rest as JSON on
// stdout.
template <typename Call>
int print_report(Call call, bool warnings_only = false) {
  char* out = nullptr;
  const df_status s = call(&out);
  if (s != DF_OK) return fail(s);
  const json doc = json::parse(out);
  df_string_free(out);
  if (doc.is_object() && doc.contains("warnings")) {
    for (const auto& w : doc.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";
    if (!warnings_only) std::cout << doc.at("summary").dump(2) << "\n";
  } else {
    std::cout << doc.dump(2) << "\n";
  }
  return 0;
}

int set(df_engine* e, const char* key, const std::string& value) {
  const df_status s = df_config_set(e, key, json(value).dump().c_str());
  return s == DF_OK ? 0 : fail(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discourse-graph feedback engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string artifacts;
  app.add_option("-c,--config", config_path, "Config file (default: $DISCOFEED_CONFIG)");
  app.add_option("-a,--artifacts", artifacts, "Artifact directory override");

  std::string corpus;
  auto* ingest = app.add_subcommand("ingest", "Validate and store the solution corpus");
  ingest->add_option("--corpus", corpus, "Corpus file override");

  auto* build = app.add_subcommand("build-graphs", "Segment, embed and cluster into exercise graphs");
  auto* gen = app.add_subcommand("gen-triplets", "Sample transition triplets from the graphs");
  auto* train = app.add_subcommand("train", "Train the transition classifier");
  auto* pipeline = app.add_subcommand("pipeline", "Run ingest through train");

  std::string exercise;
  std::string text;
  std::string mode = "full";
  auto* feedback = app.add_subcommand("feedback", "Feedback for one attempt");
  feedback->add_option("--exercise", exercise, "Exercise id")->required();
  feedback->add_option("--text", text, "Student attempt")->required();
  feedback->add_option("--mode", mode, "minimal, cluster or full")
      ->check(CLI::IsMember({"minimal", "cluster", "full"}));
  bool message_only = false;
  feedback->add_flag("--message-only", message_only, "Print only the feedback message");

  std::string eval_path;
  auto* eval = app.add_subcommand("eval", "Compare the feedback modes on labelled attempts");
  eval->add_option("--file", eval_path, "Eval file")->required();

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the tutoring HTTP API");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);

  df_engine* engine = nullptr;
  if (df_status s = df_engine_create(config_path.empty() ? nullptr : config_path.c_str(), &engine);
      s != DF_OK) {
    return fail(s);
  }
  struct Guard {
    df_engine* e;
    ~Guard() { df_engine_destroy(e); }
  } guard{engine};

  if (!artifacts.empty()) {
    if (int rc = set(engine, "artifacts", artifacts)) return rc;
  }

  char* out = nullptr;
  if (*ingest) {
    if (!corpus.empty()) {
      if (int rc = set(engine, "corpus", corpus)) return rc;
    }
    return print_report([&](char** o) { return df_ingest(engine, o); });
  }
  if (*build) return print_report([&](char** o) { return df_build_graphs(engine, o); });
  if (*gen) return print_report([&](char** o) { return df_generate_triplets(engine, o); });
  if (*train) return print_report([&](char** o) { return df_train(engine, o); });
  if (*pipeline) {
    using Stage = df_status (*)(df_engine*, char**);
    for (Stage stage : {Stage{df_ingest}, Stage{df_build_graphs}, Stage{df_generate_triplets},
                        Stage{df_train}}) {
      if (int rc = print_report([&](char** o) { return stage(engine, o); }, true)) return rc;
    }
    return 0;
  }
  if (*feedback) {
    const df_status s = df_feedback(engine, exercise.c_str(), text.c_str(), mode.c_str(), &out);
    if (s != DF_OK) return fail(s);
    const json doc = json::parse(out);
    df_string_free(out);
    std::cout << (message_only ? doc.at("message").get<std::string>() : doc.dump(2)) << "\n";
    return 0;
  }
  if (*eval) {
    return print_report([&](char** o) { return df_evaluate(engine, eval_path.c_str(), o); });
  }
  if (*serve) {
    if (df_status s = df_load(engine); s != DF_OK) {
      std::cerr << "warning: " << df_last_error() << "; inference endpoints return 503\n";
    }
    httplib::Server server;
    discofeed::http::register_routes(server, engine);
    running_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    if (!server.bind_to_port(host, port)) {
      std::cerr << "discofeed: cannot bind " << host << ":" << port << "\n";
      return 1;
    }
    std::cerr << "listening on " << host << ":" << port << "\n";
    server.listen_after_bind();
    running_server = nullptr;
    return 0;
  }
  return 0;
}
