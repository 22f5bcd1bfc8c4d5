#include "discofeed/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const fs::path& p, ErrorCode missing = ErrorCode::io) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(missing, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorCode::io, "write failed: " + p.string());
}

json read_json(const fs::path& p, ErrorCode missing = ErrorCode::io) {
  const std::string text = read_file(p, missing);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& doc) { write_file(p, doc.dump(1) + "\n"); }

// Runs a stage body, prefixing any error with the stage name.
template <typename F>
auto staged(const char* stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string(stage) + ": " + e.what());
  }
}

bool valid_exercise_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute() || base.empty()) return path;
  return (fs::path(base) / p).lexically_normal().string();
}

fs::path artifacts_dir(const Config& c) { return fs::path(c.artifacts); }

std::vector<std::string> require_string_list(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw Error(ErrorCode::parse, std::string("missing list '") + key + "'");
  }
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

json config_to_json(const Config& c) {
  return {
      {"corpus", c.corpus},
      {"prompts", c.prompts},
      {"embedding_store", c.embedding_store},
      {"boundary_labels", c.boundary_labels},
      {"relation_data", c.relation_data},
      {"templates", c.templates},
      {"artifacts", c.artifacts},
      {"dimension", c.dimension},
      {"eps", c.eps},
      {"min_samples", c.min_samples},
      {"alpha", c.alpha},
      {"max_iterations", c.max_iterations},
      {"hidden_size", c.hidden_size},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"samples_per_exercise", c.samples_per_exercise},
      {"exercise_slots", c.exercise_slots},
      {"random_fraction", c.random_fraction},
      {"boundary_negatives", c.boundary_negatives},
      {"relation_epochs", c.relation_epochs},
      {"relation_learning_rate", c.relation_learning_rate},
      {"seed", c.seed},
  };
}

Config config_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "config must be a JSON object");
  Config c;
  const json known = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::parse, "unknown config key '" + key + "'");
    if (value.type() != known.at(key).type() &&
        !(value.is_number() && known.at(key).is_number())) {
      throw Error(ErrorCode::parse, "config key '" + key + "' has the wrong type");
    }
  }
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("corpus", c.corpus);
  get("prompts", c.prompts);
  get("embedding_store", c.embedding_store);
  get("boundary_labels", c.boundary_labels);
  get("relation_data", c.relation_data);
  get("templates", c.templates);
  get("artifacts", c.artifacts);
  get("dimension", c.dimension);
  get("eps", c.eps);
  get("min_samples", c.min_samples);
  get("alpha", c.alpha);
  get("max_iterations", c.max_iterations);
  get("hidden_size", c.hidden_size);
  get("epochs", c.epochs);
  get("learning_rate", c.learning_rate);
  get("batch_size", c.batch_size);
  get("samples_per_exercise", c.samples_per_exercise);
  get("exercise_slots", c.exercise_slots);
  get("random_fraction", c.random_fraction);
  get("boundary_negatives", c.boundary_negatives);
  get("relation_epochs", c.relation_epochs);
  get("relation_learning_rate", c.relation_learning_rate);
  get("seed", c.seed);

  if (c.dimension == 0) throw Error(ErrorCode::invalid_argument, "dimension must be positive");
  if (!(c.eps > 0.0 && c.eps <= 2.0)) throw Error(ErrorCode::invalid_argument, "eps out of range");
  if (c.min_samples == 0) throw Error(ErrorCode::invalid_argument, "min_samples must be positive");
  if (c.max_iterations < 1) throw Error(ErrorCode::invalid_argument, "max_iterations must be at least 1");
  if (c.hidden_size == 0) throw Error(ErrorCode::invalid_argument, "hidden_size must be positive");
  if (c.batch_size == 0) throw Error(ErrorCode::invalid_argument, "batch_size must be positive");
  if (c.samples_per_exercise == 0 || c.samples_per_exercise % 2 != 0) {
    throw Error(ErrorCode::invalid_argument, "samples_per_exercise must be positive and even");
  }
  if (c.random_fraction < 0.0 || c.random_fraction > 1.0) {
    throw Error(ErrorCode::invalid_argument, "random_fraction must lie in [0, 1]");
  }

  c.corpus = resolve(c.corpus, base_dir);
  c.prompts = resolve(c.prompts, base_dir);
  c.embedding_store = resolve(c.embedding_store, base_dir);
  c.boundary_labels = resolve(c.boundary_labels, base_dir);
  c.relation_data = resolve(c.relation_data, base_dir);
  c.templates = resolve(c.templates, base_dir);
  c.artifacts = resolve(c.artifacts, base_dir);
  return c;
}

Config load_config(const std::string& path) {
  const json doc = read_json(path);
  try {
    return config_from_json(doc, fs::path(path).parent_path().string());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return explicit_path;
  if (const char* env = std::getenv(config_env_var); env && *env) return std::string(env);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Corpus

std::vector<std::string> Corpus::exercise_ids() const {
  std::set<std::string> ids;
  for (const CorpusRecord& r : records) ids.insert(r.exercise_id);
  return {ids.begin(), ids.end()};
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open corpus " + path);
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    const auto f = text_util::split(line, '\t');
    if (f.size() != 3) throw Error(ErrorCode::parse, where + "expected 3 tab-separated fields");
    CorpusRecord r;
    r.exercise_id = std::string(text_util::trim(f[0]));
    if (!valid_exercise_id(r.exercise_id)) {
      throw Error(ErrorCode::parse, where + "invalid exercise id '" + r.exercise_id + "'");
    }
    const auto source = parse_solution_source(text_util::trim(f[1]));
    if (!source) throw Error(ErrorCode::parse, where + "source must be reference or student");
    r.source = *source;
    r.text = std::string(text_util::trim(f[2]));
    if (r.text.empty()) throw Error(ErrorCode::parse, where + "empty solution text");
    corpus.records.push_back(std::move(r));
  }
  if (corpus.records.empty()) throw Error(ErrorCode::empty_input, "corpus is empty: " + path);
  return corpus;
}

std::map<std::string, std::string> load_prompts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open prompts " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": expected a tab");
    }
    out[std::string(text_util::trim(line.substr(0, tab)))] =
        std::string(text_util::trim(line.substr(tab + 1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

FeatureExtractor::FeatureExtractor(const Config& config, RelationDecoder decoder)
    : lexicon_(CueLexicon::defaults()), decoder_(std::move(decoder)) {
  if (config.embedding_store.empty()) {
    embedder_ = std::make_shared<HashEmbedder>(config.dimension);
  } else {
    auto store = std::make_shared<const EmbeddingStore>(
        load_store(config.embedding_store, config.dimension));
    embedder_ = std::make_shared<StoreEmbedder>(std::move(store), config.dimension);
  }
  if (!config.boundary_labels.empty()) {
    for (LabeledText& row : load_boundary_labels(config.boundary_labels)) {
      labels_[std::string(text_util::trim(row.text))] = std::move(row.labels);
    }
  }
}

std::vector<Edu> FeatureExtractor::segment(const std::string& text) const {
  const std::string_view trimmed = text_util::trim(text);
  if (const auto it = labels_.find(std::string(trimmed)); it != labels_.end()) {
    const auto tokens = tokenize(trimmed);
    return apply_boundary_labels(trimmed, tokens, it->second);
  }
  return segment_heuristic(trimmed, lexicon_);
}

ParsedSolution FeatureExtractor::parse(const std::string& text, SolutionSource source) const {
  ParsedSolution s;
  s.source = source;
  s.edus = segment(text);
  for (const Edu& e : s.edus) s.embeddings.push_back(embedder_->embed(e.text));
  for (std::size_t i = 1; i < s.edus.size(); ++i) {
    const auto cue = detect_cue(s.edus[i - 1], s.edus[i], lexicon_);
    s.relations.push_back(classify_relation(decoder_, s.embeddings[i - 1], s.embeddings[i], cue));
  }
  return s;
}

std::string serialize_relation_decoder(const RelationDecoder& d) {
  json doc = {{"format", "discofeed.relations/1"}, {"dimension", d.embedding_dimension()}};
  for (Explicitness b : {Explicitness::Explicit, Explicitness::Implicit}) {
    doc["branches"][std::string(to_string(b))] = d.parameters(b);
  }
  return doc.dump(1) + "\n";
}

RelationDecoder parse_relation_decoder(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("relation model: ") + e.what());
  }
  if (doc.value("format", "") != "discofeed.relations/1") {
    throw Error(ErrorCode::parse, "relation model: unsupported format");
  }
  try {
    RelationDecoder d = RelationDecoder::zeros(doc.at("dimension").get<std::size_t>());
    for (Explicitness b : {Explicitness::Explicit, Explicitness::Implicit}) {
      auto values = doc.at("branches").at(std::string(to_string(b))).get<std::vector<double>>();
      if (values.size() != d.parameters(b).size()) {
        throw Error(ErrorCode::parse, "relation model: wrong parameter count");
      }
      d.parameters(b) = std::move(values);
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("relation model: ") + e.what());
  }
}

RelationTrainingResult train_relations(const Config& config, const Corpus& corpus,
                                       const FeatureExtractor& extractor) {
  std::vector<RelationSample> samples;
  const EmbeddingProvider& embed = extractor.embedder();
  if (!config.relation_data.empty()) {
    for (const RelationExample& ex : load_relation_examples(config.relation_data)) {
      samples.push_back({embed.embed(ex.left), embed.embed(ex.right), ex.explicitness, ex.category});
    }
  } else {
    // Cue-labelled boundaries stand in for annotated relations; both
    // branches learn from them.
    for (const CorpusRecord& r : corpus.records) {
      const auto edus = extractor.segment(r.text);
      if (edus.size() < 2) continue;
      const auto labels = label_boundary_relations(edus, extractor.lexicon());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        const EmbeddingVector l = embed.embed(edus[i].text);
        const EmbeddingVector rr = embed.embed(edus[i + 1].text);
        samples.push_back({l, rr, Explicitness::Explicit, *labels[i]});
        samples.push_back({l, rr, Explicitness::Implicit, *labels[i]});
      }
    }
  }
  if (samples.empty()) return {RelationDecoder::zeros(embed.dimension()), {}};
  TrainOptions opts;
  opts.epochs = config.relation_epochs;
  opts.learning_rate = config.relation_learning_rate;
  opts.seed = config.seed;
  return train_relation_decoder(samples, opts);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

Corpus read_ingested(const Config& config) {
  const json doc = read_json(artifacts_dir(config) / "corpus.json", ErrorCode::not_ready);
  if (doc.value("format", "") != "discofeed.corpus/1") {
    throw Error(ErrorCode::parse, "corpus.json: unsupported format");
  }
  Corpus c;
  for (const json& r : doc.at("records")) {
    const auto source = parse_solution_source(r.at("source").get<std::string>());
    if (!source) throw Error(ErrorCode::parse, "corpus.json: bad source");
    c.records.push_back({r.at("exercise").get<std::string>(), *source,
                         r.at("text").get<std::string>()});
  }
  c.prompts = doc.at("prompts").get<std::map<std::string, std::string>>();
  return c;
}

std::vector<std::string> built_exercises(const Config& config) {
  const json index = read_json(artifacts_dir(config) / "graphs" / "index.json",
                               ErrorCode::not_ready);
  return require_string_list(index, "exercises");
}

ExerciseGraph read_graph(const Config& config, const std::string& id) {
  return parse_graph(read_file(artifacts_dir(config) / "graphs" / (id + ".json"),
                               ErrorCode::not_ready));
}

const char* split_names[3] = {"train", "validation", "test"};

}  // namespace

StageReport ingest(const Config& config) {
  return staged("ingest", [&] {
    if (config.corpus.empty()) throw Error(ErrorCode::invalid_argument, "no corpus configured");
    Corpus corpus = load_corpus(config.corpus);
    if (!config.prompts.empty()) corpus.prompts = load_prompts(config.prompts);

    StageReport report;
    json records = json::array();
    std::map<std::string, std::array<std::size_t, 2>> counts;
    for (const CorpusRecord& r : corpus.records) {
      records.push_back({{"exercise", r.exercise_id},
                         {"source", std::string(to_string(r.source))},
                         {"text", r.text}});
      ++counts[r.exercise_id][r.source == SolutionSource::reference ? 0 : 1];
    }
    for (const auto& [id, _] : corpus.prompts) {
      if (!counts.count(id)) report.warnings.push_back("prompt for unknown exercise '" + id + "'");
    }
    fs::create_directories(artifacts_dir(config));
    write_json(artifacts_dir(config) / "corpus.json",
               {{"format", "discofeed.corpus/1"}, {"records", records}, {"prompts", corpus.prompts}});
    write_json(artifacts_dir(config) / "config.json", config_to_json(config));

    json per = json::object();
    for (const auto& [id, c] : counts) per[id] = {{"reference", c[0]}, {"student", c[1]}};
    report.summary = {{"records", corpus.records.size()}, {"exercises", per}};
    return report;
  });
}

StageReport build_graphs(const Config& config) {
  return staged("build-graphs", [&] {
    const Corpus corpus = read_ingested(config);
    FeatureExtractor extractor(config, RelationDecoder::zeros(config.dimension));
    RelationTrainingResult rel = train_relations(config, corpus, extractor);
    extractor.set_decoder(rel.decoder);

    StageReport report;
    const fs::path dir = artifacts_dir(config) / "graphs";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_file(artifacts_dir(config) / "relations.json", serialize_relation_decoder(rel.decoder));

    GraphParams params{config.eps, config.min_samples, config.dimension};
    std::vector<std::string> built;
    std::vector<std::string> skipped;
    json per = json::object();
    for (const std::string& id : corpus.exercise_ids()) {
      std::vector<ParsedSolution> solutions;
      bool has_reference = false;
      for (const CorpusRecord& r : corpus.records) {
        if (r.exercise_id != id) continue;
        has_reference = has_reference || r.source == SolutionSource::reference;
        solutions.push_back(extractor.parse(r.text, r.source));
      }
      if (!has_reference) {
        report.warnings.push_back("exercise '" + id + "' has no reference answers; skipped");
        skipped.push_back(id);
        continue;
      }
      const ExerciseGraph g = build_graph(id, solutions, params);
      write_file(dir / (id + ".json"), serialize_graph(g));
      built.push_back(id);
      per[id] = {{"nodes", g.nodes().size()}, {"edges", g.edges().size()}};
    }
    write_json(dir / "index.json", {{"exercises", built}, {"skipped", skipped}});
    report.summary = {{"graphs", per},
                      {"skipped", skipped},
                      {"relation_loss", rel.epoch_losses.empty() ? json(nullptr)
                                                                 : json(rel.epoch_losses.back())}};
    return report;
  });
}

StageReport generate_triplets(const Config& config) {
  return staged("gen-triplets", [&] {
    StageReport report;
    std::vector<std::string> ids;
    std::vector<TripletSample> all;
    SamplingOptions opts;
    opts.random_fraction = config.random_fraction;
    opts.boundary_negatives = config.boundary_negatives;
    for (const std::string& id : built_exercises(config)) {
      const ExerciseGraph g = read_graph(config, id);
      std::vector<TripletSample> samples;
      try {
        samples = generate_samples(g, ids.size(), config.samples_per_exercise,
                                   config.seed + ids.size(), opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::invalid_argument) throw;
        report.warnings.push_back("exercise '" + id + "': " + e.what() + "; skipped");
        continue;
      }
      ids.push_back(id);
      all.insert(all.end(), samples.begin(), samples.end());
    }
    if (ids.empty()) throw Error(ErrorCode::not_ready, "no exercise produced samples");

    const DatasetSplit split = split_dataset(all);
    const fs::path dir = artifacts_dir(config) / "triplets";
    fs::create_directories(dir);
    const std::vector<TripletSample>* parts[3] = {&split.train, &split.validation, &split.test};
    json sizes = json::object();
    for (int k = 0; k < 3; ++k) {
      write_samples((dir / (std::string(split_names[k]) + ".tsv")).string(), *parts[k], ids);
      sizes[split_names[k]] = parts[k]->size();
    }
    write_json(dir / "exercises.json", {{"exercises", ids}});
    report.summary = {{"samples", all.size()}, {"splits", sizes}, {"exercises", ids}};
    return report;
  });
}

StageReport train(const Config& config) {
  return staged("train", [&] {
    const fs::path dir = artifacts_dir(config) / "triplets";
    const auto ids = require_string_list(read_json(dir / "exercises.json", ErrorCode::not_ready),
                                         "exercises");
    std::vector<TripletSample> parts[3];
    for (int k = 0; k < 3; ++k) {
      const fs::path p = dir / (std::string(split_names[k]) + ".tsv");
      if (!fs::exists(p)) throw Error(ErrorCode::not_ready, "missing " + p.string());
      parts[k] = read_samples(p.string(), ids);
    }
    if (parts[0].empty()) throw Error(ErrorCode::empty_input, "training split is empty");
    const std::size_t slots = config.exercise_slots == 0 ? ids.size() : config.exercise_slots;
    if (slots < ids.size()) {
      throw Error(ErrorCode::invalid_argument, "exercise_slots smaller than the exercise count");
    }

    const FeatureExtractor extractor(config, RelationDecoder::zeros(config.dimension));
    TripletClassifier clf(config.dimension, slots, config.hidden_size, config.seed);
    clf.exercise_ids = ids;
    const auto train_set = encode_samples(parts[0], clf, extractor.embedder());
    const auto val_set = encode_samples(parts[1], clf, extractor.embedder());
    const auto test_set = encode_samples(parts[2], clf, extractor.embedder());

    ClassifierTrainOptions opts;
    opts.epochs = config.epochs;
    opts.learning_rate = config.learning_rate;
    opts.batch_size = config.batch_size;
    opts.seed = config.seed;
    const ClassifierMetrics m = train_classifier(clf, train_set, val_set, opts);

    const auto maybe = [](const std::vector<EncodedSample>& s, double v) {
      return s.empty() ? json(nullptr) : json(v);
    };
    json metrics = {
        {"epoch_train_loss", m.epoch_train_loss},
        {"epoch_validation_accuracy", m.epoch_validation_accuracy},
        {"train_accuracy", accuracy(clf, train_set)},
        {"validation_accuracy",
         maybe(val_set, val_set.empty() ? 0.0 : accuracy(clf, val_set))},
        {"test_accuracy", maybe(test_set, test_set.empty() ? 0.0 : accuracy(clf, test_set))},
        {"test_majority_rate",
         maybe(test_set, test_set.empty() ? 0.0 : majority_rate(test_set))},
        {"sizes", {{"train", train_set.size()}, {"validation", val_set.size()},
                   {"test", test_set.size()}}},
    };
    write_file(artifacts_dir(config) / "classifier.json", serialize_classifier(clf));
    write_json(artifacts_dir(config) / "metrics.json", metrics);
    StageReport report;
    report.summary = metrics;
    return report;
  });
}

// ---------------------------------------------------------------------------
// Inference

std::size_t Artifacts::exercise_index(const std::string& id) const {
  const auto& ids = classifier.exercise_ids;
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error(ErrorCode::not_ready, "no trained slot for exercise '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

std::shared_ptr<const Artifacts> load_artifacts(const Config& config) {
  return staged("load", [&] {
    auto a = std::make_shared<Artifacts>();
    a->config = config;
    a->prompts = read_ingested(config).prompts;
    const RelationDecoder decoder = parse_relation_decoder(
        read_file(artifacts_dir(config) / "relations.json", ErrorCode::not_ready));
    a->extractor = std::make_unique<FeatureExtractor>(config, decoder);
    for (const std::string& id : built_exercises(config)) a->graphs.emplace(id, read_graph(config, id));
    a->classifier = parse_classifier(
        read_file(artifacts_dir(config) / "classifier.json", ErrorCode::not_ready));
    if (a->classifier.embedding_dimension() != a->extractor->embedder().dimension()) {
      throw Error(ErrorCode::dimension_mismatch, "classifier and embedder dimensions differ");
    }
    a->templates = config.templates.empty() ? FeedbackTemplates::defaults()
                                            : FeedbackTemplates::load(config.templates);
    return std::shared_ptr<const Artifacts>(std::move(a));
  });
}

Feedback run_feedback(const Artifacts& artifacts, const std::string& exercise_id,
                      const std::string& text, FeedbackMode mode) {
  const auto g = artifacts.graphs.find(exercise_id);
  if (g == artifacts.graphs.end()) {
    throw Error(ErrorCode::not_found, "unknown exercise '" + exercise_id + "'");
  }
  if (text_util::trim(text).empty()) throw Error(ErrorCode::empty_input, "empty attempt");
  const ExerciseGraph& graph = g->second;

  Feedback fb;
  fb.attempt.solution = artifacts.extractor->parse(text, SolutionSource::student);
  fb.attempt.clusters = assign_to_clusters(graph, fb.attempt.solution.embeddings);
  switch (mode) {
    case FeedbackMode::minimal:
      fb.result = minimal_feedback(artifacts.templates);
      break;
    case FeedbackMode::cluster:
      fb.result = cluster_based_feedback(graph, fb.attempt, artifacts.templates);
      break;
    case FeedbackMode::full: {
      const auto scorer = classifier_scorer(artifacts.classifier, artifacts.extractor->embedder(),
                                            artifacts.exercise_index(exercise_id));
      fb.result = full_feedback(graph, fb.attempt, scorer, artifacts.templates,
                                {artifacts.config.alpha, artifacts.config.max_iterations});
      break;
    }
  }
  return fb;
}

namespace {

json optional_category(const std::optional<Category>& c) {
  return c ? json(std::string(to_string(*c))) : json(nullptr);
}

json optional_index(const std::optional<std::size_t>& i) { return i ? json(*i) : json(nullptr); }

}  // namespace

json feedback_to_json(const Artifacts& artifacts, const std::string& exercise_id,
                      const Feedback& fb, double alpha) {
  const ExerciseGraph& graph = artifacts.graphs.at(exercise_id);
  const FeedbackResult& r = fb.result;
  json diagnosis = nullptr;
  if (r.diagnosis) {
    json edits = json::array();
    for (const Edit& e : r.diagnosis->edits) {
      edits.push_back({{"kind", std::string(to_string(e.kind))},
                       {"attempt_position", optional_index(e.attempt_position)},
                       {"candidate_position", optional_index(e.candidate_position)},
                       {"relation", optional_category(e.relation)}});
    }
    diagnosis = {{"kind", std::string(to_string(r.diagnosis->kind))},
                 {"relation", optional_category(r.diagnosis->relation)},
                 {"edits", edits}};
  }

  json edus = json::array();
  const auto& sol = fb.attempt.solution;
  for (std::size_t i = 0; i < sol.edus.size(); ++i) {
    const int c = fb.attempt.clusters[i];
    json rel = nullptr;
    if (i > 0) {
      rel = {{"category", std::string(to_string(sol.relations[i - 1].category))},
             {"explicitness", std::string(to_string(sol.relations[i - 1].explicitness))},
             {"confidence", sol.relations[i - 1].confidence}};
    }
    edus.push_back({
        {"text", sol.edus[i].text},
        {"char_start", sol.edus[i].char_start},
        {"char_end", sol.edus[i].char_end},
        {"cluster", c == outlier ? json(nullptr) : json(c)},
        {"outlier", c == outlier},
        {"reference_cluster",
         c != outlier && graph.node(static_cast<std::size_t>(c)).contains_reference},
        {"relation_in", rel},
    });
  }
  json candidates = json::array();
  for (const CandidateSolution& c : r.top_candidates) {
    candidates.push_back({{"text", c.render()}, {"score", c.score}});
  }

  return {
      {"exercise_id", exercise_id},
      {"mode", std::string(to_string(r.mode))},
      {"kind", r.diagnosis ? json(std::string(to_string(r.diagnosis->kind))) : json(nullptr)},
      {"diagnosis", diagnosis},
      {"correct_edus", r.correct_edus},
      {"message", r.message},
      {"trace",
       {{"iterations", r.trace.iterations},
        {"candidates_scored", r.trace.candidates_scored},
        {"candidate_bound", r.trace.candidate_bound},
        {"attempt_score", r.trace.attempt_score},
        {"top_score", r.trace.top_score}}},
      {"diagnostics", {{"edus", edus}, {"candidates", candidates}, {"alpha", alpha}}},
  };
}

std::vector<EvalRow> load_eval(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open eval file " + path);
  std::vector<EvalRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const auto f = text_util::split(line, '\t');
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 3) throw Error(ErrorCode::parse, where + "expected 3 tab-separated fields");
    const std::string expected(text_util::trim(f[2]));
    if (!parse_diagnosis_kind(expected)) {
      throw Error(ErrorCode::parse, where + "unknown diagnosis kind '" + expected + "'");
    }
    rows.push_back({std::string(text_util::trim(f[0])), std::string(text_util::trim(f[1])),
                    expected});
  }
  return rows;
}

json evaluate_modes(const Artifacts& artifacts, const std::vector<EvalRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::empty_input, "empty evaluation set");
  constexpr FeedbackMode modes[3] = {FeedbackMode::minimal, FeedbackMode::cluster,
                                     FeedbackMode::full};
  struct Tally {
    std::map<std::string, std::size_t> distribution;
    std::size_t no_match = 0;
    double top_sum = 0.0;
    std::size_t searched = 0;
  };
  Tally tally[3];
  std::size_t agree = 0;
  json dump = json::array();
  for (const EvalRow& row : rows) {
    json entry = {{"exercise_id", row.exercise_id}, {"attempt", row.attempt},
                  {"expected", row.expected}};
    for (int m = 0; m < 3; ++m) {
      const Feedback fb = run_feedback(artifacts, row.exercise_id, row.attempt, modes[m]);
      const FeedbackResult& r = fb.result;
      const std::string kind = r.diagnosis ? std::string(to_string(r.diagnosis->kind)) : "none";
      ++tally[m].distribution[kind];
      const bool unmatched = modes[m] == FeedbackMode::minimal ||
                             (modes[m] == FeedbackMode::cluster && r.correct_edus.empty()) ||
                             kind == "NoMatch";
      if (unmatched) ++tally[m].no_match;
      if (modes[m] == FeedbackMode::full) {
        if (kind != "NoMatch") {
          tally[m].top_sum += r.trace.top_score;
          ++tally[m].searched;
        }
        if (kind == row.expected) ++agree;
        entry["full_kind"] = kind;
      }
      entry[std::string(to_string(modes[m]))] = r.message;
    }
    dump.push_back(std::move(entry));
  }

  const double n = static_cast<double>(rows.size());
  json per = json::object();
  for (int m = 0; m < 3; ++m) {
    json mean = nullptr;
    if (modes[m] == FeedbackMode::full && tally[m].searched > 0) {
      mean = tally[m].top_sum / static_cast<double>(tally[m].searched);
    }
    per[std::string(to_string(modes[m]))] = {
        {"rows", rows.size()},
        {"distribution", tally[m].distribution},
        {"no_match_rate", static_cast<double>(tally[m].no_match) / n},
        {"mean_top_score", mean},
    };
  }
  // Most frequent full-mode kind; ties go to the earlier kind.
  std::string top_kind;
  std::size_t top_count = 0;
  for (DiagnosisKind k : {DiagnosisKind::Missing, DiagnosisKind::Excess,
                          DiagnosisKind::CorrectRelation, DiagnosisKind::IncorrectRelation,
                          DiagnosisKind::AlreadyCorrect, DiagnosisKind::NoMatch}) {
    const auto& dist = tally[2].distribution;
    const auto it = dist.find(std::string(to_string(k)));
    if (it != dist.end() && it->second > top_count) {
      top_kind = it->first;
      top_count = it->second;
    }
  }
  return {{"attempts", rows.size()},
          {"modes", per},
          {"most_frequent_full", top_kind.empty() ? json(nullptr) : json(top_kind)},
          {"full_expected_agreement", static_cast<double>(agree) / n},
          {"rows", dump}};
}

// ---------------------------------------------------------------------------
// Sessions

json SessionStore::create(const std::string& exercise_id, FeedbackMode mode) {
  if (!artifacts_->graphs.count(exercise_id)) {
    throw Error(ErrorCode::not_found, "unknown exercise '" + exercise_id + "'");
  }
  auto s = std::make_shared<Session>();
  s->exercise_id = exercise_id;
  s->mode = mode;
  {
    std::lock_guard<std::mutex> g(lock_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_.emplace(s->id, s);
  }
  return {{"session_id", s->id}, {"exercise_id", exercise_id},
          {"mode", std::string(to_string(mode))}};
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::lock_guard<std::mutex> g(lock_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
  return it->second;
}

json SessionStore::attempt(const std::string& session_id, const std::string& text) {
  const auto s = find(session_id);
  if (text_util::trim(text).empty()) throw Error(ErrorCode::empty_input, "empty attempt");
  const Feedback fb = run_feedback(*artifacts_, s->exercise_id, text, s->mode);
  json result = feedback_to_json(*artifacts_, s->exercise_id, fb, artifacts_->config.alpha);
  std::lock_guard<std::mutex> g(s->lock);
  result["session_id"] = s->id;
  result["attempt_index"] = s->history.size();
  s->history.push_back({{"text", text}, {"result", result}});
  return result;
}

json SessionStore::get(const std::string& session_id) const {
  const auto s = find(session_id);
  std::lock_guard<std::mutex> g(s->lock);
  return {{"session_id", s->id}, {"exercise_id", s->exercise_id},
          {"mode", std::string(to_string(s->mode))}, {"history", s->history}};
}

}  // namespace discofeed
