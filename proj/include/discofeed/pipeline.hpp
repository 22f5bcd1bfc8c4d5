#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "discofeed/embeddings.hpp"
#include "discofeed/feedback.hpp"
#include "discofeed/graph.hpp"
#include "discofeed/lexicon.hpp"
#include "discofeed/relations.hpp"
#include "discofeed/triplet.hpp"

namespace discofeed {

inline constexpr const char* config_env_var = "DISCOFEED_CONFIG";

struct Config {
  // Inputs. Relative paths resolve against the config file's directory.
  std::string corpus;
  std::string prompts;         // optional `<exercise_id>\t<prompt>` rows
  std::string embedding_store; // optional; hash embedder otherwise
  std::string boundary_labels; // optional external segmenter output
  std::string relation_data;   // optional relation training rows
  std::string templates;       // optional; built-in wording otherwise
  std::string artifacts = "artifacts";

  std::size_t dimension = 128;
  double eps = 0.15;
  std::size_t min_samples = 2;
  double alpha = 0.95;
  int max_iterations = 2;

  std::size_t hidden_size = 200;
  int epochs = 2;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::size_t samples_per_exercise = 2000;
  // One-hot width; 0 means one slot per exercise with a graph.
  std::size_t exercise_slots = 0;
  double random_fraction = 0.2;
  bool boundary_negatives = true;

  int relation_epochs = 30;
  double relation_learning_rate = 0.5;

  std::uint64_t seed = 13;
};

nlohmann::json config_to_json(const Config& c);
// Unknown keys are rejected so typos do not silently fall back to defaults.
Config config_from_json(const nlohmann::json& j, const std::string& base_dir);
Config load_config(const std::string& path);
// Explicit path, else $DISCOFEED_CONFIG, else nullopt.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

struct CorpusRecord {
  std::string exercise_id;
  SolutionSource source = SolutionSource::student;
  std::string text;
};

struct Corpus {
  std::vector<CorpusRecord> records;
  std::map<std::string, std::string> prompts;

  // Sorted, unique.
  std::vector<std::string> exercise_ids() const;
};

Corpus load_corpus(const std::string& path);
std::map<std::string, std::string> load_prompts(const std::string& path);

// Segmenter, embedder, lexicon and relation decoder shared by every stage.
class FeatureExtractor {
 public:
  FeatureExtractor(const Config& config, RelationDecoder decoder);

  const EmbeddingProvider& embedder() const noexcept { return *embedder_; }
  const CueLexicon& lexicon() const noexcept { return lexicon_; }
  const RelationDecoder& decoder() const noexcept { return decoder_; }
  void set_decoder(RelationDecoder d) { decoder_ = std::move(d); }

  std::vector<Edu> segment(const std::string& text) const;
  ParsedSolution parse(const std::string& text, SolutionSource source) const;

 private:
  CueLexicon lexicon_;
  std::shared_ptr<const EmbeddingProvider> embedder_;
  std::map<std::string, std::vector<int>> labels_;
  RelationDecoder decoder_;
};

std::string serialize_relation_decoder(const RelationDecoder& d);
RelationDecoder parse_relation_decoder(std::string_view document);

// Relation decoder from the configured relation file, or from cue-labelled
// boundaries of the corpus itself.
RelationTrainingResult train_relations(const Config& config, const Corpus& corpus,
                                       const FeatureExtractor& extractor);

struct StageReport {
  std::vector<std::string> warnings;
  nlohmann::json summary;
};

// Each stage reads the previous stage's artifacts from config.artifacts.
StageReport ingest(const Config& config);
StageReport build_graphs(const Config& config);
StageReport generate_triplets(const Config& config);
StageReport train(const Config& config);

// Everything inference needs, loaded once and never modified.
struct Artifacts {
  Config config;
  std::map<std::string, std::string> prompts;
  std::map<std::string, ExerciseGraph> graphs;
  std::unique_ptr<FeatureExtractor> extractor;
  TripletClassifier classifier;
  FeedbackTemplates templates;

  std::size_t exercise_index(const std::string& id) const;
};

// Throws Error(not_ready) when a stage has not been run.
std::shared_ptr<const Artifacts> load_artifacts(const Config& config);

struct Feedback {
  ParsedAttempt attempt;
  FeedbackResult result;
};

Feedback run_feedback(const Artifacts& artifacts, const std::string& exercise_id,
                      const std::string& text, FeedbackMode mode);

nlohmann::json feedback_to_json(const Artifacts& artifacts, const std::string& exercise_id,
                                const Feedback& feedback, double alpha);

struct EvalRow {
  std::string exercise_id;
  std::string attempt;
  std::string expected;
};
std::vector<EvalRow> load_eval(const std::string& path);

// Per-mode diagnosis distribution, NoMatch rate, mean top score and a
// side-by-side message dump.
nlohmann::json evaluate_modes(const Artifacts& artifacts, const std::vector<EvalRow>& rows);

class SessionStore {
 public:
  explicit SessionStore(std::shared_ptr<const Artifacts> artifacts)
      : artifacts_(std::move(artifacts)) {}

  nlohmann::json create(const std::string& exercise_id, FeedbackMode mode);
  nlohmann::json attempt(const std::string& session_id, const std::string& text);
  nlohmann::json get(const std::string& session_id) const;

 private:
  struct Session {
    std::string id;
    std::string exercise_id;
    FeedbackMode mode = FeedbackMode::full;
    nlohmann::json history = nlohmann::json::array();
    mutable std::mutex lock;
  };

  std::shared_ptr<Session> find(const std::string& id) const;

  std::shared_ptr<const Artifacts> artifacts_;
  mutable std::mutex lock_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace discofeed
