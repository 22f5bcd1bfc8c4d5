#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discofeed/graph.hpp"
#include "discofeed/triplet.hpp"

namespace discofeed {

// One position in a candidate solution.
struct Element {
  enum class Kind {
    cluster,      // matched to a graph node
    passthrough,  // unmatched student unit, rendered but never scored
    start,
    terminal,
  };
  Kind kind = Kind::cluster;
  int cluster = outlier;
  std::string text;  // original unit text (student's own or a node representative)
  std::optional<Category> relation_in;
  // Index of the attempt unit this element was carried from, if any.
  std::optional<std::size_t> origin;

  static Element start_token() { return {Kind::start, outlier, {}, std::nullopt, std::nullopt}; }
  static Element terminal_token() {
    return {Kind::terminal, outlier, {}, std::nullopt, std::nullopt};
  }
  bool sentinel() const noexcept { return kind == Kind::start || kind == Kind::terminal; }
  bool scored() const noexcept { return kind != Kind::passthrough; }
};

struct CandidateSolution {
  std::vector<Element> elements;
  double score = 0.0;

  // Units joined by spaces with trailing punctuation trimmed; sentinels as
  // <START> / <TERMINAL>.
  std::string render() const;
  // Identity used for de-duplication.
  std::string key() const;
};

// A student answer after parsing and cluster matching.
struct ParsedAttempt {
  ParsedSolution solution;
  std::vector<int> clusters;  // per unit, or `outlier`
};

std::vector<Element> attempt_elements(const ParsedAttempt& attempt);

// Neighbour swaps, successor/predecessor insertions, and boundary variants
// around every matched element. De-duplicated; never contains `current`.
std::vector<CandidateSolution> generate_candidates(const ExerciseGraph& graph,
                                                   const std::vector<Element>& current);

// Mean transition score over consecutive scored elements. A lone unit with no
// sentinel is scored as <START> u <TERMINAL>.
double score_candidate(const TripletClassifier& classifier, const EmbeddingProvider& provider,
                       const CandidateSolution& candidate, std::size_t exercise);

// The (left, right) pairs score_candidate averages over.
std::vector<std::pair<Side, Side>> scored_pairs(const CandidateSolution& candidate);

// Adds <START>/<TERMINAL> where the candidate is open.
CandidateSolution closed(const CandidateSolution& candidate);

// Scores a closed candidate; `iteration` is 0 for the attempt itself and
// 1..max_iterations for generated candidates.
using CandidateScorer = std::function<double(const CandidateSolution&, int iteration)>;

struct LocalSearchOptions {
  double alpha = 0.95;
  int max_iterations = 2;
};

struct SearchTrace {
  int iterations = 0;
  std::size_t candidates_scored = 0;
  std::size_t candidate_bound = 0;  // sum of per-iteration fan-out bounds
  double attempt_score = 0.0;
  double top_score = 0.0;
};

struct LocalSearchResult {
  bool no_match = false;
  bool already_correct = false;
  std::optional<CandidateSolution> first_best;
  std::optional<CandidateSolution> final_best;
  std::vector<CandidateSolution> first_iteration;  // sorted by score, descending
  SearchTrace trace;
};

// Upper bound on generate_candidates output size for `current`.
std::size_t candidate_fanout_bound(const ExerciseGraph& graph, const std::vector<Element>& current);

LocalSearchResult local_search(const ExerciseGraph& graph, const std::vector<Element>& attempt,
                               const CandidateScorer& scorer, const LocalSearchOptions& options);

enum class DiagnosisKind { Missing, Excess, CorrectRelation, IncorrectRelation, AlreadyCorrect, NoMatch };

std::string_view to_string(DiagnosisKind k) noexcept;
std::optional<DiagnosisKind> parse_diagnosis_kind(std::string_view name) noexcept;

struct Edit {
  DiagnosisKind kind;
  std::optional<std::size_t> attempt_position;    // index into attempt elements
  std::optional<std::size_t> candidate_position;  // index into candidate elements
  std::optional<Category> relation;
};

struct EditDiagnosis {
  DiagnosisKind kind = DiagnosisKind::NoMatch;
  std::optional<Category> relation;
  std::vector<Edit> edits;
};

// Aligns matched clusters by longest common subsequence; sentinels are
// ignored and an unmatched student unit is Excess only if the candidate
// drops it. Primary kind precedence: Missing >
// IncorrectRelation > CorrectRelation > Excess; no edits gives AlreadyCorrect.
EditDiagnosis diagnose(const std::vector<Element>& attempt, const CandidateSolution& candidate);

class FeedbackTemplates {
 public:
  static const std::vector<std::string>& required_keys();
  static FeedbackTemplates defaults();
  // JSON object of key -> string; every required key must be present.
  static FeedbackTemplates parse(std::string_view json_text);
  static FeedbackTemplates load(const std::string& path);

  const std::string& get(const std::string& key) const;

 private:
  std::map<std::string, std::string> entries_;
};

std::string render_feedback(const EditDiagnosis& diagnosis,
                            const std::vector<std::string>& correct_edus,
                            const FeedbackTemplates& templates);

enum class FeedbackMode { minimal, cluster, full };
std::string_view to_string(FeedbackMode m) noexcept;
std::optional<FeedbackMode> parse_feedback_mode(std::string_view name) noexcept;

struct FeedbackResult {
  FeedbackMode mode = FeedbackMode::full;
  std::optional<EditDiagnosis> diagnosis;  // absent for the baselines
  std::vector<std::string> correct_edus;
  std::string message;
  SearchTrace trace;
  std::vector<CandidateSolution> top_candidates;  // at most five
};

// Student units matched to reference-bearing clusters, trailing punctuation trimmed.
std::vector<std::string> correct_edus(const ExerciseGraph& graph, const ParsedAttempt& attempt);

FeedbackResult minimal_feedback(const FeedbackTemplates& templates);
FeedbackResult cluster_based_feedback(const ExerciseGraph& graph, const ParsedAttempt& attempt,
                                      const FeedbackTemplates& templates);
FeedbackResult full_feedback(const ExerciseGraph& graph, const ParsedAttempt& attempt,
                             const CandidateScorer& scorer, const FeedbackTemplates& templates,
                             const LocalSearchOptions& options);

// Classifier-backed scorer for local_search.
CandidateScorer classifier_scorer(const TripletClassifier& classifier,
                                  const EmbeddingProvider& provider, std::size_t exercise);

}  // namespace discofeed
