#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discofeed/embeddings.hpp"
#include "discofeed/graph.hpp"

namespace discofeed {

// One side of a transition: a unit's text or a boundary sentinel.
struct Side {
  enum class Kind { unit, start, terminal };
  Kind kind = Kind::unit;
  std::string text;

  static Side start() { return {Kind::start, {}}; }
  static Side terminal() { return {Kind::terminal, {}}; }
  static Side unit(std::string text) { return {Kind::unit, std::move(text)}; }

  // `<START>` / `<TERMINAL>` for sentinels.
  std::string serialized() const;

  friend auto operator<=>(const Side&, const Side&) = default;
};

inline constexpr std::string_view start_marker = "<START>";
inline constexpr std::string_view terminal_marker = "<TERMINAL>";

enum class SampleKind { transition, start_boundary, terminal_boundary };

// How a transition negative was drawn.
enum class NegativeBranch {
  none,              // positives and boundary samples
  relation_matched,  // non-successor with an incoming edge matching one of C's
  random,            // the unconstrained share, may hit a true successor
  exclusion_fallback // relation match impossible: any non-successor
};

struct TripletSample {
  Side left;
  Side right;
  std::size_t exercise = 0;
  bool positive = false;
  SampleKind kind = SampleKind::transition;
  NegativeBranch branch = NegativeBranch::none;
  // Set on random-branch negatives that happen to be real graph transitions.
  bool coincidental_successor = false;
  std::size_t left_cluster = 0;   // meaningful for unit sides
  std::size_t right_cluster = 0;
};

struct SamplingOptions {
  double random_fraction = 0.2;
  // Also emit (<START>, E_C) for non-start C and (E_C, <TERMINAL>) for
  // non-terminal C as negatives.
  bool boundary_negatives = true;
};

// n/2 positives and n/2 negatives from one graph; deterministic in `seed`.
std::vector<TripletSample> generate_samples(const ExerciseGraph& graph, std::size_t exercise,
                                            std::size_t n, std::uint64_t seed,
                                            const SamplingOptions& options = {});

struct DatasetSplit {
  std::vector<TripletSample> train;
  std::vector<TripletSample> validation;
  std::vector<TripletSample> test;
};

// Duplicates (same left, right, exercise, label) stay together; the three
// largest groups go to train, the rest are placed largest-first into the
// split furthest below its 80/10/10 share.
DatasetSplit split_dataset(const std::vector<TripletSample>& samples);

std::string sample_group_key(const TripletSample& s);

// `<left>\t<right>\t<exercise id>\t<0|1>` rows; `exercise_ids` maps the
// sample's exercise index to its id and back.
void write_samples(const std::string& path, const std::vector<TripletSample>& samples,
                   const std::vector<std::string>& exercise_ids);
std::vector<TripletSample> read_samples(const std::string& path,
                                        const std::vector<std::string>& exercise_ids);

// Input to the network for one side: the unit embedding or a reserved
// sentinel vector.
struct EncodedSample {
  EmbeddingVector left;
  EmbeddingVector right;
  std::size_t exercise = 0;
  int label = 0;  // 1 = valid transition
};

// Two-layer network over [left, right, one_hot(exercise)]: tanh hidden layer,
// softmax over {invalid, valid}.
class TripletClassifier {
 public:
  TripletClassifier() = default;
  TripletClassifier(std::size_t embedding_dimension, std::size_t exercise_slots,
                    std::size_t hidden_size, std::uint64_t seed);

  bool ready() const noexcept { return embedding_dimension_ != 0; }
  std::size_t embedding_dimension() const noexcept { return embedding_dimension_; }
  std::size_t exercise_slots() const noexcept { return exercise_slots_; }
  std::size_t hidden_size() const noexcept { return hidden_size_; }
  std::size_t input_dimension() const noexcept {
    return 2 * embedding_dimension_ + exercise_slots_;
  }

  const EmbeddingVector& start_vector() const noexcept { return start_vector_; }
  const EmbeddingVector& terminal_vector() const noexcept { return terminal_vector_; }

  // Layout: W1 (hidden x input), b1 (hidden), W2 (2 x hidden), b2 (2).
  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  void zero_parameters();

  std::array<double, 2> forward(const EmbeddingVector& left, const EmbeddingVector& right,
                                std::size_t exercise) const;
  double score(const EmbeddingVector& left, const EmbeddingVector& right,
               std::size_t exercise) const {
    return forward(left, right, exercise)[1];
  }

  const EmbeddingVector& encode(const Side& side, const EmbeddingProvider& provider,
                                EmbeddingVector& scratch) const;
  double score(const EmbeddingProvider& provider, const Side& left, const Side& right,
               std::size_t exercise) const;

  // Mean cross-entropy and its gradient over a batch.
  double loss(std::span<const EncodedSample> batch) const;
  double loss_and_gradient(std::span<const EncodedSample> batch,
                           std::vector<double>& gradient) const;

  // Exercise id for each one-hot slot that is in use.
  std::vector<std::string> exercise_ids;

  // Restores a classifier from persisted parts; shapes are validated.
  static TripletClassifier from_parts(std::size_t embedding_dimension, std::size_t exercise_slots,
                                      std::size_t hidden_size, std::vector<double> parameters,
                                      EmbeddingVector start_vector,
                                      EmbeddingVector terminal_vector);

 private:
  void check_inputs(const EmbeddingVector& left, const EmbeddingVector& right,
                    std::size_t exercise) const;

  std::size_t embedding_dimension_ = 0;
  std::size_t exercise_slots_ = 0;
  std::size_t hidden_size_ = 0;
  std::vector<double> params_;
  EmbeddingVector start_vector_;
  EmbeddingVector terminal_vector_;
};

std::vector<EncodedSample> encode_samples(const std::vector<TripletSample>& samples,
                                          const TripletClassifier& classifier,
                                          const EmbeddingProvider& provider);

struct ClassifierTrainOptions {
  int epochs = 2;
  double learning_rate = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 13;
};

struct ClassifierMetrics {
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_validation_accuracy;
};

// Mini-batch gradient descent; deterministic given the options.
ClassifierMetrics train_classifier(TripletClassifier& classifier,
                                   const std::vector<EncodedSample>& train,
                                   const std::vector<EncodedSample>& validation,
                                   const ClassifierTrainOptions& options);

double accuracy(const TripletClassifier& classifier, const std::vector<EncodedSample>& samples);
double majority_rate(const std::vector<EncodedSample>& samples);

std::string serialize_classifier(const TripletClassifier& classifier);
TripletClassifier parse_classifier(std::string_view document);

}  // namespace discofeed
