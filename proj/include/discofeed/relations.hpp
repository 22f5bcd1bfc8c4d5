#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discofeed/embeddings.hpp"
#include "discofeed/lexicon.hpp"
#include "discofeed/segmentation.hpp"

namespace discofeed {

enum class Explicitness { Explicit = 0, Implicit = 1 };

std::string_view to_string(Explicitness e) noexcept;
std::optional<Explicitness> parse_explicitness(std::string_view name) noexcept;

struct DiscourseRelation {
  Category category = Category::Temporal;
  Explicitness explicitness = Explicitness::Implicit;
  double confidence = 0.0;  // decoder softmax probability of `category`
};

struct Cue {
  std::string word;
  Category category;
};

using Probabilities = std::array<double, category_count>;

// Two softmax-linear decoders over the concatenated pair [left, right], one
// for cue-marked (explicit) boundaries and one for the rest.
class RelationDecoder {
 public:
  RelationDecoder() = default;  // not ready; classify() throws

  static RelationDecoder zeros(std::size_t embedding_dimension);

  bool ready() const noexcept { return dimension_ != 0; }
  std::size_t embedding_dimension() const noexcept { return dimension_; }
  std::size_t input_dimension() const noexcept { return 2 * dimension_; }

  // Flat parameters of one branch: row-major weights (4 x 2d) followed by
  // the 4 biases.
  std::vector<double>& parameters(Explicitness branch) { return params_[index(branch)]; }
  const std::vector<double>& parameters(Explicitness branch) const {
    return params_[index(branch)];
  }

  Probabilities probabilities(Explicitness branch, const EmbeddingVector& left,
                              const EmbeddingVector& right) const;

 private:
  static std::size_t index(Explicitness e) { return static_cast<std::size_t>(e); }

  std::size_t dimension_ = 0;
  std::array<std::vector<double>, 2> params_;
};

// argmax with ties resolved toward the earlier category.
Category argmax_category(const Probabilities& p) noexcept;

// Looks for a cue word at the start of `right` or, failing that, at the end of
// `left` (ignoring trailing punctuation).
std::optional<Cue> detect_cue(const Edu& left, const Edu& right, const CueLexicon& lex);
std::optional<Cue> detect_cue(std::string_view left, std::string_view right,
                              const CueLexicon& lex);

// With a cue, the category is the cue's and the explicit decoder supplies the
// confidence. Without one, the implicit decoder decides.
DiscourseRelation classify_relation(const RelationDecoder& decoder, const EmbeddingVector& left,
                                    const EmbeddingVector& right, const std::optional<Cue>& cue);

struct RelationSample {
  EmbeddingVector left;
  EmbeddingVector right;
  Explicitness explicitness;
  Category category;
};

struct TrainOptions {
  int epochs = 30;
  double learning_rate = 0.5;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;
};

struct RelationTrainingResult {
  RelationDecoder decoder;
  std::vector<double> epoch_losses;  // mean loss over all samples after each epoch
};

// Mini-batch gradient descent on softmax cross-entropy, branch by branch.
// A branch without samples keeps zero weights.
RelationTrainingResult train_relation_decoder(const std::vector<RelationSample>& samples,
                                              const TrainOptions& options);

// Mean cross-entropy of one branch over the samples routed to it.
double relation_loss(const RelationDecoder& decoder, Explicitness branch,
                     const std::vector<RelationSample>& samples);

// d(loss)/d(parameters(branch)) for the same loss.
std::vector<double> relation_loss_gradient(const RelationDecoder& decoder, Explicitness branch,
                                           const std::vector<RelationSample>& samples);

// Cue-heuristic labels for every adjacent boundary; nullopt where no cue.
std::vector<std::optional<Category>> label_boundary_relations(const std::vector<Edu>& edus,
                                                              const CueLexicon& lex);

// `<left>\t<right>\t<Explicit|Implicit>\t<category>` rows.
struct RelationExample {
  std::string left;
  std::string right;
  Explicitness explicitness;
  Category category;
};
std::vector<RelationExample> load_relation_examples(const std::string& path);

}  // namespace discofeed
