#include "discofeed/relations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

std::string_view to_string(Explicitness e) noexcept {
  return e == Explicitness::Explicit ? "Explicit" : "Implicit";
}

std::optional<Explicitness> parse_explicitness(std::string_view name) noexcept {
  if (name == "Explicit") return Explicitness::Explicit;
  if (name == "Implicit") return Explicitness::Implicit;
  return std::nullopt;
}

RelationDecoder RelationDecoder::zeros(std::size_t embedding_dimension) {
  if (embedding_dimension == 0) {
    throw Error(ErrorCode::invalid_argument, "embedding dimension must be positive");
  }
  RelationDecoder d;
  d.dimension_ = embedding_dimension;
  const std::size_t n = category_count * 2 * embedding_dimension + category_count;
  d.params_[0].assign(n, 0.0);
  d.params_[1].assign(n, 0.0);
  return d;
}

namespace {

void check_pair(const RelationDecoder& d, const EmbeddingVector& left,
                const EmbeddingVector& right) {
  if (!d.ready()) throw Error(ErrorCode::not_ready, "relation decoder is not trained");
  if (left.dimension() != d.embedding_dimension() ||
      right.dimension() != d.embedding_dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
  }
  if (!is_unit_norm(left) || !is_unit_norm(right)) {
    throw Error(ErrorCode::invalid_argument, "relation inputs must be unit-normalized");
  }
}

Probabilities softmax_logits(const std::vector<double>& params, std::size_t d,
                             const EmbeddingVector& left, const EmbeddingVector& right) {
  const std::size_t in = 2 * d;
  Probabilities logits{};
  for (std::size_t k = 0; k < category_count; ++k) {
    const double* row = params.data() + k * in;
    double z = params[category_count * in + k];
    for (std::size_t i = 0; i < d; ++i) z += row[i] * left[i];
    for (std::size_t i = 0; i < d; ++i) z += row[d + i] * right[i];
    logits[k] = z;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - m);
    sum += z;
  }
  for (double& z : logits) z /= sum;
  return logits;
}

}  // namespace

Probabilities RelationDecoder::probabilities(Explicitness branch, const EmbeddingVector& left,
                                             const EmbeddingVector& right) const {
  check_pair(*this, left, right);
  return softmax_logits(params_[index(branch)], dimension_, left, right);
}

Category argmax_category(const Probabilities& p) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < category_count; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return static_cast<Category>(best);
}

std::optional<Cue> detect_cue(std::string_view left, std::string_view right,
                              const CueLexicon& lex) {
  const auto lookup = [&](const std::string& word) -> std::optional<Cue> {
    auto it = lex.relation_cues.find(text_util::to_lower(word));
    if (it == lex.relation_cues.end()) return std::nullopt;
    return Cue{it->first, it->second};
  };
  const std::vector<Token> right_tokens = tokenize(right);
  if (!right_tokens.empty()) {
    if (auto cue = lookup(right_tokens.front().text)) return cue;
  }
  const std::vector<Token> left_tokens = tokenize(left);
  for (auto it = left_tokens.rbegin(); it != left_tokens.rend(); ++it) {
    if (it->text.size() == 1 && !std::isalnum(static_cast<unsigned char>(it->text[0]))) continue;
    return lookup(it->text);
  }
  return std::nullopt;
}

std::optional<Cue> detect_cue(const Edu& left, const Edu& right, const CueLexicon& lex) {
  return detect_cue(left.text, right.text, lex);
}

DiscourseRelation classify_relation(const RelationDecoder& decoder, const EmbeddingVector& left,
                                    const EmbeddingVector& right, const std::optional<Cue>& cue) {
  if (cue) {
    const Probabilities p = decoder.probabilities(Explicitness::Explicit, left, right);
    return {cue->category, Explicitness::Explicit, p[static_cast<std::size_t>(cue->category)]};
  }
  const Probabilities p = decoder.probabilities(Explicitness::Implicit, left, right);
  const Category c = argmax_category(p);
  return {c, Explicitness::Implicit, p[static_cast<std::size_t>(c)]};
}

namespace {

std::vector<const RelationSample*> routed(const std::vector<RelationSample>& samples,
                                          Explicitness branch) {
  std::vector<const RelationSample*> out;
  for (const RelationSample& s : samples) {
    if (s.explicitness == branch) out.push_back(&s);
  }
  return out;
}

// Accumulates the gradient of the summed loss over `batch` into `grad` and
// returns the summed loss.
double accumulate_gradient(const std::vector<double>& params, std::size_t d,
                           std::span<const RelationSample* const> batch,
                           std::vector<double>& grad) {
  const std::size_t in = 2 * d;
  double loss = 0.0;
  for (const RelationSample* s : batch) {
    const Probabilities p = softmax_logits(params, d, s->left, s->right);
    const std::size_t y = static_cast<std::size_t>(s->category);
    loss -= std::log(std::max(p[y], 1e-300));
    for (std::size_t k = 0; k < category_count; ++k) {
      const double delta = p[k] - (k == y ? 1.0 : 0.0);
      double* row = grad.data() + k * in;
      for (std::size_t i = 0; i < d; ++i) row[i] += delta * s->left[i];
      for (std::size_t i = 0; i < d; ++i) row[d + i] += delta * s->right[i];
      grad[category_count * in + k] += delta;
    }
  }
  return loss;
}

std::size_t sample_dimension(const std::vector<RelationSample>& samples) {
  const std::size_t d = samples.front().left.dimension();
  for (const RelationSample& s : samples) {
    if (s.left.dimension() != d || s.right.dimension() != d) {
      throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
    }
    if (!is_unit_norm(s.left) || !is_unit_norm(s.right)) {
      throw Error(ErrorCode::invalid_argument, "relation inputs must be unit-normalized");
    }
  }
  return d;
}

}  // namespace

double relation_loss(const RelationDecoder& decoder, Explicitness branch,
                     const std::vector<RelationSample>& samples) {
  const auto batch = routed(samples, branch);
  if (batch.empty()) return 0.0;
  std::vector<double> scratch(decoder.parameters(branch).size(), 0.0);
  return accumulate_gradient(decoder.parameters(branch), decoder.embedding_dimension(), batch,
                             scratch) /
         static_cast<double>(batch.size());
}

std::vector<double> relation_loss_gradient(const RelationDecoder& decoder, Explicitness branch,
                                           const std::vector<RelationSample>& samples) {
  const auto batch = routed(samples, branch);
  std::vector<double> grad(decoder.parameters(branch).size(), 0.0);
  if (batch.empty()) return grad;
  accumulate_gradient(decoder.parameters(branch), decoder.embedding_dimension(), batch, grad);
  for (double& g : grad) g /= static_cast<double>(batch.size());
  return grad;
}

RelationTrainingResult train_relation_decoder(const std::vector<RelationSample>& samples,
                                              const TrainOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::empty_input, "no relation training samples");
  if (options.epochs < 0 || options.batch_size == 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid relation training options");
  }
  const std::size_t d = sample_dimension(samples);

  RelationTrainingResult result;
  result.decoder = RelationDecoder::zeros(d);
  std::mt19937_64 rng(options.seed);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (Explicitness branch : {Explicitness::Explicit, Explicitness::Implicit}) {
      auto batch_all = routed(samples, branch);
      if (batch_all.empty()) continue;
      std::shuffle(batch_all.begin(), batch_all.end(), rng);
      std::vector<double>& params = result.decoder.parameters(branch);
      std::vector<double> grad(params.size());
      for (std::size_t start = 0; start < batch_all.size(); start += options.batch_size) {
        const std::size_t len = std::min(options.batch_size, batch_all.size() - start);
        std::fill(grad.begin(), grad.end(), 0.0);
        accumulate_gradient(params, d,
                            std::span<const RelationSample* const>(batch_all).subspan(start, len),
                            grad);
        const double step = options.learning_rate / static_cast<double>(len);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= step * grad[i];
      }
    }
    double total = 0.0;
    for (Explicitness branch : {Explicitness::Explicit, Explicitness::Implicit}) {
      const auto n = routed(samples, branch).size();
      total += relation_loss(result.decoder, branch, samples) * static_cast<double>(n);
    }
    result.epoch_losses.push_back(total / static_cast<double>(samples.size()));
  }
  return result;
}

std::vector<std::optional<Category>> label_boundary_relations(const std::vector<Edu>& edus,
                                                              const CueLexicon& lex) {
  if (edus.size() < 2) {
    throw Error(ErrorCode::invalid_argument, "need at least two EDUs to label boundaries");
  }
  std::vector<std::optional<Category>> out;
  out.reserve(edus.size() - 1);
  for (std::size_t i = 0; i + 1 < edus.size(); ++i) {
    const auto cue = detect_cue(edus[i], edus[i + 1], lex);
    out.push_back(cue ? std::optional<Category>(cue->category) : std::nullopt);
  }
  return out;
}

std::vector<RelationExample> load_relation_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open relation file: " + path);
  std::vector<RelationExample> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const auto f = text_util::split(line, '\t');
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 4) throw Error(ErrorCode::parse, where + "expected 4 tab-separated fields");
    const auto ex = parse_explicitness(f[2]);
    const auto cat = parse_category(f[3]);
    if (!ex) throw Error(ErrorCode::parse, where + "unknown explicitness '" + f[2] + "'");
    if (!cat) throw Error(ErrorCode::parse, where + "unknown category '" + f[3] + "'");
    if (text_util::trim(f[0]).empty() || text_util::trim(f[1]).empty()) {
      throw Error(ErrorCode::parse, where + "empty unit");
    }
    rows.push_back({f[0], f[1], *ex, *cat});
  }
  return rows;
}

}  // namespace discofeed
