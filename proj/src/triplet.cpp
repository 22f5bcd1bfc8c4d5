#include "discofeed/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

using json = nlohmann::json;

std::string Side::serialized() const {
  switch (kind) {
    case Kind::start: return std::string(start_marker);
    case Kind::terminal: return std::string(terminal_marker);
    case Kind::unit: return text;
  }
  return text;
}

namespace {

class Sampler {
 public:
  Sampler(const ExerciseGraph& graph, std::uint64_t seed) : graph_(graph), rng_(seed) {
    std::vector<double> sizes;
    for (const ClusterNode& n : graph.nodes()) sizes.push_back(static_cast<double>(n.members.size()));
    by_size_ = std::discrete_distribution<std::size_t>(sizes.begin(), sizes.end());
  }

  std::size_t cluster_by_size() { return by_size_(rng_); }

  std::size_t uniform_cluster() { return uniform_index(graph_.nodes().size()); }

  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  double unit_interval() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  // E_C: a uniformly chosen member.
  Side member_of(std::size_t cluster) {
    const auto& members = graph_.node(cluster).members;
    return Side::unit(members[uniform_index(members.size())].text);
  }

  std::optional<std::size_t> weighted_successor(std::size_t cluster) {
    const auto succ = graph_.successors(cluster);
    if (succ.empty()) return std::nullopt;
    std::vector<double> w;
    for (std::size_t s : succ) w.push_back(static_cast<double>(graph_.edge_weight(cluster, s)));
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return succ[pick(rng_)];
  }

 private:
  const ExerciseGraph& graph_;
  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> by_size_;
};

}  // namespace

std::vector<TripletSample> generate_samples(const ExerciseGraph& graph, std::size_t exercise,
                                            std::size_t n, std::uint64_t seed,
                                            const SamplingOptions& options) {
  if (n == 0 || n % 2 != 0) {
    throw Error(ErrorCode::invalid_argument, "sample count must be positive and even");
  }
  const auto& nodes = graph.nodes();
  const bool any_boundary = std::any_of(nodes.begin(), nodes.end(), [](const ClusterNode& c) {
    return c.is_start || c.is_terminal;
  });
  if (nodes.empty() || (graph.edges().empty() && !any_boundary)) {
    throw Error(ErrorCode::invalid_argument, "nothing to sample");
  }

  Sampler sampler(graph, seed);
  const std::size_t half = n / 2;
  std::vector<TripletSample> positives;
  std::vector<TripletSample> negatives;
  const auto add = [&](TripletSample s) {
    s.exercise = exercise;
    auto& bucket = s.positive ? positives : negatives;
    if (bucket.size() < half) bucket.push_back(std::move(s));
  };

  const auto boundary_samples = [&](std::size_t c) {
    const ClusterNode& node = graph.node(c);
    if (node.is_start) {
      add({Side::start(), sampler.member_of(c), 0, true, SampleKind::start_boundary,
           NegativeBranch::none, false, 0, c});
      const std::size_t other = sampler.uniform_cluster();
      add({sampler.member_of(other), sampler.member_of(c), 0, false, SampleKind::start_boundary,
           NegativeBranch::none, false, other, c});
    } else if (options.boundary_negatives) {
      add({Side::start(), sampler.member_of(c), 0, false, SampleKind::start_boundary,
           NegativeBranch::none, false, 0, c});
    }
    if (node.is_terminal) {
      add({sampler.member_of(c), Side::terminal(), 0, true, SampleKind::terminal_boundary,
           NegativeBranch::none, false, c, 0});
      const std::size_t other = sampler.uniform_cluster();
      add({sampler.member_of(c), sampler.member_of(other), 0, false,
           SampleKind::terminal_boundary, NegativeBranch::none, false, c, other});
    } else if (options.boundary_negatives) {
      add({sampler.member_of(c), Side::terminal(), 0, false, SampleKind::terminal_boundary,
           NegativeBranch::none, false, c, 0});
    }
  };

  const std::size_t max_rounds = 1000 * n + 1000;
  std::size_t rounds = 0;
  while (positives.size() < half || negatives.size() < half) {
    if (++rounds > max_rounds) throw Error(ErrorCode::invalid_argument, "nothing to sample");

    if (positives.size() < half) {
      const std::size_t c = sampler.cluster_by_size();
      if (const auto next = sampler.weighted_successor(c)) {
        add({sampler.member_of(c), sampler.member_of(*next), 0, true, SampleKind::transition,
             NegativeBranch::none, false, c, *next});
      }
      boundary_samples(c);
    }

    if (negatives.size() < half) {
      const std::size_t c = sampler.cluster_by_size();
      const auto succ = graph.successors(c);
      const auto is_successor = [&](std::size_t x) {
        return std::binary_search(succ.begin(), succ.end(), x);
      };
      std::size_t other = 0;
      NegativeBranch branch;
      if (sampler.unit_interval() < options.random_fraction) {
        branch = NegativeBranch::random;
        other = sampler.uniform_cluster();
      } else {
        std::vector<std::size_t> matched;
        const auto out = graph.outgoing_edges(c);
        if (!out.empty()) {
          const Category rel = out[sampler.uniform_index(out.size())].relation;
          for (const ClusterNode& cand : nodes) {
            if (is_successor(cand.id)) continue;
            const auto in = graph.incoming_relations(cand.id);
            if (std::find(in.begin(), in.end(), rel) != in.end()) matched.push_back(cand.id);
          }
        }
        if (!matched.empty()) {
          branch = NegativeBranch::relation_matched;
          other = matched[sampler.uniform_index(matched.size())];
        } else {
          std::vector<std::size_t> rest;
          for (const ClusterNode& cand : nodes)
            if (!is_successor(cand.id)) rest.push_back(cand.id);
          branch = NegativeBranch::exclusion_fallback;
          other = rest.empty() ? sampler.uniform_cluster()
                               : rest[sampler.uniform_index(rest.size())];
        }
      }
      add({sampler.member_of(c), sampler.member_of(other), 0, false, SampleKind::transition,
           branch, is_successor(other), c, other});
      boundary_samples(c);
    }
  }

  std::vector<TripletSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < half; ++i) {
    out.push_back(std::move(positives[i]));
    out.push_back(std::move(negatives[i]));
  }
  return out;
}

std::string sample_group_key(const TripletSample& s) {
  return s.left.serialized() + '\t' + s.right.serialized() + '\t' + std::to_string(s.exercise) +
         '\t' + (s.positive ? '1' : '0');
}

DatasetSplit split_dataset(const std::vector<TripletSample>& samples) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[sample_group_key(samples[i])].push_back(i);

  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->second.size() > b->second.size();
  });

  const double total = static_cast<double>(samples.size());
  const std::array<double, 3> target = {0.8 * total, 0.1 * total, 0.1 * total};
  std::array<double, 3> filled = {0.0, 0.0, 0.0};
  std::array<std::vector<TripletSample>*, 3> dest;
  DatasetSplit split;
  dest = {&split.train, &split.validation, &split.test};

  for (std::size_t g = 0; g < order.size(); ++g) {
    std::size_t pick = 0;
    if (g >= 3) {
      for (std::size_t k = 1; k < 3; ++k) {
        if (target[k] - filled[k] > target[pick] - filled[pick]) pick = k;
      }
    }
    for (std::size_t idx : order[g]->second) dest[pick]->push_back(samples[idx]);
    filled[pick] += static_cast<double>(order[g]->second.size());
  }
  return split;
}

namespace {

Side parse_side(const std::string& field) {
  if (field == start_marker) return Side::start();
  if (field == terminal_marker) return Side::terminal();
  return Side::unit(field);
}

}  // namespace

void write_samples(const std::string& path, const std::vector<TripletSample>& samples,
                   const std::vector<std::string>& exercise_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write sample file: " + path);
  for (const TripletSample& s : samples) {
    const std::string l = s.left.serialized();
    const std::string r = s.right.serialized();
    if (l.find('\t') != std::string::npos || r.find('\t') != std::string::npos) {
      throw Error(ErrorCode::invalid_argument, "sample text contains a tab");
    }
    if (s.exercise >= exercise_ids.size()) {
      throw Error(ErrorCode::invalid_argument, "sample exercise index out of range");
    }
    out << l << '\t' << r << '\t' << exercise_ids[s.exercise] << '\t' << (s.positive ? 1 : 0)
        << '\n';
  }
}

std::vector<TripletSample> read_samples(const std::string& path,
                                        const std::vector<std::string>& exercise_ids) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open sample file: " + path);
  std::vector<TripletSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = text_util::split(line, '\t');
    const auto where = path + ":" + std::to_string(line_no) + ": ";
    if (f.size() != 4) throw Error(ErrorCode::parse, where + "expected 4 tab-separated fields");
    TripletSample s;
    s.left = parse_side(f[0]);
    s.right = parse_side(f[1]);
    if (s.left.kind == Side::Kind::terminal || s.right.kind == Side::Kind::start ||
        (s.left.kind == Side::Kind::start && s.right.kind == Side::Kind::terminal)) {
      throw Error(ErrorCode::parse, where + "invalid sentinel placement");
    }
    const auto id = std::find(exercise_ids.begin(), exercise_ids.end(), f[2]);
    if (id == exercise_ids.end()) {
      throw Error(ErrorCode::parse, where + "unknown exercise '" + f[2] + "'");
    }
    s.exercise = static_cast<std::size_t>(id - exercise_ids.begin());
    if (f[3] != "0" && f[3] != "1") throw Error(ErrorCode::parse, where + "label must be 0 or 1");
    s.positive = f[3] == "1";
    if (s.left.kind == Side::Kind::start) s.kind = SampleKind::start_boundary;
    if (s.right.kind == Side::Kind::terminal) s.kind = SampleKind::terminal_boundary;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

EmbeddingVector random_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  for (double& x : v) x = g(rng);
  return EmbeddingVector(std::move(v));
}

struct Layout {
  std::size_t in, hidden;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden * in; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + 2 * hidden; }
  std::size_t total() const { return b2() + 2; }
};

}  // namespace

TripletClassifier::TripletClassifier(std::size_t embedding_dimension, std::size_t exercise_slots,
                                     std::size_t hidden_size, std::uint64_t seed)
    : embedding_dimension_(embedding_dimension),
      exercise_slots_(exercise_slots),
      hidden_size_(hidden_size) {
  if (embedding_dimension == 0 || exercise_slots == 0 || hidden_size == 0) {
    throw Error(ErrorCode::invalid_argument, "classifier dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  start_vector_ = random_unit(embedding_dimension, rng);
  terminal_vector_ = random_unit(embedding_dimension, rng);

  const Layout L{input_dimension(), hidden_size};
  params_.assign(L.total(), 0.0);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(L.in));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> u1(-r1, r1), u2(-r2, r2);
  for (std::size_t i = L.w1(); i < L.b1(); ++i) params_[i] = u1(rng);
  for (std::size_t i = L.w2(); i < L.b2(); ++i) params_[i] = u2(rng);
}

TripletClassifier TripletClassifier::from_parts(std::size_t embedding_dimension,
                                                std::size_t exercise_slots,
                                                std::size_t hidden_size,
                                                std::vector<double> parameters,
                                                EmbeddingVector start_vector,
                                                EmbeddingVector terminal_vector) {
  TripletClassifier c;
  c.embedding_dimension_ = embedding_dimension;
  c.exercise_slots_ = exercise_slots;
  c.hidden_size_ = hidden_size;
  const Layout L{c.input_dimension(), hidden_size};
  if (embedding_dimension == 0 || exercise_slots == 0 || hidden_size == 0 ||
      parameters.size() != L.total() || start_vector.dimension() != embedding_dimension ||
      terminal_vector.dimension() != embedding_dimension) {
    throw Error(ErrorCode::parse, "classifier shapes are inconsistent");
  }
  c.params_ = std::move(parameters);
  c.start_vector_ = std::move(start_vector);
  c.terminal_vector_ = std::move(terminal_vector);
  return c;
}

void TripletClassifier::zero_parameters() { std::fill(params_.begin(), params_.end(), 0.0); }

void TripletClassifier::check_inputs(const EmbeddingVector& left, const EmbeddingVector& right,
                                     std::size_t exercise) const {
  if (!ready()) throw Error(ErrorCode::not_ready, "triplet classifier is not trained");
  if (exercise >= exercise_slots_) {
    throw Error(ErrorCode::invalid_argument, "exercise index out of range");
  }
  if (left.dimension() != embedding_dimension_ || right.dimension() != embedding_dimension_) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
  }
}

namespace {

// Hidden activations and output probabilities for one sample.
void forward_pass(const std::vector<double>& p, const Layout& L, std::size_t d,
                  const EmbeddingVector& left, const EmbeddingVector& right,
                  std::size_t exercise, std::vector<double>& hidden, std::array<double, 2>& prob) {
  hidden.resize(L.hidden);
  for (std::size_t h = 0; h < L.hidden; ++h) {
    const double* row = p.data() + L.w1() + h * L.in;
    double z = p[L.b1() + h] + row[2 * d + exercise];
    for (std::size_t i = 0; i < d; ++i) z += row[i] * left[i];
    for (std::size_t i = 0; i < d; ++i) z += row[d + i] * right[i];
    hidden[h] = std::tanh(z);
  }
  std::array<double, 2> z{p[L.b2()], p[L.b2() + 1]};
  for (std::size_t k = 0; k < 2; ++k) {
    const double* row = p.data() + L.w2() + k * L.hidden;
    for (std::size_t h = 0; h < L.hidden; ++h) z[k] += row[h] * hidden[h];
  }
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  prob = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace

std::array<double, 2> TripletClassifier::forward(const EmbeddingVector& left,
                                                 const EmbeddingVector& right,
                                                 std::size_t exercise) const {
  check_inputs(left, right, exercise);
  std::vector<double> hidden;
  std::array<double, 2> prob{};
  forward_pass(params_, Layout{input_dimension(), hidden_size_}, embedding_dimension_, left, right,
               exercise, hidden, prob);
  return prob;
}

const EmbeddingVector& TripletClassifier::encode(const Side& side,
                                                 const EmbeddingProvider& provider,
                                                 EmbeddingVector& scratch) const {
  switch (side.kind) {
    case Side::Kind::start: return start_vector_;
    case Side::Kind::terminal: return terminal_vector_;
    case Side::Kind::unit: break;
  }
  scratch = provider.embed(side.text);
  return scratch;
}

double TripletClassifier::score(const EmbeddingProvider& provider, const Side& left,
                                const Side& right, std::size_t exercise) const {
  EmbeddingVector a, b;
  return score(encode(left, provider, a), encode(right, provider, b), exercise);
}

double TripletClassifier::loss(std::span<const EncodedSample> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (const EncodedSample& s : batch) {
    const auto p = forward(s.left, s.right, s.exercise);
    total -= std::log(std::max(p[static_cast<std::size_t>(s.label)], 1e-300));
  }
  return total / static_cast<double>(batch.size());
}

double TripletClassifier::loss_and_gradient(std::span<const EncodedSample> batch,
                                            std::vector<double>& gradient) const {
  const Layout L{input_dimension(), hidden_size_};
  const std::size_t d = embedding_dimension_;
  gradient.assign(params_.size(), 0.0);
  if (batch.empty()) return 0.0;

  std::vector<double> hidden, dhidden(L.hidden);
  std::array<double, 2> prob{};
  double total = 0.0;
  for (const EncodedSample& s : batch) {
    check_inputs(s.left, s.right, s.exercise);
    forward_pass(params_, L, d, s.left, s.right, s.exercise, hidden, prob);
    total -= std::log(std::max(prob[static_cast<std::size_t>(s.label)], 1e-300));

    const std::array<double, 2> dz = {prob[0] - (s.label == 0 ? 1.0 : 0.0),
                                      prob[1] - (s.label == 1 ? 1.0 : 0.0)};
    for (std::size_t k = 0; k < 2; ++k) {
      double* grow = gradient.data() + L.w2() + k * L.hidden;
      for (std::size_t h = 0; h < L.hidden; ++h) grow[h] += dz[k] * hidden[h];
      gradient[L.b2() + k] += dz[k];
    }
    for (std::size_t h = 0; h < L.hidden; ++h) {
      const double back = dz[0] * params_[L.w2() + h] + dz[1] * params_[L.w2() + L.hidden + h];
      dhidden[h] = back * (1.0 - hidden[h] * hidden[h]);
    }
    for (std::size_t h = 0; h < L.hidden; ++h) {
      const double g = dhidden[h];
      double* grow = gradient.data() + L.w1() + h * L.in;
      for (std::size_t i = 0; i < d; ++i) grow[i] += g * s.left[i];
      for (std::size_t i = 0; i < d; ++i) grow[d + i] += g * s.right[i];
      grow[2 * d + s.exercise] += g;
      gradient[L.b1() + h] += g;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : gradient) g *= inv;
  return total * inv;
}

std::vector<EncodedSample> encode_samples(const std::vector<TripletSample>& samples,
                                          const TripletClassifier& classifier,
                                          const EmbeddingProvider& provider) {
  std::map<std::string, EmbeddingVector> cache;
  const auto encode = [&](const Side& side) -> EmbeddingVector {
    if (side.kind == Side::Kind::start) return classifier.start_vector();
    if (side.kind == Side::Kind::terminal) return classifier.terminal_vector();
    auto it = cache.find(side.text);
    if (it == cache.end()) it = cache.emplace(side.text, provider.embed(side.text)).first;
    return it->second;
  };
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const TripletSample& s : samples) {
    out.push_back({encode(s.left), encode(s.right), s.exercise, s.positive ? 1 : 0});
  }
  return out;
}

ClassifierMetrics train_classifier(TripletClassifier& classifier,
                                   const std::vector<EncodedSample>& train,
                                   const std::vector<EncodedSample>& validation,
                                   const ClassifierTrainOptions& options) {
  if (!classifier.ready()) throw Error(ErrorCode::not_ready, "classifier is not initialized");
  if (train.empty()) throw Error(ErrorCode::empty_input, "empty training set");
  if (options.epochs < 0 || options.batch_size == 0 || !(options.learning_rate > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid classifier training options");
  }

  ClassifierMetrics metrics;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<EncodedSample> batch;
  std::vector<double> grad;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t len = std::min(options.batch_size, order.size() - start);
      batch.clear();
      for (std::size_t k = 0; k < len; ++k) batch.push_back(train[order[start + k]]);
      epoch_loss += classifier.loss_and_gradient(batch, grad) * static_cast<double>(len);
      auto& params = classifier.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= options.learning_rate * grad[i];
    }
    metrics.epoch_train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    metrics.epoch_validation_accuracy.push_back(validation.empty() ? 0.0
                                                                   : accuracy(classifier, validation));
  }
  return metrics;
}

double accuracy(const TripletClassifier& classifier, const std::vector<EncodedSample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t hit = 0;
  for (const EncodedSample& s : samples) {
    const int predicted = classifier.score(s.left, s.right, s.exercise) > 0.5 ? 1 : 0;
    if (predicted == s.label) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

double majority_rate(const std::vector<EncodedSample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t pos = 0;
  for (const EncodedSample& s : samples) pos += static_cast<std::size_t>(s.label);
  const std::size_t major = std::max(pos, samples.size() - pos);
  return static_cast<double>(major) / static_cast<double>(samples.size());
}

std::string serialize_classifier(const TripletClassifier& c) {
  const auto vec = [](const EmbeddingVector& v) {
    return json(std::vector<double>(v.values().begin(), v.values().end()));
  };
  const Layout L{c.input_dimension(), c.hidden_size()};
  const auto& p = c.parameters();
  const auto slice = [&](std::size_t from, std::size_t to) {
    return json(std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(from),
                                    p.begin() + static_cast<std::ptrdiff_t>(to)));
  };
  json doc;
  doc["format"] = "discofeed.triplet/1";
  doc["embedding_dimension"] = c.embedding_dimension();
  doc["exercise_slots"] = c.exercise_slots();
  doc["hidden_size"] = c.hidden_size();
  doc["activation"] = "tanh";
  doc["exercise_ids"] = c.exercise_ids;
  doc["start_vector"] = vec(c.start_vector());
  doc["terminal_vector"] = vec(c.terminal_vector());
  doc["layers"] = json::array({
      {{"name", "w1"}, {"shape", {L.hidden, L.in}}, {"values", slice(L.w1(), L.b1())}},
      {{"name", "b1"}, {"shape", {L.hidden}}, {"values", slice(L.b1(), L.w2())}},
      {{"name", "w2"}, {"shape", {2, L.hidden}}, {"values", slice(L.w2(), L.b2())}},
      {{"name", "b2"}, {"shape", {2}}, {"values", slice(L.b2(), L.total())}},
  });
  return doc.dump(1) + "\n";
}

TripletClassifier parse_classifier(std::string_view document) {
  try {
    const json doc = json::parse(document);
    if (doc.value("format", "") != "discofeed.triplet/1") {
      throw Error(ErrorCode::parse, "not a discofeed classifier document");
    }
    std::vector<double> params;
    for (const json& layer : doc.at("layers")) {
      const auto values = layer.at("values").get<std::vector<double>>();
      std::size_t expected = 1;
      for (const json& dim : layer.at("shape")) expected *= dim.get<std::size_t>();
      if (values.size() != expected) {
        throw Error(ErrorCode::parse, "layer values do not match declared shape");
      }
      params.insert(params.end(), values.begin(), values.end());
    }
    TripletClassifier c = TripletClassifier::from_parts(
        doc.at("embedding_dimension").get<std::size_t>(),
        doc.at("exercise_slots").get<std::size_t>(), doc.at("hidden_size").get<std::size_t>(),
        std::move(params),
        EmbeddingVector::from_unit(doc.at("start_vector").get<std::vector<double>>()),
        EmbeddingVector::from_unit(doc.at("terminal_vector").get<std::vector<double>>()));
    c.exercise_ids = doc.at("exercise_ids").get<std::vector<std::string>>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed classifier document: ") + e.what());
  }
}

}  // namespace discofeed
