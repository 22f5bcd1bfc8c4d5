#include <doctest.h>

#include <cmath>
#include <random>

#include "discofeed/error.hpp"
#include "discofeed/relations.hpp"
#include "discofeed/segmentation.hpp"
#include "temp_dir.hpp"

using namespace discofeed;

namespace {

const CueLexicon lex = CueLexicon::defaults();

EmbeddingVector random_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(d);
  for (double& x : v) x = g(rng);
  return EmbeddingVector(v);
}

// Pairs whose left side sits near one of four prototype directions; the
// category is that prototype's index.
std::vector<RelationSample> separable(std::size_t n, std::size_t d, Explicitness branch,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.15);
  std::vector<RelationSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 4;
    std::vector<double> l(d), r(d);
    for (std::size_t k = 0; k < d; ++k) {
      l[k] = (k == c ? 1.0 : 0.0) + g(rng);
      r[k] = (k == c + 4 ? 1.0 : 0.0) + g(rng);
    }
    out.push_back({EmbeddingVector(l), EmbeddingVector(r), branch, all_categories[c]});
  }
  return out;
}

double accuracy(const RelationDecoder& d, const std::vector<RelationSample>& s) {
  std::size_t hit = 0;
  for (const auto& x : s) {
    if (argmax_category(d.probabilities(x.explicitness, x.left, x.right)) == x.category) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(s.size());
}

}  // namespace

TEST_CASE("cue detection") {
  auto cue = detect_cue("it's a classification task", "because we are choosing between values", lex);
  REQUIRE(cue);
  CHECK(cue->word == "because");
  CHECK(cue->category == Category::Contingency);

  cue = detect_cue("It uses a logistic function", "to model a binary dependent variable", lex);
  REQUIRE(cue);
  CHECK(cue->category == Category::Expansion);

  CHECK_FALSE(detect_cue("classification", "the outputs are discrete", lex));
  CHECK(detect_cue("it is fast", "But it is costly", lex)->category == Category::Comparison);
  CHECK(detect_cue("it stops", "then it starts", lex)->category == Category::Temporal);
  CHECK(detect_cue("we stop, and", "it starts", lex)->word == "and");
  CHECK(detect_cue("it is done, also.", "fine", lex)->category == Category::Expansion);
}

TEST_CASE("boundary relabelling") {
  const auto a = segment_heuristic("it's classification because it uses categories", lex);
  CHECK(label_boundary_relations(a, lex) == std::vector<std::optional<Category>>{Category::Contingency});
  const auto b = segment_heuristic("It uses a logistic function to model a binary dependent variable", lex);
  CHECK(label_boundary_relations(b, lex) == std::vector<std::optional<Category>>{Category::Expansion});
  const auto c = segment_heuristic("It is fast. It is cheap", lex);
  CHECK(label_boundary_relations(c, lex) == std::vector<std::optional<Category>>{std::nullopt});
  CHECK_THROWS_AS(label_boundary_relations(segment_heuristic("alone", lex), lex), Error);
}

TEST_CASE("classification routing and tie order") {
  const auto zero = RelationDecoder::zeros(4);
  const EmbeddingVector l({1, 0, 0, 0}), r({0, 1, 0, 0});
  const auto implicit = classify_relation(zero, l, r, std::nullopt);
  CHECK(implicit.category == Category::Temporal);
  CHECK(implicit.explicitness == Explicitness::Implicit);
  CHECK(implicit.confidence == doctest::Approx(0.25));
  for (double p : zero.probabilities(Explicitness::Implicit, l, r)) CHECK(p == doctest::Approx(0.25));

  auto trained = RelationDecoder::zeros(4);
  for (double& w : trained.parameters(Explicitness::Explicit)) w = 0.7;
  trained.parameters(Explicitness::Explicit)[32 + 0] = 5.0;  // favour Temporal
  const auto explicit_rel = classify_relation(trained, l, r, Cue{"because", Category::Contingency});
  CHECK(explicit_rel.category == Category::Contingency);
  CHECK(explicit_rel.explicitness == Explicitness::Explicit);
  const auto p = trained.probabilities(Explicitness::Explicit, l, r);
  CHECK(explicit_rel.confidence == doctest::Approx(p[1]));

  CHECK_THROWS_AS(classify_relation(RelationDecoder{}, l, r, std::nullopt), Error);
  CHECK_THROWS_AS(zero.probabilities(Explicitness::Implicit, EmbeddingVector({1, 0}), r), Error);
}

TEST_CASE("softmax sums to one for arbitrary weights") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 3.0);
  auto d = RelationDecoder::zeros(6);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto b : {Explicitness::Explicit, Explicitness::Implicit}) {
      for (double& w : d.parameters(b)) w = g(rng);
      const auto p = d.probabilities(b, random_unit(6, rng), random_unit(6, rng));
      double sum = 0.0;
      for (double x : p) sum += x;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("loss gradient matches central differences") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<RelationSample> samples;
  for (int i = 0; i < 12; ++i) {
    samples.push_back({random_unit(5, rng), random_unit(5, rng),
                       i % 3 ? Explicitness::Implicit : Explicitness::Explicit,
                       all_categories[static_cast<std::size_t>(i) % 4]});
  }
  auto d = RelationDecoder::zeros(5);
  for (auto b : {Explicitness::Explicit, Explicitness::Implicit}) {
    for (double& w : d.parameters(b)) w = g(rng);
  }
  for (auto b : {Explicitness::Explicit, Explicitness::Implicit}) {
    const auto grad = relation_loss_gradient(d, b, samples);
    std::uniform_int_distribution<std::size_t> pick(0, grad.size() - 1);
    for (int k = 0; k < 10; ++k) {
      const std::size_t i = pick(rng);
      const double h = 1e-5;
      auto plus = d, minus = d;
      plus.parameters(b)[i] += h;
      minus.parameters(b)[i] -= h;
      const double numeric =
          (relation_loss(plus, b, samples) - relation_loss(minus, b, samples)) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
      CHECK(std::abs(numeric - grad[i]) / denom < 1e-4);
    }
  }
}

TEST_CASE("repeated single sample: loss strictly decreases") {
  std::mt19937_64 rng(29);
  const RelationSample s{random_unit(4, rng), random_unit(4, rng), Explicitness::Implicit,
                         Category::Comparison};
  const auto r = train_relation_decoder(std::vector<RelationSample>(8, s), {5, 0.3, 4, 1});
  REQUIRE(r.epoch_losses.size() == 5);
  CHECK(r.epoch_losses[0] < std::log(4.0));
  for (std::size_t i = 1; i < 5; ++i) CHECK(r.epoch_losses[i] < r.epoch_losses[i - 1]);
}

TEST_CASE("separable synthetic relations are learned") {
  auto train = separable(400, 10, Explicitness::Implicit, 3);
  const auto more = separable(200, 10, Explicitness::Explicit, 4);
  train.insert(train.end(), more.begin(), more.end());
  const auto held = separable(200, 10, Explicitness::Implicit, 99);
  const auto r = train_relation_decoder(train, {40, 0.5, 8, 7});
  CHECK(accuracy(r.decoder, train) >= 0.95);
  CHECK(accuracy(r.decoder, held) > 0.9);

  const auto again = train_relation_decoder(train, {40, 0.5, 8, 7});
  CHECK(again.decoder.parameters(Explicitness::Implicit) ==
        r.decoder.parameters(Explicitness::Implicit));
  CHECK_THROWS_AS(train_relation_decoder({}, {}), Error);
}

TEST_CASE("relation training file") {
  TempDir dir;
  const auto ok = dir.file("rel.tsv",
                           "a\tbecause b\tExplicit\tContingency\nc\td\tImplicit\tExpansion\n");
  const auto rows = load_relation_examples(ok);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].explicitness == Explicitness::Explicit);
  CHECK(rows[1].category == Category::Expansion);
  CHECK_THROWS_AS(load_relation_examples(dir.file("b1.tsv", "a\tb\tSometimes\tExpansion\n")), Error);
  CHECK_THROWS_AS(load_relation_examples(dir.file("b2.tsv", "a\tb\tImplicit\tCausal\n")), Error);
  CHECK_THROWS_AS(load_relation_examples(dir.file("b3.tsv", "a\tb\tImplicit\n")), Error);
}
