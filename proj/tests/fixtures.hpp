#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "discofeed/embeddings.hpp"
#include "discofeed/feedback.hpp"
#include "discofeed/graph.hpp"
#include "discofeed/relations.hpp"
#include "discofeed/segmentation.hpp"

#ifndef DF_TEST_DATA
#error "DF_TEST_DATA must point at tests/data"
#endif

namespace fixture {

inline std::string data(const std::string& name) { return std::string(DF_TEST_DATA) + "/" + name; }

// Segment, embed and relate one solution with cue routing and a zero decoder.
inline discofeed::ParsedSolution parse(const discofeed::EmbeddingProvider& embed,
                                       const std::string& text, discofeed::SolutionSource source) {
  using namespace discofeed;
  const CueLexicon lex = CueLexicon::defaults();
  const RelationDecoder decoder = RelationDecoder::zeros(embed.dimension());
  ParsedSolution s;
  s.source = source;
  s.edus = segment_heuristic(text, lex);
  for (const Edu& e : s.edus) s.embeddings.push_back(embed.embed(e.text));
  for (std::size_t i = 1; i < s.edus.size(); ++i) {
    s.relations.push_back(classify_relation(decoder, s.embeddings[i - 1], s.embeddings[i],
                                            detect_cue(s.edus[i - 1], s.edus[i], lex)));
  }
  return s;
}

// Parse a student answer and match its units to graph clusters.
inline discofeed::ParsedAttempt attempt(const discofeed::EmbeddingProvider& embed,
                                        const discofeed::ExerciseGraph& graph,
                                        const std::string& text) {
  discofeed::ParsedAttempt a;
  a.solution = parse(embed, text, discofeed::SolutionSource::student);
  a.clusters = discofeed::assign_to_clusters(graph, a.solution.embeddings);
  return a;
}

// 1 for each pair the graph licenses (an edge, a start node after <START>, a
// terminal node before <TERMINAL>), 0 otherwise; averaged like the classifier.
inline double graph_validity(const discofeed::ExerciseGraph& g,
                             const discofeed::CandidateSolution& c) {
  using namespace discofeed;
  std::vector<const Element*> seq;
  for (const Element& e : c.elements)
    if (e.scored()) seq.push_back(&e);
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t k = 1; k < seq.size(); ++k, ++n) {
    const Element& l = *seq[k - 1];
    const Element& r = *seq[k];
    const auto id = [](const Element& e) { return static_cast<std::size_t>(e.cluster); };
    if (l.kind == Element::Kind::start && r.kind == Element::Kind::cluster) {
      sum += g.node(id(r)).is_start;
    } else if (r.kind == Element::Kind::terminal && l.kind == Element::Kind::cluster) {
      sum += g.node(id(l)).is_terminal;
    } else if (l.kind == Element::Kind::cluster && r.kind == Element::Kind::cluster) {
      sum += g.has_edge(id(l), id(r));
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// The three-solution classification exercise over a hand-made 8-d store.
struct Fig3 {
  std::shared_ptr<const discofeed::EmbeddingStore> store;
  std::shared_ptr<discofeed::StoreEmbedder> embedder;
  std::vector<discofeed::ParsedSolution> solutions;
  discofeed::ExerciseGraph graph;

  static constexpr std::size_t cls = 0;
  static constexpr std::size_t cat = 1;
  static constexpr std::size_t disc = 2;

  Fig3() {
    using namespace discofeed;
    store = std::make_shared<const EmbeddingStore>(load_store(data("fig3_store.tsv"), 8));
    embedder = std::make_shared<StoreEmbedder>(store, 8);
    solutions = {
        parse(*embedder, "I think it's classification", SolutionSource::student),
        parse(*embedder, "it's a classification task, because it uses categories",
              SolutionSource::reference),
        parse(*embedder, "classification because the outputs are discrete.",
              SolutionSource::reference),
    };
    graph = build_graph("fig3", solutions, {0.15, 2, 8});
  }
};

// Six concepts in 16 dimensions with many close phrasings each, strung into
// chains. Member texts map to their vectors through a store.
struct Toy {
  std::shared_ptr<discofeed::EmbeddingStore> store;
  std::shared_ptr<discofeed::StoreEmbedder> embedder;
  discofeed::ExerciseGraph graph;

  static constexpr std::size_t dim = 16;

  explicit Toy(std::uint64_t seed = 1, int phrasings = 12, int repeats = 8) {
    using namespace discofeed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.02);
    store = std::make_shared<EmbeddingStore>(dim);
    for (int c = 0; c < 6; ++c) {
      for (int k = 0; k < phrasings; ++k) {
        std::vector<double> v(dim);
        for (double& x : v) x = noise(rng);
        v[static_cast<std::size_t>(c)] += 1.0;
        v[static_cast<std::size_t>(c + 6)] += 0.3;
        store->insert(text(c, k), v);
      }
    }
    embedder = std::make_shared<StoreEmbedder>(store, dim);
    const std::vector<std::vector<int>> chains = {{0, 1, 2}, {0, 1, 3}, {4, 1, 2}, {0, 5}, {4, 5, 3}};
    const Category rels[] = {Category::Contingency, Category::Expansion, Category::Temporal,
                             Category::Comparison, Category::Contingency};
    std::vector<ParsedSolution> sols;
    for (int rep = 0; rep < repeats; ++rep) {
      for (std::size_t ci = 0; ci < chains.size(); ++ci) {
        ParsedSolution s;
        s.source = rep == 0 ? SolutionSource::reference : SolutionSource::student;
        const auto& chain = chains[ci];
        for (std::size_t i = 0; i < chain.size(); ++i) {
          Edu e;
          e.text = text(chain[i], static_cast<int>(rng() % static_cast<std::uint64_t>(phrasings)));
          e.position = i;
          e.solution_len = chain.size();
          s.embeddings.push_back(embedder->embed(e.text));
          s.edus.push_back(std::move(e));
          if (i > 0) s.relations.push_back({rels[ci], Explicitness::Explicit, 1.0});
        }
        sols.push_back(std::move(s));
      }
    }
    graph = build_graph("toy", sols, {0.15, 2, dim});
  }

  static std::string text(int concept_id, int variant) {
    return "concept " + std::to_string(concept_id) + " phrasing " + std::to_string(variant);
  }
};

}  // namespace fixture
