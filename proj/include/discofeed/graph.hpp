#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discofeed/embeddings.hpp"
#include "discofeed/relations.hpp"
#include "discofeed/segmentation.hpp"

namespace discofeed {

inline constexpr int outlier = -1;

// Density clustering over cosine distance. min_samples counts the point
// itself; points are scanned in index order, so a border point joins the
// first cluster that reaches it. Returns a cluster id (0, 1, ...) or
// `outlier` per point.
std::vector<int> dbscan(const std::vector<EmbeddingVector>& points, double eps,
                        std::size_t min_samples);

enum class SolutionSource { reference, student };

std::string_view to_string(SolutionSource s) noexcept;
std::optional<SolutionSource> parse_solution_source(std::string_view name) noexcept;

// A solution after feature extraction: units, one vector per unit and one
// relation per adjacent boundary.
struct ParsedSolution {
  std::vector<Edu> edus;
  std::vector<EmbeddingVector> embeddings;
  std::vector<DiscourseRelation> relations;
  SolutionSource source = SolutionSource::student;
};

struct ClusterMember {
  std::string text;
  SolutionSource source = SolutionSource::student;
  std::size_t position = 0;
  std::size_t solution_len = 0;
  std::size_t solution_index = 0;
  EmbeddingVector embedding;
};

struct ClusterNode {
  std::size_t id = 0;
  std::vector<ClusterMember> members;
  EmbeddingVector centroid;
  bool is_start = false;
  bool is_terminal = false;
  bool contains_reference = false;
  bool promoted = false;  // reference outlier kept as a singleton
};

struct RelationEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  Category relation = Category::Temporal;
  std::size_t weight = 0;

  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

struct GraphParams {
  double eps = 0.15;
  std::size_t min_samples = 2;
  std::size_t dimension = 0;
};

class ExerciseGraph {
 public:
  ExerciseGraph() = default;
  ExerciseGraph(std::string exercise_id, GraphParams params, std::vector<ClusterNode> nodes,
                std::vector<RelationEdge> edges);

  const std::string& exercise_id() const noexcept { return exercise_id_; }
  const GraphParams& params() const noexcept { return params_; }
  const std::vector<ClusterNode>& nodes() const noexcept { return nodes_; }
  const std::vector<RelationEdge>& edges() const noexcept { return edges_; }
  const ClusterNode& node(std::size_t id) const;

  // Sorted, de-duplicated node ids.
  std::vector<std::size_t> successors(std::size_t id) const;
  std::vector<std::size_t> predecessors(std::size_t id) const;
  std::vector<std::size_t> neighbors(std::size_t id) const;

  bool has_edge(std::size_t from, std::size_t to) const;
  // Total weight over all relation types of from -> to.
  std::size_t edge_weight(std::size_t from, std::size_t to) const;
  // Heaviest relation on from -> to; ties go to the earlier category.
  std::optional<Category> dominant_relation(std::size_t from, std::size_t to) const;
  // Relation types on any edge into `id` / out of `id`.
  std::vector<Category> incoming_relations(std::size_t id) const;
  std::vector<RelationEdge> outgoing_edges(std::size_t id) const;

  // Member text used when the node appears in a suggestion: reference members
  // first, then the most frequent phrasing (ignoring trailing punctuation),
  // then the shortest, then the earliest. Returns the member's original text.
  std::string representative_text(std::size_t id) const;

 private:
  std::string exercise_id_;
  GraphParams params_;
  std::vector<ClusterNode> nodes_;
  std::vector<RelationEdge> edges_;
};

// Clusters every unit, keeps reference outliers as singleton nodes, drops
// student outliers, then counts relation-typed transitions.
ExerciseGraph build_graph(const std::string& exercise_id,
                          const std::vector<ParsedSolution>& solutions,
                          const GraphParams& params);

// Nearest member within eps, ties to the lower cluster id; else `outlier`.
std::vector<int> assign_to_clusters(const ExerciseGraph& graph,
                                    const std::vector<EmbeddingVector>& embeddings);

std::string serialize_graph(const ExerciseGraph& graph);
ExerciseGraph parse_graph(std::string_view document);

}  // namespace discofeed
