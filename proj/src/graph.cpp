#include "discofeed/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include <json.hpp>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

using json = nlohmann::json;

std::vector<int> dbscan(const std::vector<EmbeddingVector>& points, double eps,
                        std::size_t min_samples) {
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  if (min_samples < 1) throw Error(ErrorCode::invalid_argument, "min_samples must be >= 1");
  const std::size_t n = points.size();
  constexpr int unvisited = -2;
  std::vector<int> labels(n, unvisited);

  const auto region = [&](std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q = 0; q < n; ++q) {
      if (cosine_distance(points[p], points[q]) <= eps) out.push_back(q);
    }
    return out;
  };

  int next_cluster = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (labels[p] != unvisited) continue;
    const auto seeds = region(p);
    if (seeds.size() < min_samples) {
      labels[p] = outlier;
      continue;
    }
    const int c = next_cluster++;
    labels[p] = c;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      if (labels[q] == outlier) labels[q] = c;  // border point
      if (labels[q] != unvisited) continue;
      labels[q] = c;
      const auto expand = region(q);
      if (expand.size() >= min_samples) queue.insert(queue.end(), expand.begin(), expand.end());
    }
  }
  return labels;
}

std::string_view to_string(SolutionSource s) noexcept {
  return s == SolutionSource::reference ? "reference" : "student";
}

std::optional<SolutionSource> parse_solution_source(std::string_view name) noexcept {
  if (name == "reference") return SolutionSource::reference;
  if (name == "student") return SolutionSource::student;
  return std::nullopt;
}

ExerciseGraph::ExerciseGraph(std::string exercise_id, GraphParams params,
                             std::vector<ClusterNode> nodes, std::vector<RelationEdge> edges)
    : exercise_id_(std::move(exercise_id)),
      params_(params),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id != i) throw Error(ErrorCode::invalid_argument, "node ids must be 0..D-1");
  }
  for (const RelationEdge& e : edges_) {
    if (e.source >= nodes_.size() || e.target >= nodes_.size()) {
      throw Error(ErrorCode::invalid_argument, "edge endpoint does not exist");
    }
    if (e.weight == 0) throw Error(ErrorCode::invalid_argument, "edge weight must be positive");
  }
}

const ClusterNode& ExerciseGraph::node(std::size_t id) const {
  if (id >= nodes_.size()) throw Error(ErrorCode::not_found, "no such cluster node");
  return nodes_[id];
}

std::vector<std::size_t> ExerciseGraph::successors(std::size_t id) const {
  std::set<std::size_t> out;
  for (const RelationEdge& e : edges_)
    if (e.source == id) out.insert(e.target);
  return {out.begin(), out.end()};
}

std::vector<std::size_t> ExerciseGraph::predecessors(std::size_t id) const {
  std::set<std::size_t> out;
  for (const RelationEdge& e : edges_)
    if (e.target == id) out.insert(e.source);
  return {out.begin(), out.end()};
}

std::vector<std::size_t> ExerciseGraph::neighbors(std::size_t id) const {
  std::set<std::size_t> out;
  for (const RelationEdge& e : edges_) {
    if (e.source == id) out.insert(e.target);
    if (e.target == id) out.insert(e.source);
  }
  return {out.begin(), out.end()};
}

bool ExerciseGraph::has_edge(std::size_t from, std::size_t to) const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [&](const RelationEdge& e) { return e.source == from && e.target == to; });
}

std::size_t ExerciseGraph::edge_weight(std::size_t from, std::size_t to) const {
  std::size_t w = 0;
  for (const RelationEdge& e : edges_)
    if (e.source == from && e.target == to) w += e.weight;
  return w;
}

std::optional<Category> ExerciseGraph::dominant_relation(std::size_t from, std::size_t to) const {
  std::optional<Category> best;
  std::size_t best_w = 0;
  for (Category c : all_categories) {
    for (const RelationEdge& e : edges_) {
      if (e.source == from && e.target == to && e.relation == c && e.weight > best_w) {
        best = c;
        best_w = e.weight;
      }
    }
  }
  return best;
}

std::vector<Category> ExerciseGraph::incoming_relations(std::size_t id) const {
  std::set<Category> out;
  for (const RelationEdge& e : edges_)
    if (e.target == id) out.insert(e.relation);
  return {out.begin(), out.end()};
}

std::vector<RelationEdge> ExerciseGraph::outgoing_edges(std::size_t id) const {
  std::vector<RelationEdge> out;
  for (const RelationEdge& e : edges_)
    if (e.source == id) out.push_back(e);
  return out;
}

std::string ExerciseGraph::representative_text(std::size_t id) const {
  const ClusterNode& n = node(id);
  const bool prefer_reference = n.contains_reference;
  struct Candidate {
    std::size_t count = 0;
    std::size_t first_index = 0;
  };
  std::map<std::string, Candidate> by_text;
  for (std::size_t i = 0; i < n.members.size(); ++i) {
    const ClusterMember& m = n.members[i];
    if (prefer_reference && m.source != SolutionSource::reference) continue;
    auto [it, inserted] = by_text.try_emplace(text_util::strip_trailing_punct(m.text), Candidate{0, i});
    ++it->second.count;
  }
  const std::string* best = nullptr;
  Candidate best_c;
  for (const auto& [text, c] : by_text) {
    const bool better =
        best == nullptr || c.count > best_c.count ||
        (c.count == best_c.count &&
         (text.size() < best->size() ||
          (text.size() == best->size() && c.first_index < best_c.first_index)));
    if (better) {
      best = &text;
      best_c = c;
    }
  }
  return best ? n.members[best_c.first_index].text : std::string();
}

namespace {

EmbeddingVector centroid_of(const std::vector<ClusterMember>& members) {
  std::vector<double> sum(members.front().embedding.dimension(), 0.0);
  for (const ClusterMember& m : members) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += m.embedding[i];
  }
  double sq = 0.0;
  for (double v : sum) sq += v * v;
  if (sq < 1e-24) return members.front().embedding;
  return EmbeddingVector(std::move(sum), members.front().embedding.source());
}

void finalize_flags(ClusterNode& node) {
  std::size_t first = 0, last = 0;
  node.contains_reference = false;
  for (const ClusterMember& m : node.members) {
    if (m.position == 0) ++first;
    if (m.position + 1 == m.solution_len) ++last;
    if (m.source == SolutionSource::reference) node.contains_reference = true;
  }
  // Strictly more than half.
  node.is_start = 2 * first > node.members.size();
  node.is_terminal = 2 * last > node.members.size();
}

}  // namespace

ExerciseGraph build_graph(const std::string& exercise_id,
                          const std::vector<ParsedSolution>& solutions,
                          const GraphParams& params) {
  const bool has_reference = std::any_of(solutions.begin(), solutions.end(), [](const auto& s) {
    return s.source == SolutionSource::reference && !s.edus.empty();
  });
  if (!has_reference) {
    throw Error(ErrorCode::invalid_argument, "exercise needs reference answers");
  }

  std::vector<EmbeddingVector> points;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // (solution, unit)
  std::size_t dimension = params.dimension;
  for (std::size_t s = 0; s < solutions.size(); ++s) {
    const ParsedSolution& sol = solutions[s];
    if (sol.embeddings.size() != sol.edus.size()) {
      throw Error(ErrorCode::invalid_argument, "one embedding per EDU is required");
    }
    if (!sol.edus.empty() && sol.relations.size() + 1 != sol.edus.size()) {
      throw Error(ErrorCode::invalid_argument, "one relation per EDU boundary is required");
    }
    for (std::size_t u = 0; u < sol.edus.size(); ++u) {
      if (dimension == 0) dimension = sol.embeddings[u].dimension();
      if (sol.embeddings[u].dimension() != dimension) {
        throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
      }
      points.push_back(sol.embeddings[u]);
      origin.emplace_back(s, u);
    }
  }

  const std::vector<int> labels = dbscan(points, params.eps, params.min_samples);
  const int cluster_count =
      labels.empty() ? 0 : std::max(0, *std::max_element(labels.begin(), labels.end()) + 1);

  std::vector<ClusterNode> nodes(static_cast<std::size_t>(cluster_count));
  std::vector<int> node_of_point(points.size(), outlier);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto [s, u] = origin[p];
    if (labels[p] != outlier) {
      node_of_point[p] = labels[p];
    } else if (solutions[s].source == SolutionSource::reference) {
      ClusterNode singleton;
      singleton.promoted = true;
      nodes.push_back(std::move(singleton));
      node_of_point[p] = static_cast<int>(nodes.size() - 1);
    } else {
      continue;
    }
    const Edu& edu = solutions[s].edus[u];
    nodes[static_cast<std::size_t>(node_of_point[p])].members.push_back(
        {edu.text, solutions[s].source, edu.position, edu.solution_len, s, points[p]});
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].id = i;
    nodes[i].centroid = centroid_of(nodes[i].members);
    finalize_flags(nodes[i]);
  }

  std::map<std::tuple<std::size_t, std::size_t, Category>, std::size_t> counts;
  std::size_t p = 0;
  for (const ParsedSolution& sol : solutions) {
    for (std::size_t u = 0; u + 1 < sol.edus.size(); ++u) {
      const int a = node_of_point[p + u];
      const int b = node_of_point[p + u + 1];
      if (a != outlier && b != outlier) {
        ++counts[{static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                  sol.relations[u].category}];
      }
    }
    p += sol.edus.size();
  }
  std::vector<RelationEdge> edges;
  for (const auto& [key, w] : counts) {
    edges.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
  }

  return ExerciseGraph(exercise_id, GraphParams{params.eps, params.min_samples, dimension},
                       std::move(nodes), std::move(edges));
}

std::vector<int> assign_to_clusters(const ExerciseGraph& graph,
                                    const std::vector<EmbeddingVector>& embeddings) {
  std::vector<int> out;
  out.reserve(embeddings.size());
  for (const EmbeddingVector& v : embeddings) {
    if (graph.params().dimension != 0 && v.dimension() != graph.params().dimension) {
      throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
    }
    int best = outlier;
    double best_d = 0.0;
    for (const ClusterNode& n : graph.nodes()) {
      for (const ClusterMember& m : n.members) {
        const double d = cosine_distance(v, m.embedding);
        if (best == outlier || d < best_d) {
          best = static_cast<int>(n.id);
          best_d = d;
        }
      }
    }
    out.push_back(best != outlier && best_d <= graph.params().eps ? best : outlier);
  }
  return out;
}

namespace {

json vector_json(const EmbeddingVector& v) {
  return json(std::vector<double>(v.values().begin(), v.values().end()));
}

EmbeddingVector vector_from(const json& j, EmbeddingSource source) {
  return EmbeddingVector::from_unit(j.get<std::vector<double>>(), source);
}

constexpr std::pair<EmbeddingSource, const char*> source_names[] = {
    {EmbeddingSource::builtin_hash, "builtin_hash"},
    {EmbeddingSource::store, "store"},
    {EmbeddingSource::external, "external"},
};

const char* source_name(EmbeddingSource s) {
  for (const auto& [k, v] : source_names)
    if (k == s) return v;
  return "external";
}

EmbeddingSource source_from(const std::string& name) {
  for (const auto& [k, v] : source_names)
    if (name == v) return k;
  throw Error(ErrorCode::parse, "bad embedding source '" + name + "'");
}

}  // namespace

std::string serialize_graph(const ExerciseGraph& graph) {
  json doc;
  doc["format"] = "discofeed.graph/1";
  doc["exercise_id"] = graph.exercise_id();
  doc["params"] = {{"eps", graph.params().eps},
                   {"min_samples", graph.params().min_samples},
                   {"dimension", graph.params().dimension}};
  // Every vector in a graph comes from one embedder.
  doc["embedding_source"] = source_name(graph.nodes().empty()
                                            ? EmbeddingSource::external
                                            : graph.nodes().front().centroid.source());
  json nodes = json::array();
  for (const ClusterNode& n : graph.nodes()) {
    json members = json::array();
    for (const ClusterMember& m : n.members) {
      members.push_back({{"text", m.text},
                         {"source", to_string(m.source)},
                         {"position", m.position},
                         {"solution_len", m.solution_len},
                         {"solution_index", m.solution_index},
                         {"embedding", vector_json(m.embedding)}});
    }
    nodes.push_back({{"id", n.id},
                     {"is_start", n.is_start},
                     {"is_terminal", n.is_terminal},
                     {"contains_reference", n.contains_reference},
                     {"promoted", n.promoted},
                     {"centroid", vector_json(n.centroid)},
                     {"members", members}});
  }
  doc["nodes"] = nodes;
  json edges = json::array();
  for (const RelationEdge& e : graph.edges()) {
    edges.push_back({{"source", e.source},
                     {"target", e.target},
                     {"relation", to_string(e.relation)},
                     {"weight", e.weight}});
  }
  doc["edges"] = edges;
  return doc.dump(1) + "\n";
}

ExerciseGraph parse_graph(std::string_view document) {
  try {
    const json doc = json::parse(document);
    if (doc.value("format", "") != "discofeed.graph/1") {
      throw Error(ErrorCode::parse, "not a discofeed graph document");
    }
    GraphParams params;
    params.eps = doc.at("params").at("eps").get<double>();
    params.min_samples = doc.at("params").at("min_samples").get<std::size_t>();
    params.dimension = doc.at("params").at("dimension").get<std::size_t>();

    const EmbeddingSource source = source_from(doc.at("embedding_source").get<std::string>());
    std::vector<ClusterNode> nodes;
    for (const json& jn : doc.at("nodes")) {
      ClusterNode n;
      n.id = jn.at("id").get<std::size_t>();
      n.is_start = jn.at("is_start").get<bool>();
      n.is_terminal = jn.at("is_terminal").get<bool>();
      n.contains_reference = jn.at("contains_reference").get<bool>();
      n.promoted = jn.at("promoted").get<bool>();
      n.centroid = vector_from(jn.at("centroid"), source);
      for (const json& jm : jn.at("members")) {
        ClusterMember m;
        m.text = jm.at("text").get<std::string>();
        const auto src = parse_solution_source(jm.at("source").get<std::string>());
        if (!src) throw Error(ErrorCode::parse, "bad member source");
        m.source = *src;
        m.position = jm.at("position").get<std::size_t>();
        m.solution_len = jm.at("solution_len").get<std::size_t>();
        m.solution_index = jm.at("solution_index").get<std::size_t>();
        m.embedding = vector_from(jm.at("embedding"), source);
        n.members.push_back(std::move(m));
      }
      nodes.push_back(std::move(n));
    }
    std::vector<RelationEdge> edges;
    for (const json& je : doc.at("edges")) {
      const auto rel = parse_category(je.at("relation").get<std::string>());
      if (!rel) throw Error(ErrorCode::parse, "bad edge relation");
      edges.push_back({je.at("source").get<std::size_t>(), je.at("target").get<std::size_t>(),
                       *rel, je.at("weight").get<std::size_t>()});
    }
    return ExerciseGraph(doc.at("exercise_id").get<std::string>(), params, std::move(nodes),
                         std::move(edges));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed graph document: ") + e.what());
  }
}

}  // namespace discofeed
