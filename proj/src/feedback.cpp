#include "discofeed/feedback.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

namespace {

std::string element_text(const Element& e) {
  switch (e.kind) {
    case Element::Kind::start: return std::string(start_marker);
    case Element::Kind::terminal: return std::string(terminal_marker);
    default: return text_util::strip_trailing_punct(e.text);
  }
}

Element node_element(const ExerciseGraph& graph, std::size_t id) {
  return {Element::Kind::cluster, static_cast<int>(id), graph.representative_text(id),
          std::nullopt, std::nullopt};
}

// Relations into each element: the student's own where the two units were
// adjacent in the attempt, otherwise the graph's dominant edge relation.
void refresh_relations(const ExerciseGraph& graph, std::vector<Element>& seq) {
  for (std::size_t k = 0; k < seq.size(); ++k) {
    Element& e = seq[k];
    if (e.sentinel()) {
      e.relation_in.reset();
      continue;
    }
    if (k == 0 || seq[k - 1].sentinel()) {
      e.relation_in.reset();
      continue;
    }
    const Element& prev = seq[k - 1];
    if (e.origin && prev.origin && *e.origin == *prev.origin + 1) continue;
    e.relation_in.reset();
    if (e.kind == Element::Kind::cluster && prev.kind == Element::Kind::cluster) {
      e.relation_in = graph.dominant_relation(static_cast<std::size_t>(prev.cluster),
                                              static_cast<std::size_t>(e.cluster));
    }
  }
}

Side element_side(const Element& e) {
  if (e.kind == Element::Kind::start) return Side::start();
  if (e.kind == Element::Kind::terminal) return Side::terminal();
  return Side::unit(e.text);
}

}  // namespace

std::string CandidateSolution::render() const {
  std::string out;
  for (const Element& e : elements) {
    std::string t = element_text(e);
    if (t.empty()) continue;
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string CandidateSolution::key() const {
  std::string k;
  for (const Element& e : elements) {
    k += std::to_string(static_cast<int>(e.kind));
    k += ':';
    k += std::to_string(e.cluster);
    k += ':';
    k += e.text;
    k += '\x1f';
  }
  return k;
}

std::vector<Element> attempt_elements(const ParsedAttempt& attempt) {
  const auto& edus = attempt.solution.edus;
  if (attempt.clusters.size() != edus.size()) {
    throw Error(ErrorCode::invalid_argument, "cluster assignment does not match units");
  }
  std::vector<Element> out;
  out.reserve(edus.size());
  for (std::size_t i = 0; i < edus.size(); ++i) {
    Element e;
    e.cluster = attempt.clusters[i];
    e.kind = e.cluster == outlier ? Element::Kind::passthrough : Element::Kind::cluster;
    e.text = edus[i].text;
    if (i > 0 && i - 1 < attempt.solution.relations.size()) {
      e.relation_in = attempt.solution.relations[i - 1].category;
    }
    e.origin = i;
    out.push_back(std::move(e));
  }
  return out;
}

std::size_t candidate_fanout_bound(const ExerciseGraph& graph,
                                   const std::vector<Element>& current) {
  std::size_t bound = 0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current[i].kind != Element::Kind::cluster) continue;
    const auto c = static_cast<std::size_t>(current[i].cluster);
    std::size_t adjacent = 0;
    if (i > 0 && !current[i - 1].sentinel()) ++adjacent;
    if (i + 1 < current.size() && !current[i + 1].sentinel()) ++adjacent;
    bound += adjacent * graph.neighbors(c).size();
    bound += graph.successors(c).size() + graph.predecessors(c).size();
    if (graph.node(c).is_start) ++bound;
    if (graph.node(c).is_terminal) ++bound;
  }
  return bound;
}

std::vector<CandidateSolution> generate_candidates(const ExerciseGraph& graph,
                                                   const std::vector<Element>& current) {
  std::vector<CandidateSolution> out;
  std::vector<std::string> seen;
  const std::string self = CandidateSolution{current, 0.0}.key();
  const auto emit = [&](std::vector<Element> seq) {
    refresh_relations(graph, seq);
    CandidateSolution c{std::move(seq), 0.0};
    std::string k = c.key();
    if (k == self || std::find(seen.begin(), seen.end(), k) != seen.end()) return;
    seen.push_back(std::move(k));
    out.push_back(std::move(c));
  };

  for (std::size_t i = 0; i < current.size(); ++i) {
    if (current[i].kind != Element::Kind::cluster) continue;
    const auto c = static_cast<std::size_t>(current[i].cluster);
    const ClusterNode& node = graph.node(c);

    for (const std::size_t j : {i - 1, i + 1}) {
      if (i == 0 && j == i - 1) continue;
      if (j >= current.size() || current[j].sentinel()) continue;
      for (std::size_t n : graph.neighbors(c)) {
        auto seq = current;
        seq[j] = node_element(graph, n);
        emit(std::move(seq));
      }
    }
    for (std::size_t s : graph.successors(c)) {
      auto seq = current;
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(i + 1), node_element(graph, s));
      emit(std::move(seq));
    }
    for (std::size_t p : graph.predecessors(c)) {
      auto seq = current;
      seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(i), node_element(graph, p));
      emit(std::move(seq));
    }
    if (node.is_start) {
      std::vector<Element> seq{Element::start_token(), node_element(graph, c)};
      seq.insert(seq.end(), current.begin() + static_cast<std::ptrdiff_t>(i + 1), current.end());
      emit(std::move(seq));
    }
    if (node.is_terminal) {
      std::vector<Element> seq(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(i));
      seq.push_back(node_element(graph, c));
      seq.push_back(Element::terminal_token());
      emit(std::move(seq));
    }
  }
  return out;
}

std::vector<std::pair<Side, Side>> scored_pairs(const CandidateSolution& candidate) {
  std::vector<const Element*> seq;
  for (const Element& e : candidate.elements)
    if (e.scored()) seq.push_back(&e);
  std::vector<std::pair<Side, Side>> pairs;
  if (seq.size() == 1 && !seq.front()->sentinel()) {
    pairs.emplace_back(Side::start(), element_side(*seq.front()));
    pairs.emplace_back(element_side(*seq.front()), Side::terminal());
    return pairs;
  }
  for (std::size_t k = 1; k < seq.size(); ++k) {
    pairs.emplace_back(element_side(*seq[k - 1]), element_side(*seq[k]));
  }
  return pairs;
}

CandidateSolution closed(const CandidateSolution& candidate) {
  CandidateSolution c = candidate;
  if (c.elements.empty() || c.elements.front().kind != Element::Kind::start) {
    c.elements.insert(c.elements.begin(), Element::start_token());
  }
  if (c.elements.back().kind != Element::Kind::terminal) {
    c.elements.push_back(Element::terminal_token());
  }
  return c;
}

double score_candidate(const TripletClassifier& classifier, const EmbeddingProvider& provider,
                       const CandidateSolution& candidate, std::size_t exercise) {
  const auto pairs = scored_pairs(candidate);
  if (pairs.empty()) throw Error(ErrorCode::invalid_argument, "candidate has no scorable pair");
  double sum = 0.0;
  for (const auto& [l, r] : pairs) sum += classifier.score(provider, l, r, exercise);
  return sum / static_cast<double>(pairs.size());
}

CandidateScorer classifier_scorer(const TripletClassifier& classifier,
                                  const EmbeddingProvider& provider, std::size_t exercise) {
  return [&classifier, &provider, exercise](const CandidateSolution& c, int) {
    return score_candidate(classifier, provider, c, exercise);
  };
}

LocalSearchResult local_search(const ExerciseGraph& graph, const std::vector<Element>& attempt,
                               const CandidateScorer& scorer, const LocalSearchOptions& options) {
  LocalSearchResult result;
  const bool matched = std::any_of(attempt.begin(), attempt.end(), [](const Element& e) {
    return e.kind == Element::Kind::cluster;
  });
  if (!matched) {
    result.no_match = true;
    return result;
  }

  result.trace.attempt_score = scorer(closed(CandidateSolution{attempt, 0.0}), 0);
  result.trace.top_score = result.trace.attempt_score;
  if (result.trace.attempt_score >= options.alpha) {
    result.already_correct = true;
    return result;
  }

  std::vector<Element> current = attempt;
  for (int it = 1; it <= options.max_iterations; ++it) {
    auto candidates = generate_candidates(graph, current);
    const std::size_t bound = candidate_fanout_bound(graph, current);
    if (candidates.size() > bound) {
      throw Error(ErrorCode::internal, "candidate fan-out exceeded its bound");
    }
    result.trace.candidate_bound += bound;
    if (candidates.empty()) break;
    result.trace.iterations = it;
    for (CandidateSolution& c : candidates) {
      c.score = scorer(closed(c), it);
      ++result.trace.candidates_scored;
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const CandidateSolution& a, const CandidateSolution& b) {
                       return a.score > b.score;
                     });
    const CandidateSolution& best = candidates.front();
    if (it == 1) {
      result.first_best = best;
      result.first_iteration = candidates;
    }
    if (!result.final_best || best.score > result.final_best->score) result.final_best = best;
    if (best.score >= options.alpha) break;
    current = best.elements;
  }
  if (!result.first_best) {
    result.no_match = true;
    return result;
  }
  result.trace.top_score = result.final_best->score;
  return result;
}

std::string_view to_string(DiagnosisKind k) noexcept {
  switch (k) {
    case DiagnosisKind::Missing: return "Missing";
    case DiagnosisKind::Excess: return "Excess";
    case DiagnosisKind::CorrectRelation: return "CorrectRelation";
    case DiagnosisKind::IncorrectRelation: return "IncorrectRelation";
    case DiagnosisKind::AlreadyCorrect: return "AlreadyCorrect";
    case DiagnosisKind::NoMatch: return "NoMatch";
  }
  return "NoMatch";
}

std::optional<DiagnosisKind> parse_diagnosis_kind(std::string_view name) noexcept {
  for (DiagnosisKind k : {DiagnosisKind::Missing, DiagnosisKind::Excess,
                          DiagnosisKind::CorrectRelation, DiagnosisKind::IncorrectRelation,
                          DiagnosisKind::AlreadyCorrect, DiagnosisKind::NoMatch}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

EditDiagnosis diagnose(const std::vector<Element>& attempt, const CandidateSolution& candidate) {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
  for (std::size_t i = 0; i < attempt.size(); ++i)
    if (attempt[i].kind == Element::Kind::cluster) a.push_back(i);
  const auto& cand = candidate.elements;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (cand[i].kind == Element::Kind::cluster) b.push_back(i);

  // lcs[i][j] = LCS length of a[i..] and b[j..]
  std::vector<std::vector<std::size_t>> lcs(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = a.size(); i-- > 0;) {
    for (std::size_t j = b.size(); j-- > 0;) {
      lcs[i][j] = attempt[a[i]].cluster == cand[b[j]].cluster
                      ? lcs[i + 1][j + 1] + 1
                      : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }

  EditDiagnosis d;
  std::vector<std::size_t> gap_a;
  std::vector<std::size_t> gap_b;
  const auto flush = [&] {
    const std::size_t subs = std::min(gap_a.size(), gap_b.size());
    for (std::size_t k = 0; k < subs; ++k) {
      const Element& old_e = attempt[gap_a[k]];
      const Element& new_e = cand[gap_b[k]];
      const bool same = old_e.relation_in == new_e.relation_in;
      d.edits.push_back({same ? DiagnosisKind::CorrectRelation : DiagnosisKind::IncorrectRelation,
                         gap_a[k], gap_b[k], new_e.relation_in});
    }
    for (std::size_t k = subs; k < gap_b.size(); ++k) {
      const std::size_t pos = gap_b[k];
      std::optional<Category> rel = cand[pos].relation_in;
      if (!rel && pos + 1 < cand.size()) rel = cand[pos + 1].relation_in;
      d.edits.push_back({DiagnosisKind::Missing, std::nullopt, pos, rel});
    }
    for (std::size_t k = subs; k < gap_a.size(); ++k) {
      d.edits.push_back({DiagnosisKind::Excess, gap_a[k], std::nullopt, std::nullopt});
    }
    gap_a.clear();
    gap_b.clear();
  };

  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (i < a.size() && j < b.size() && attempt[a[i]].cluster == cand[b[j]].cluster &&
        lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      flush();
      ++i;
      ++j;
    } else if (j < b.size() && (i == a.size() || lcs[i][j + 1] >= lcs[i + 1][j])) {
      gap_b.push_back(b[j++]);
    } else {
      gap_a.push_back(a[i++]);
    }
  }
  flush();

  // Unmatched student units only count when the candidate drops them.
  for (std::size_t p = 0; p < attempt.size(); ++p) {
    if (attempt[p].kind != Element::Kind::passthrough || !attempt[p].origin) continue;
    const bool kept = std::any_of(cand.begin(), cand.end(), [&](const Element& e) {
      return e.origin == attempt[p].origin;
    });
    if (!kept) d.edits.push_back({DiagnosisKind::Excess, p, std::nullopt, std::nullopt});
  }

  if (d.edits.empty()) {
    d.kind = DiagnosisKind::AlreadyCorrect;
    return d;
  }
  for (DiagnosisKind k : {DiagnosisKind::Missing, DiagnosisKind::IncorrectRelation,
                          DiagnosisKind::CorrectRelation, DiagnosisKind::Excess}) {
    const auto hit = std::find_if(d.edits.begin(), d.edits.end(),
                                  [k](const Edit& e) { return e.kind == k; });
    if (hit == d.edits.end()) continue;
    d.kind = k;
    if (k != DiagnosisKind::Excess) {
      for (const Edit& e : d.edits) {
        if (e.kind == k && e.relation) {
          d.relation = e.relation;
          break;
        }
      }
    }
    break;
  }
  return d;
}

const std::vector<std::string>& FeedbackTemplates::required_keys() {
  static const std::vector<std::string> keys = {
      "missing.Contingency", "missing.Expansion", "missing.Comparison", "missing.Temporal",
      "excess",              "correct_relation",  "incorrect_relation", "already_correct",
      "no_match",            "echo_prefix",       "cluster_based"};
  return keys;
}

FeedbackTemplates FeedbackTemplates::defaults() {
  FeedbackTemplates t;
  t.entries_ = {
      {"missing.Contingency", "Try supplying a reason for this idea."},
      {"missing.Expansion", "Try adding more detail to your answer."},
      {"missing.Comparison", "Try contrasting this with the alternative."},
      {"missing.Temporal", "Try describing when or in what order this happens."},
      {"excess", "Parts of your answer may be unnecessary. Try shortening it."},
      {"correct_relation",
       "You have the right kind of answer, but part of it is not right. Try rethinking that part."},
      {"incorrect_relation",
       "Check how the parts of your answer connect. Try linking your ideas differently."},
      {"already_correct", "That's correct!"},
      {"no_match", "Your answer is not correct. Please try again."},
      {"echo_prefix", "'{edu}' is correct."},
      {"cluster_based",
       "Try re-wording the other parts of your answer or adding additional details"},
  };
  return t;
}

FeedbackTemplates FeedbackTemplates::parse(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("templates: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "templates: expected an object");
  FeedbackTemplates t;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::parse, "templates: value of '" + key + "' is not a string");
    }
    t.entries_[key] = value.get<std::string>();
  }
  for (const std::string& key : required_keys()) {
    if (!t.entries_.count(key)) {
      throw Error(ErrorCode::parse, "templates: missing key '" + key + "'");
    }
  }
  return t;
}

FeedbackTemplates FeedbackTemplates::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

const std::string& FeedbackTemplates::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::not_found, "no template '" + key + "'");
  return it->second;
}

namespace {

std::string echo(const std::vector<std::string>& edus, const FeedbackTemplates& templates) {
  std::string out;
  const std::string& prefix = templates.get("echo_prefix");
  for (const std::string& edu : edus) {
    std::string line = prefix;
    for (std::size_t pos = line.find("{edu}"); pos != std::string::npos;
         pos = line.find("{edu}", pos + edu.size())) {
      line.replace(pos, 5, edu);
    }
    if (!out.empty()) out += ' ';
    out += line;
  }
  return out;
}

std::string join_message(std::string head, const std::string& tail) {
  if (head.empty()) return tail;
  return head + ' ' + tail;
}

}  // namespace

std::string render_feedback(const EditDiagnosis& diagnosis,
                            const std::vector<std::string>& correct_edus,
                            const FeedbackTemplates& templates) {
  switch (diagnosis.kind) {
    case DiagnosisKind::AlreadyCorrect: return templates.get("already_correct");
    case DiagnosisKind::NoMatch: return templates.get("no_match");
    case DiagnosisKind::Missing: {
      const Category rel = diagnosis.relation.value_or(Category::Expansion);
      return join_message(echo(correct_edus, templates),
                          templates.get("missing." + std::string(to_string(rel))));
    }
    case DiagnosisKind::Excess:
      return join_message(echo(correct_edus, templates), templates.get("excess"));
    case DiagnosisKind::CorrectRelation:
      return join_message(echo(correct_edus, templates), templates.get("correct_relation"));
    case DiagnosisKind::IncorrectRelation:
      return join_message(echo(correct_edus, templates), templates.get("incorrect_relation"));
  }
  return templates.get("no_match");
}

std::string_view to_string(FeedbackMode m) noexcept {
  switch (m) {
    case FeedbackMode::minimal: return "minimal";
    case FeedbackMode::cluster: return "cluster";
    case FeedbackMode::full: return "full";
  }
  return "full";
}

std::optional<FeedbackMode> parse_feedback_mode(std::string_view name) noexcept {
  for (FeedbackMode m : {FeedbackMode::minimal, FeedbackMode::cluster, FeedbackMode::full}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::vector<std::string> correct_edus(const ExerciseGraph& graph, const ParsedAttempt& attempt) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < attempt.clusters.size(); ++i) {
    const int c = attempt.clusters[i];
    if (c == outlier || !graph.node(static_cast<std::size_t>(c)).contains_reference) continue;
    std::string t = text_util::strip_trailing_punct(attempt.solution.edus[i].text);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

FeedbackResult minimal_feedback(const FeedbackTemplates& templates) {
  FeedbackResult r;
  r.mode = FeedbackMode::minimal;
  r.message = templates.get("no_match");
  return r;
}

FeedbackResult cluster_based_feedback(const ExerciseGraph& graph, const ParsedAttempt& attempt,
                                      const FeedbackTemplates& templates) {
  FeedbackResult r;
  r.mode = FeedbackMode::cluster;
  r.correct_edus = correct_edus(graph, attempt);
  if (r.correct_edus.empty()) {
    r.message = templates.get("no_match");
  } else {
    r.message = join_message(echo(r.correct_edus, templates), templates.get("cluster_based"));
  }
  return r;
}

FeedbackResult full_feedback(const ExerciseGraph& graph, const ParsedAttempt& attempt,
                             const CandidateScorer& scorer, const FeedbackTemplates& templates,
                             const LocalSearchOptions& options) {
  FeedbackResult r;
  r.mode = FeedbackMode::full;
  const std::vector<Element> elements = attempt_elements(attempt);
  const LocalSearchResult search = local_search(graph, elements, scorer, options);
  r.trace = search.trace;
  const std::size_t top = std::min<std::size_t>(5, search.first_iteration.size());
  r.top_candidates.assign(search.first_iteration.begin(),
                          search.first_iteration.begin() + static_cast<std::ptrdiff_t>(top));

  EditDiagnosis d;
  if (search.already_correct) {
    d.kind = DiagnosisKind::AlreadyCorrect;
  } else if (search.no_match) {
    d.kind = DiagnosisKind::NoMatch;
  } else {
    d = diagnose(elements, *search.first_best);
    // A top candidate that only rephrases matched units carries no concept
    // edit to report.
    if (d.kind == DiagnosisKind::AlreadyCorrect) d.kind = DiagnosisKind::NoMatch;
  }
  if (d.kind != DiagnosisKind::AlreadyCorrect && d.kind != DiagnosisKind::NoMatch) {
    r.correct_edus = correct_edus(graph, attempt);
  }
  r.message = render_feedback(d, r.correct_edus, templates);
  r.diagnosis = std::move(d);
  return r;
}

}  // namespace discofeed
