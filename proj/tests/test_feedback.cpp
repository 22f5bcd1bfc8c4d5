#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "discofeed/error.hpp"
#include "discofeed/feedback.hpp"
#include "fixtures.hpp"
#include "temp_dir.hpp"

using namespace discofeed;

namespace {

Element cl(int id, std::string text, std::optional<Category> rel = std::nullopt,
           std::optional<std::size_t> origin = std::nullopt) {
  return {Element::Kind::cluster, id, std::move(text), rel, origin};
}

Element pass(std::string text, std::size_t origin) {
  return {Element::Kind::passthrough, outlier, std::move(text), std::nullopt, origin};
}

CandidateScorer oracle_scorer(const ExerciseGraph& g) {
  return [&g](const CandidateSolution& c, int) { return fixture::graph_validity(g, c); };
}

std::vector<std::string> renders(const std::vector<CandidateSolution>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.render());
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("attempt elements come from parsing and matching") {
  const fixture::Fig3 f;
  const auto a = fixture::attempt(*f.embedder, f.graph, "I think it's classification");
  const auto e = attempt_elements(a);
  REQUIRE(e.size() == 2);
  CHECK(e[0].kind == Element::Kind::passthrough);
  CHECK(e[0].text == "I think");
  CHECK(e[1].kind == Element::Kind::cluster);
  CHECK(e[1].cluster == 0);
  CHECK(e[1].origin == std::size_t{1});

  ParsedAttempt bad = a;
  bad.clusters.pop_back();
  CHECK_THROWS_AS(attempt_elements(bad), Error);
}

TEST_CASE("candidates for the fixture attempt") {
  const fixture::Fig3 f;
  const auto e = attempt_elements(fixture::attempt(*f.embedder, f.graph, "I think it's classification"));
  const auto cands = generate_candidates(f.graph, e);
  const auto r = renders(cands);
  CHECK(contains(r, "<START> classification"));
  CHECK(contains(r, "I think it's classification because it uses categories"));
  CHECK(contains(r, "I think it's classification because the outputs are discrete"));
  // Neighbour swaps replace the unit before the match.
  CHECK(contains(r, "because it uses categories it's classification"));
  CHECK(cands.size() <= candidate_fanout_bound(f.graph, e));
  std::set<std::string> keys;
  for (const auto& c : cands) keys.insert(c.key());
  CHECK(keys.size() == cands.size());
  CHECK(keys.count(CandidateSolution{e, 0}.key()) == 0);

  // Inserted successors take the graph's relation.
  for (const auto& c : cands) {
    if (c.render() != "I think it's classification because it uses categories") continue;
    REQUIRE(c.elements.size() == 3);
    CHECK(c.elements[2].relation_in == Category::Contingency);
    CHECK_FALSE(c.elements[2].origin.has_value());
  }
}

TEST_CASE("candidate generation on a toy chain drops duplicates") {
  const fixture::Toy toy;
  const auto& g = toy.graph;
  // A cluster at the start and at the end of the same sequence.
  std::vector<Element> seq;
  for (std::size_t i = 0; i < 3; ++i) {
    const int id = static_cast<int>(i == 2 ? 0 : i);
    seq.push_back(cl(id, g.representative_text(static_cast<std::size_t>(id)), std::nullopt, i));
  }
  const auto cands = generate_candidates(g, seq);
  CHECK(!cands.empty());
  CHECK(cands.size() <= candidate_fanout_bound(g, seq));
  std::set<std::string> keys;
  for (const auto& c : cands) {
    CHECK(keys.insert(c.key()).second);
    for (std::size_t k = 1; k + 1 < c.elements.size(); ++k) CHECK_FALSE(c.elements[k].sentinel());
  }
}

TEST_CASE("render and closing") {
  CandidateSolution c{{Element::start_token(), cl(0, "classification,"), pass("yes.", 1),
                       Element::terminal_token()},
                      0};
  CHECK(c.render() == "<START> classification yes <TERMINAL>");
  const CandidateSolution open{{cl(0, "a"), cl(1, "b")}, 0};
  const auto shut = closed(open);
  REQUIRE(shut.elements.size() == 4);
  CHECK(shut.elements.front().kind == Element::Kind::start);
  CHECK(shut.elements.back().kind == Element::Kind::terminal);
  CHECK(closed(shut).elements.size() == 4);
}

TEST_CASE("scored pairs skip unmatched units and wrap single units") {
  const CandidateSolution lone{{cl(0, "a")}, 0};
  const auto p1 = scored_pairs(lone);
  REQUIRE(p1.size() == 2);
  CHECK(p1[0].first == Side::start());
  CHECK(p1[1].second == Side::terminal());

  const CandidateSolution mixed{{Element::start_token(), pass("x", 0), cl(0, "a"), cl(1, "b"),
                                 Element::terminal_token()},
                                0};
  const auto p2 = scored_pairs(mixed);
  REQUIRE(p2.size() == 3);
  CHECK(p2[0] == std::pair{Side::start(), Side::unit("a")});
  CHECK(p2[1] == std::pair{Side::unit("a"), Side::unit("b")});
  CHECK(p2[2] == std::pair{Side::unit("b"), Side::terminal()});
}

TEST_CASE("candidate score is the mean of pairwise scores") {
  const fixture::Fig3 f;
  TripletClassifier clf(8, 1, 12, 5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 0.7);
  for (double& w : clf.parameters()) w = g(rng);
  const auto e = attempt_elements(fixture::attempt(*f.embedder, f.graph, "I think it's classification"));
  for (const auto& c : generate_candidates(f.graph, e)) {
    const auto shut = closed(c);
    double sum = 0;
    const auto pairs = scored_pairs(shut);
    for (const auto& [l, r] : pairs) sum += clf.score(*f.embedder, l, r, 0);
    const double expected = sum / static_cast<double>(pairs.size());
    CHECK(std::abs(score_candidate(clf, *f.embedder, shut, 0) - expected) <= 1e-15);
  }
  CHECK_THROWS_AS(score_candidate(clf, *f.embedder, CandidateSolution{{pass("x", 0)}, 0}, 0), Error);
}

TEST_CASE("local search on the fixture attempt") {
  const fixture::Fig3 f;
  const auto e = attempt_elements(fixture::attempt(*f.embedder, f.graph, "I think it's classification"));
  const auto res = local_search(f.graph, e, oracle_scorer(f.graph), {});
  CHECK_FALSE(res.no_match);
  CHECK_FALSE(res.already_correct);
  CHECK(res.trace.attempt_score == doctest::Approx(0.5));
  REQUIRE(res.first_best);
  CHECK(res.first_best->render() == "I think it's classification because it uses categories");
  CHECK(res.first_best->score == 1.0);
  CHECK(res.trace.iterations == 1);  // the first round already clears alpha
  const auto d = diagnose(e, *res.first_best);
  CHECK(d.kind == DiagnosisKind::Missing);
  CHECK(d.relation == Category::Contingency);
  for (std::size_t k = 1; k < res.first_iteration.size(); ++k) {
    CHECK(res.first_iteration[k - 1].score >= res.first_iteration[k].score);
  }
}

TEST_CASE("a high attempt score short-circuits the search") {
  const fixture::Fig3 f;
  const auto e = attempt_elements(fixture::attempt(
      *f.embedder, f.graph, "it's a classification task, because it uses categories"));
  int calls = 0;
  const CandidateScorer s = [&](const CandidateSolution& c, int it) {
    ++calls;
    CHECK(it == 0);
    return fixture::graph_validity(f.graph, c);
  };
  const auto res = local_search(f.graph, e, s, {});
  CHECK(res.already_correct);
  CHECK(calls == 1);
  CHECK(res.trace.candidates_scored == 0);
}

TEST_CASE("unmatched attempts give no match") {
  const fixture::Fig3 f;
  const auto res = local_search(f.graph, {pass("hello", 0)}, oracle_scorer(f.graph), {});
  CHECK(res.no_match);
  const auto a = fixture::attempt(*f.embedder, f.graph, "I think");
  const auto fb = full_feedback(f.graph, a, oracle_scorer(f.graph), FeedbackTemplates::defaults(), {});
  REQUIRE(fb.diagnosis);
  CHECK(fb.diagnosis->kind == DiagnosisKind::NoMatch);
  CHECK(fb.message == "Your answer is not correct. Please try again.");
}

TEST_CASE("iterations never exceed the limit") {
  const fixture::Toy toy;
  const auto& g = toy.graph;
  std::mt19937_64 rng(4);
  for (int limit = 0; limit <= 4; ++limit) {
    std::vector<int> seen;
    const CandidateScorer s = [&](const CandidateSolution&, int it) {
      seen.push_back(it);
      return std::uniform_real_distribution<double>(0.0, 0.9)(rng);
    };
    const std::vector<Element> seq{cl(0, g.representative_text(0), std::nullopt, 0)};
    const auto res = local_search(g, seq, s, {0.95, limit});
    CHECK(res.trace.iterations <= limit);
    for (int it : seen) CHECK(it <= limit);
    CHECK(res.trace.candidates_scored <= res.trace.candidate_bound);
    if (limit == 0) CHECK(res.no_match);
  }
}

TEST_CASE("diagnosis ignores scores after the first round") {
  const fixture::Fig3 f;
  const auto a = fixture::attempt(*f.embedder, f.graph, "I think it's classification");
  const auto base = full_feedback(f.graph, a, oracle_scorer(f.graph), FeedbackTemplates::defaults(),
                                  {1.5, 2});
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const CandidateScorer s = [&](const CandidateSolution& c, int it) {
      if (it >= 2) return std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
      return fixture::graph_validity(f.graph, c);
    };
    const auto fb = full_feedback(f.graph, a, s, FeedbackTemplates::defaults(), {1.5, 2});
    CHECK(fb.trace.iterations == 2);
    REQUIRE(fb.diagnosis);
    CHECK(fb.diagnosis->kind == base.diagnosis->kind);
    CHECK(fb.diagnosis->relation == base.diagnosis->relation);
    CHECK(fb.message == base.message);
  }
}

TEST_CASE("diagnose: single edits") {
  const std::vector<Element> attempt{cl(0, "a", std::nullopt, 0), cl(1, "b", Category::Contingency, 1)};

  SUBCASE("missing") {
    const CandidateSolution c{{attempt[0], attempt[1], cl(2, "c", Category::Temporal)}, 0};
    const auto d = diagnose(attempt, c);
    CHECK(d.kind == DiagnosisKind::Missing);
    CHECK(d.relation == Category::Temporal);
    REQUIRE(d.edits.size() == 1);
    CHECK(d.edits[0].candidate_position == std::size_t{2});
  }
  SUBCASE("missing unit at the head takes the next relation") {
    const CandidateSolution c{{Element::start_token(), cl(2, "c"), cl(0, "a", Category::Comparison, 0),
                               attempt[1]},
                              0};
    const auto d = diagnose(attempt, c);
    CHECK(d.kind == DiagnosisKind::Missing);
    CHECK(d.relation == Category::Comparison);
  }
  SUBCASE("excess") {
    const CandidateSolution c{{attempt[0]}, 0};
    const auto d = diagnose(attempt, c);
    CHECK(d.kind == DiagnosisKind::Excess);
    CHECK_FALSE(d.relation.has_value());
    REQUIRE(d.edits.size() == 1);
    CHECK(d.edits[0].attempt_position == std::size_t{1});
  }
  SUBCASE("substitution keeping the relation") {
    const CandidateSolution c{{attempt[0], cl(3, "d", Category::Contingency)}, 0};
    CHECK(diagnose(attempt, c).kind == DiagnosisKind::CorrectRelation);
  }
  SUBCASE("substitution changing the relation") {
    const CandidateSolution c{{attempt[0], cl(3, "d", Category::Expansion)}, 0};
    const auto d = diagnose(attempt, c);
    CHECK(d.kind == DiagnosisKind::IncorrectRelation);
    CHECK(d.relation == Category::Expansion);
  }
  SUBCASE("sentinels and re-phrasings are not edits") {
    const CandidateSolution c{{Element::start_token(), cl(0, "other text"), attempt[1],
                               Element::terminal_token()},
                              0};
    const auto d = diagnose(attempt, c);
    CHECK(d.kind == DiagnosisKind::AlreadyCorrect);
    CHECK(d.edits.empty());
  }
}

TEST_CASE("diagnose: unmatched units and precedence") {
  const std::vector<Element> attempt{pass("I think", 0), cl(0, "a", std::nullopt, 1)};
  const CandidateSolution dropped{{Element::start_token(), cl(0, "a")}, 0};
  CHECK(diagnose(attempt, dropped).kind == DiagnosisKind::Excess);
  const CandidateSolution kept{{attempt[0], attempt[1], cl(1, "b", Category::Contingency)}, 0};
  const auto d = diagnose(attempt, kept);
  CHECK(d.kind == DiagnosisKind::Missing);
  CHECK(d.edits.size() == 1);
  // Missing outranks the dropped unit's Excess.
  const CandidateSolution both{{cl(0, "a"), cl(1, "b", Category::Contingency)}, 0};
  const auto d2 = diagnose(attempt, both);
  CHECK(d2.kind == DiagnosisKind::Missing);
  CHECK(d2.edits.size() == 2);

  const std::vector<Element> three{cl(0, "a", {}, 0), cl(1, "b", Category::Expansion, 1),
                                   cl(2, "c", Category::Expansion, 2)};
  const CandidateSolution mixed{{cl(0, "a"), cl(4, "x", Category::Temporal), cl(5, "y", Category::Expansion)}, 0};
  CHECK(diagnose(three, mixed).kind == DiagnosisKind::IncorrectRelation);
}

TEST_CASE("diagnosis names round-trip") {
  for (auto k : {DiagnosisKind::Missing, DiagnosisKind::Excess, DiagnosisKind::CorrectRelation,
                 DiagnosisKind::IncorrectRelation, DiagnosisKind::AlreadyCorrect, DiagnosisKind::NoMatch}) {
    CHECK(parse_diagnosis_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_diagnosis_kind("missing").has_value());
  for (auto m : {FeedbackMode::minimal, FeedbackMode::cluster, FeedbackMode::full}) {
    CHECK(parse_feedback_mode(to_string(m)) == m);
  }
  CHECK_FALSE(parse_feedback_mode("verbose").has_value());
}

TEST_CASE("rendering messages") {
  const auto t = FeedbackTemplates::defaults();
  EditDiagnosis d;
  d.kind = DiagnosisKind::Missing;
  d.relation = Category::Contingency;
  CHECK(render_feedback(d, {"it's a classification task"}, t) ==
        "'it's a classification task' is correct. Try supplying a reason for this idea.");
  CHECK(render_feedback(d, {}, t) == "Try supplying a reason for this idea.");
  CHECK(render_feedback(d, {"a", "b"}, t) == "'a' is correct. 'b' is correct. Try supplying a reason for this idea.");
  d.relation.reset();
  CHECK(render_feedback(d, {}, t) == "Try adding more detail to your answer.");
  d.kind = DiagnosisKind::Excess;
  CHECK(render_feedback(d, {"a"}, t) == "'a' is correct. Parts of your answer may be unnecessary. Try shortening it.");
  d.kind = DiagnosisKind::AlreadyCorrect;
  CHECK(render_feedback(d, {"a"}, t) == "That's correct!");
  d.kind = DiagnosisKind::NoMatch;
  CHECK(render_feedback(d, {"a"}, t) == "Your answer is not correct. Please try again.");
}

TEST_CASE("template files") {
  const auto fixture_templates = FeedbackTemplates::load(fixture::data("templates.json"));
  for (const auto& key : FeedbackTemplates::required_keys()) {
    CHECK(fixture_templates.get(key) == FeedbackTemplates::defaults().get(key));
  }
  TempDir dir;
  CHECK_THROWS_AS(FeedbackTemplates::load(dir.path() + "/none.json"), Error);
  CHECK_THROWS_AS(FeedbackTemplates::load(dir.file("a.json", "[1]")), Error);
  CHECK_THROWS_AS(FeedbackTemplates::load(dir.file("b.json", "{\"excess\": \"x\"}")), Error);
  CHECK_THROWS_AS(FeedbackTemplates::load(dir.file("c.json", "{oops")), Error);
  try {
    FeedbackTemplates::load(dir.file("d.json", "{\"excess\": \"x\"}"));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("missing key") != std::string::npos);
  }
  CHECK_THROWS_AS(FeedbackTemplates::defaults().get("nope"), Error);
}

TEST_CASE("baselines") {
  const fixture::Fig3 f;
  const auto t = FeedbackTemplates::defaults();
  CHECK(minimal_feedback(t).message == "Your answer is not correct. Please try again.");
  CHECK_FALSE(minimal_feedback(t).diagnosis.has_value());
  const auto a = fixture::attempt(*f.embedder, f.graph, "I think it's a classification task.");
  CHECK(correct_edus(f.graph, a) == std::vector<std::string>{"it's a classification task"});
  const auto c = cluster_based_feedback(f.graph, a, t);
  CHECK(c.mode == FeedbackMode::cluster);
  CHECK(c.message == "'it's a classification task' is correct. Try re-wording the other parts of "
                     "your answer or adding additional details");
  CHECK(cluster_based_feedback(f.graph, fixture::attempt(*f.embedder, f.graph, "I think"), t).message ==
        t.get("no_match"));
}

TEST_CASE("full feedback on the fixture attempt") {
  const fixture::Fig3 f;
  const auto a = fixture::attempt(*f.embedder, f.graph, "I think it's a classification task.");
  const auto fb = full_feedback(f.graph, a, oracle_scorer(f.graph),
                                FeedbackTemplates::load(fixture::data("templates.json")), {});
  REQUIRE(fb.diagnosis);
  CHECK(fb.diagnosis->kind == DiagnosisKind::Missing);
  CHECK(fb.diagnosis->relation == Category::Contingency);
  CHECK(fb.message == "'it's a classification task' is correct. Try supplying a reason for this idea.");
  CHECK(fb.top_candidates.size() <= 5);
  CHECK(!fb.top_candidates.empty());
}
