#include "discofeed/lexicon.hpp"

namespace discofeed {

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Temporal: return "Temporal";
    case Category::Contingency: return "Contingency";
    case Category::Comparison: return "Comparison";
    case Category::Expansion: return "Expansion";
  }
  return "Expansion";
}

std::optional<Category> parse_category(std::string_view name) noexcept {
  for (Category c : all_categories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

CueLexicon CueLexicon::defaults() {
  CueLexicon lex;
  lex.boundary_cues = {"because", "if",  "while", "when",  "after", "before",
                       "but",     "although", "so", "to", "which", "since"};
  lex.relation_cues = {
      {"because", Category::Contingency}, {"if", Category::Contingency},
      {"since", Category::Contingency},   {"to", Category::Expansion},
      {"and", Category::Expansion},       {"also", Category::Expansion},
      {"but", Category::Comparison},      {"while", Category::Comparison},
      {"although", Category::Comparison}, {"when", Category::Temporal},
      {"after", Category::Temporal},      {"before", Category::Temporal},
      {"then", Category::Temporal},
  };
  lex.attribution_prefixes = {{"i", "think"}, {"i", "believe"}, {"we", "know"}};
  lex.determiners = {"the",  "a",     "an",   "this", "that", "these", "those",
                     "my",   "your",  "his",  "her",  "its",  "our",   "their",
                     "some", "any",   "every", "each", "all", "no"};
  return lex;
}

}  // namespace discofeed
