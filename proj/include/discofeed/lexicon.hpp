#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace discofeed {

// Top-level discourse relation classes. Declaration order is the tie-break
// order used wherever categories compete.
enum class Category { Temporal = 0, Contingency = 1, Comparison = 2, Expansion = 3 };

inline constexpr std::size_t category_count = 4;
inline constexpr std::array<Category, category_count> all_categories = {
    Category::Temporal, Category::Contingency, Category::Comparison, Category::Expansion};

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view name) noexcept;

// Cue words and attribution prefixes driving segmentation and the explicit
// relation path. Plain data so it can come from configuration.
struct CueLexicon {
  // Tokens that open a new unit.
  std::set<std::string> boundary_cues;
  // Cue word -> relation category for explicit relations.
  std::map<std::string, Category> relation_cues;
  // Lowercased word sequences that become their own unit when they open one.
  std::vector<std::vector<std::string>> attribution_prefixes;
  // Words after which "to" is treated as a preposition, not a clause opener.
  std::set<std::string> determiners;

  static CueLexicon defaults();
};

}  // namespace discofeed
