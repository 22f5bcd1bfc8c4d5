#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "discofeed/lexicon.hpp"

namespace discofeed {

struct Token {
  std::string text;
  std::size_t char_start = 0;  // byte offsets into the source, [start, end)
  std::size_t char_end = 0;
};

// One elementary discourse unit. `text` is the exact source substring from
// the first token's start to the last token's end.
struct Edu {
  std::string text;
  std::size_t first_token = 0;
  std::size_t last_token = 0;  // inclusive
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t position = 0;
  std::size_t solution_len = 0;
};

// Whitespace tokenization with trailing punctuation split off, one token per
// punctuation character.
std::vector<Token> tokenize(std::string_view text);

// Builds units from per-token start flags (1 opens a unit). labels[0] must be
// 1 and the sizes must match.
std::vector<Edu> apply_boundary_labels(std::string_view source, std::span<const Token> tokens,
                                       std::span<const int> labels);

// Rule-based boundary labelling: sentence starts, cue tokens, and
// attribution prefixes.
std::vector<int> heuristic_boundary_labels(std::span<const Token> tokens, const CueLexicon& lex);

std::vector<Edu> segment_heuristic(std::string_view text, const CueLexicon& lex);

// Inverse of apply_boundary_labels.
std::vector<int> labels_from_edus(std::span<const Edu> edus, std::size_t token_count);

// Rows of `<text>\t<bit bit ...>` as produced by an external segmenter.
struct LabeledText {
  std::string text;
  std::vector<int> labels;
};
std::vector<LabeledText> load_boundary_labels(const std::string& path);

std::vector<int> parse_label_bits(std::string_view bits);

}  // namespace discofeed
