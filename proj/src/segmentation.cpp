#include "discofeed/segmentation.hpp"

#include <cctype>
#include <fstream>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

namespace {

bool is_trailing_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case ')': case '"': case '\'':
      return true;
    default:
      return false;
  }
}

bool is_sentence_end(std::string_view token) {
  return token == "." || token == "?" || token == "!" || token == ";";
}

bool is_word(std::string_view token) {
  return !token.empty() && std::isalnum(static_cast<unsigned char>(token.front()));
}

bool is_punct_token(std::string_view token) {
  return token.size() == 1 && is_trailing_punct(token.front());
}

// "to" opens a clause only before a lowercase non-determiner word.
bool to_opens_clause(std::span<const Token> tokens, std::size_t i, const CueLexicon& lex) {
  if (i + 1 >= tokens.size()) return false;
  const std::string& next = tokens[i + 1].text;
  if (next.empty() || !std::isalpha(static_cast<unsigned char>(next.front()))) return false;
  if (std::isupper(static_cast<unsigned char>(next.front()))) return false;
  return !lex.determiners.contains(text_util::to_lower(next));
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text_util::is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !text_util::is_space(text[j])) ++j;

    std::size_t core_end = j;
    while (core_end > i && is_trailing_punct(text[core_end - 1])) --core_end;
    if (core_end > i) {
      tokens.push_back({std::string(text.substr(i, core_end - i)), i, core_end});
    }
    for (std::size_t p = core_end; p < j; ++p) {
      tokens.push_back({std::string(1, text[p]), p, p + 1});
    }
    i = j;
  }
  return tokens;
}

std::vector<int> parse_label_bits(std::string_view bits) {
  std::vector<int> labels;
  for (const std::string& field : text_util::split(text_util::trim(bits), ' ')) {
    if (field.empty()) continue;
    if (field == "0") {
      labels.push_back(0);
    } else if (field == "1") {
      labels.push_back(1);
    } else {
      throw Error(ErrorCode::parse, "boundary label must be 0 or 1, got '" + field + "'");
    }
  }
  return labels;
}

std::vector<Edu> apply_boundary_labels(std::string_view source, std::span<const Token> tokens,
                                       std::span<const int> labels) {
  if (tokens.empty()) throw Error(ErrorCode::empty_input, "no tokens to segment");
  if (labels.size() != tokens.size()) {
    throw Error(ErrorCode::invalid_argument,
                "label count " + std::to_string(labels.size()) + " does not match token count " +
                    std::to_string(tokens.size()));
  }
  if (labels[0] != 1) {
    throw Error(ErrorCode::invalid_argument, "first token must open an EDU");
  }

  std::vector<Edu> edus;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::invalid_argument, "boundary labels must be 0 or 1");
    }
    if (labels[i] == 1) {
      Edu edu;
      edu.first_token = i;
      edu.char_start = tokens[i].char_start;
      edus.push_back(edu);
    }
    Edu& open = edus.back();
    open.last_token = i;
    open.char_end = tokens[i].char_end;
  }
  for (std::size_t k = 0; k < edus.size(); ++k) {
    Edu& e = edus[k];
    if (e.char_end > source.size()) {
      throw Error(ErrorCode::invalid_argument, "token offsets exceed source text");
    }
    e.text = std::string(source.substr(e.char_start, e.char_end - e.char_start));
    e.position = k;
    e.solution_len = edus.size();
  }
  return edus;
}

std::vector<int> heuristic_boundary_labels(std::span<const Token> tokens, const CueLexicon& lex) {
  std::vector<int> labels(tokens.size(), 0);
  if (tokens.empty()) return labels;
  labels[0] = 1;
  // Units that start with a cue, sentence-initial ones included.
  std::vector<bool> cue_opened(tokens.size(), false);
  const auto is_cue = [&](std::size_t i) {
    return lex.boundary_cues.contains(text_util::to_lower(tokens[i].text));
  };
  cue_opened[0] = is_cue(0);

  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i].text;
    if (is_punct_token(tok)) continue;
    if (is_sentence_end(tokens[i - 1].text)) {
      labels[i] = 1;
      cue_opened[i] = is_cue(i);
      continue;
    }
    const std::string lower = text_util::to_lower(tok);
    if (!lex.boundary_cues.contains(lower)) continue;
    if (lower == "to" && !to_opens_clause(tokens, i, lex)) continue;
    // A cue right after another cue stays in the same unit ("but because").
    if (labels[i - 1] == 1 && cue_opened[i - 1]) continue;
    labels[i] = 1;
    cue_opened[i] = true;
  }

  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (labels[j] != 1) continue;
    for (const auto& prefix : lex.attribution_prefixes) {
      const std::size_t k = prefix.size();
      if (k == 0 || j + k >= tokens.size()) continue;
      bool match = true;
      for (std::size_t m = 0; m < k && match; ++m) {
        match = text_util::to_lower(tokens[j + m].text) == prefix[m] && (m == 0 || labels[j + m] == 0);
      }
      if (match && is_word(tokens[j + k].text)) {
        labels[j + k] = 1;
        break;
      }
    }
  }
  return labels;
}

std::vector<Edu> segment_heuristic(std::string_view text, const CueLexicon& lex) {
  if (text_util::trim(text).empty()) throw Error(ErrorCode::empty_input, "empty text");
  const std::vector<Token> tokens = tokenize(text);
  const std::vector<int> labels = heuristic_boundary_labels(tokens, lex);
  return apply_boundary_labels(text, tokens, labels);
}

std::vector<int> labels_from_edus(std::span<const Edu> edus, std::size_t token_count) {
  std::vector<int> labels(token_count, 0);
  for (const Edu& e : edus) {
    if (e.first_token < token_count) labels[e.first_token] = 1;
  }
  return labels;
}

std::vector<LabeledText> load_boundary_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open boundary label file: " + path);
  std::vector<LabeledText> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const auto fields = text_util::split(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) +
                                        ": expected <text>\\t<bits>");
    }
    try {
      rows.push_back({fields[0], parse_label_bits(fields[1])});
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (tokenize(fields[0]).size() != rows.back().labels.size()) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) +
                                        ": label count does not match token count");
    }
  }
  return rows;
}

}  // namespace discofeed
