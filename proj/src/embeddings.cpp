#include "discofeed/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "discofeed/error.hpp"
#include "text_util.hpp"

namespace discofeed {

namespace {

std::vector<double> normalized(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty embedding vector");
  }
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_argument, "non-finite embedding value");
    }
    sq += v * v;
  }
  if (sq == 0.0) {
    throw Error(ErrorCode::invalid_argument, "zero embedding vector cannot be normalized");
  }
  const double norm = std::sqrt(sq);
  for (double& v : values) v /= norm;
  return values;
}

bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values, EmbeddingSource source)
    : values_(normalized(std::move(values))), source_(source) {}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values, EmbeddingSource source) {
  EmbeddingVector v;
  v.values_ = std::move(values);
  v.source_ = source;
  if (v.values_.empty() || !is_unit_norm(v)) {
    throw Error(ErrorCode::invalid_argument, "vector is not unit-normalized");
  }
  return v;
}

EmbeddingVector EmbeddingVector::negated() const {
  EmbeddingVector out = *this;
  for (double& v : out.values_) v = -v;
  return out;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
  }
  // Summation order is fixed so that (a, b) and (b, a) agree bit for bit.
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) dot += a[i] * b[i];
  if (dot > 1.0) dot = 1.0;
  if (dot < -1.0) dot = -1.0;
  return dot;
}

bool is_unit_norm(const EmbeddingVector& v, double tolerance) {
  double sq = 0.0;
  for (double x : v.values()) sq += x * x;
  return std::abs(std::sqrt(sq) - 1.0) <= tolerance;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) {
    throw Error(ErrorCode::invalid_argument, "embedding dimension must be positive");
  }
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
  const std::string_view trimmed = text_util::trim(text);
  if (trimmed.empty()) throw Error(ErrorCode::empty_input, "empty unit");

  std::string lower(trimmed);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::vector<std::string> tokens;
  std::string current;
  for (char c : lower) {
    if (is_token_byte(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) tokens.push_back(lower);

  std::vector<double> counts(dimension_, 0.0);
  for (const std::string& token : tokens) {
    counts[fnv1a64("w:" + token) % dimension_] += 1.0;
    for (std::size_t i = 0; i + 3 <= token.size(); ++i) {
      counts[fnv1a64("t:" + token.substr(i, 3)) % dimension_] += 1.0;
    }
  }
  return EmbeddingVector(std::move(counts), EmbeddingSource::builtin_hash);
}

void EmbeddingStore::insert(std::string text, const std::vector<double>& values) {
  if (dimension_ == 0) dimension_ = values.size();
  if (values.size() != dimension_) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
  }
  entries_.insert_or_assign(std::string(text_util::trim(text)),
                            EmbeddingVector(values, EmbeddingSource::store));
}

const EmbeddingVector* EmbeddingStore::find(std::string_view text) const {
  auto it = entries_.find(std::string(text_util::trim(text)));
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingStore load_store(const std::string& path, std::size_t expected_dimension) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open embedding store: " + path);

  EmbeddingStore store(expected_dimension);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text_util::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) +
                                        ": expected exactly one tab between text and vector");
    }
    const std::string text = line.substr(0, tab);
    if (text_util::trim(text).empty()) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": empty text");
    }
    std::vector<double> values;
    try {
      values = text_util::parse_doubles(std::string_view(line).substr(tab + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (store.dimension() != 0 && values.size() != store.dimension()) {
      throw Error(ErrorCode::dimension_mismatch,
                  path + ":" + std::to_string(line_no) + ": dimension mismatch (expected " +
                      std::to_string(store.dimension()) + ", got " +
                      std::to_string(values.size()) + ")");
    }
    try {
      store.insert(text, values);
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

StoreEmbedder::StoreEmbedder(std::shared_ptr<const EmbeddingStore> store, std::size_t dimension)
    : store_(std::move(store)), fallback_(dimension) {
  if (store_ && store_->dimension() != 0 && store_->dimension() != dimension) {
    throw Error(ErrorCode::dimension_mismatch, "dimension mismatch");
  }
}

EmbeddingVector StoreEmbedder::embed(std::string_view text) const {
  if (text_util::trim(text).empty()) throw Error(ErrorCode::empty_input, "empty unit");
  if (store_) {
    if (const EmbeddingVector* hit = store_->find(text)) return *hit;
  }
  return fallback_.embed(text);
}

}  // namespace discofeed
