#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace discofeed {

enum class EmbeddingSource { builtin_hash, store, external };

// Unit-length semantic vector for one discourse unit. The constructor
// normalizes, so every instance satisfies |v| = 1.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values,
                           EmbeddingSource source = EmbeddingSource::external);

  // Keeps the values bit-exact; they must already have unit norm within 1e-9.
  static EmbeddingVector from_unit(std::vector<double> values,
                                   EmbeddingSource source = EmbeddingSource::external);

  std::size_t dimension() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  EmbeddingSource source() const noexcept { return source_; }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }

  EmbeddingVector negated() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
  EmbeddingSource source_ = EmbeddingSource::external;
};

// Dot product of two unit vectors. Throws on dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  return 1.0 - cosine_similarity(a, b);
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Feature-hashing fallback encoder.
//
// The text is lowercased (ASCII only) and split into tokens: maximal runs of
// ASCII alphanumerics or bytes >= 0x80. Every token t adds 1 to bucket
// fnv1a64("w:" + t) mod d and every character trigram g of t adds 1 to bucket
// fnv1a64("t:" + g) mod d. A text with no tokens is hashed as a single token
// made of its trimmed, lowercased bytes. The counts are L2-normalized.
class HashEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t default_dimension = 128;

  explicit HashEmbedder(std::size_t dimension = default_dimension);

  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Precomputed vectors keyed by exact (whitespace-trimmed) text.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dimension) : dimension_(dimension) {}

  // Dimension 0 means "not yet fixed"; the first insert fixes it.
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void insert(std::string text, const std::vector<double>& values);
  const EmbeddingVector* find(std::string_view text) const;

 private:
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, EmbeddingVector> entries_;
};

// Reads `<text>\t<v1> <v2> ... <vd>` rows. expected_dimension = 0 accepts the
// dimension of the first row.
EmbeddingStore load_store(const std::string& path, std::size_t expected_dimension = 0);

// Store lookups with the hash encoder as fallback for unknown texts.
class StoreEmbedder final : public EmbeddingProvider {
 public:
  StoreEmbedder(std::shared_ptr<const EmbeddingStore> store, std::size_t dimension);

  std::size_t dimension() const override { return fallback_.dimension(); }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::shared_ptr<const EmbeddingStore> store_;
  HashEmbedder fallback_;
};

bool is_unit_norm(const EmbeddingVector& v, double tolerance = 1e-9);

}  // namespace discofeed
