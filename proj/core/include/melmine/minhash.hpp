#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "melmine/jaccard.hpp"

namespace melmine {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

struct MinHashConfig {
  std::size_t signature_length = 256;
  std::size_t bands = 32;
  std::size_t rows_per_band = 8;
  std::uint64_t seed = 5;
};

/// Throws Error{kBadBandConfig} unless bands * rows_per_band == signature_length > 0.
void validate(const MinHashConfig& config);

/// h(x) = (a·x + b) mod (2^61 − 1).
struct HashCoefficients {
  std::uint64_t a = 1;
  std::uint64_t b = 0;
};

/// MinHash signatures with banded LSH buckets.
///
/// Entities without attributes get a sentinel signature (every position equal to
/// 2^61 + ordinal). Sentinels lie outside the hash range and are unique per entity, so they
/// never agree with any other signature position.
class MinHashIndex {
 public:
  MinHashIndex() = default;

  const MinHashConfig& config() const noexcept { return config_; }
  std::uint64_t kb_fingerprint() const noexcept { return kb_fingerprint_; }
  std::size_t size() const noexcept { return signatures_.rows(); }
  const std::vector<HashCoefficients>& coefficients() const noexcept { return coefficients_; }
  std::span<const std::uint64_t> signature(Ordinal i) const { return signatures_.row(i); }
  const RowMatrix<std::uint64_t>& signatures() const noexcept { return signatures_; }

  /// Entities sharing band `band`'s bucket with entity i (including i).
  std::span<const Ordinal> bucket(std::size_t band, Ordinal i) const;
  std::size_t bucket_count(std::size_t band) const { return buckets_.at(band).size(); }

  /// Rebuilds bucket maps from stored signatures (used after deserialization).
  static MinHashIndex from_signatures(const MinHashConfig& config, std::uint64_t kb_fingerprint,
                                      std::vector<HashCoefficients> coefficients,
                                      RowMatrix<std::uint64_t> signatures);

 private:
  friend MinHashIndex build_minhash_index(const KnowledgeBase&, const MinHashConfig&, unsigned);

  void rebuild_buckets();
  std::uint64_t band_key(Ordinal i, std::size_t band) const;

  MinHashConfig config_;
  std::uint64_t kb_fingerprint_ = 0;
  std::vector<HashCoefficients> coefficients_;
  RowMatrix<std::uint64_t> signatures_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<Ordinal>>> buckets_;
};

std::vector<HashCoefficients> draw_coefficients(std::size_t count, std::uint64_t seed);

/// Stable 64-bit hash of an attribute id, reduced into the hash field.
std::uint64_t attribute_key(AttributeId id) noexcept;

MinHashIndex build_minhash_index(const KnowledgeBase& kb, const MinHashConfig& config,
                                 unsigned threads = 1);

/// Fraction of agreeing signature positions.
double estimate_jaccard(const MinHashIndex& index, Ordinal i, Ordinal j);

/// LSH candidate generation with exact rerank. Candidates are the union of i's buckets minus
/// i, scored with exact Jaccard. When fewer than k candidates exist, the remainder is drawn
/// uniformly (seeded per entity from the index seed) from the other entities and scored
/// exactly; the merged list keeps the table ordering.
/// Throws Error{kIndexMismatch} if the index was built on a different KB.
NegativeTable build_approx_table(const KnowledgeBase& kb, std::size_t k,
                                 const MinHashIndex& index, unsigned threads = 1);

}  // namespace melmine
