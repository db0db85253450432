#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "melmine/kb.hpp"

namespace melmine {

/// |a ∩ b| / |a ∪ b| over sorted id sets. Any empty operand yields 0: an attribute-less
/// entity carries no evidence of similarity.
double jaccard(std::span<const AttributeId> a, std::span<const AttributeId> b) noexcept;

/// Same quantity from precomputed cardinalities.
inline double jaccard_from_counts(std::size_t size_a, std::size_t size_b,
                                  std::size_t intersection) noexcept {
  if (size_a == 0 || size_b == 0) return 0.0;
  return static_cast<double>(intersection) /
         static_cast<double>(size_a + size_b - intersection);
}

struct Negative {
  Ordinal entity = 0;
  double score = 0.0;
  friend bool operator==(const Negative&, const Negative&) = default;
};

/// Hard-negative order: higher score first, then lower ordinal.
constexpr bool ranks_before(const Negative& lhs, const Negative& rhs) noexcept {
  if (lhs.score != rhs.score) return lhs.score > rhs.score;
  return lhs.entity < rhs.entity;
}

enum class MiningMethod { kExact, kMinHash };

std::string_view method_name(MiningMethod m) noexcept;
MiningMethod parse_method(std::string_view name);

/// Per-entity top-k most attribute-similar other entities.
struct NegativeTable {
  std::size_t k = 0;
  MiningMethod method = MiningMethod::kExact;
  std::uint64_t seed = 0;
  std::uint64_t kb_fingerprint = 0;
  std::vector<std::vector<Negative>> lists;  // indexed by entity ordinal

  std::size_t size() const noexcept { return lists.size(); }
  std::span<const Negative> list(Ordinal i) const { return lists.at(i); }
};

/// Exhaustive top-k table. Entities sharing no attribute with i only appear (with score 0,
/// lowest ordinals first) when fewer than k entities overlap i. Memory is O(N·k) plus one
/// O(N) counter per worker.
NegativeTable build_exact_table(const KnowledgeBase& kb, std::size_t k, unsigned threads = 1);

}  // namespace melmine
