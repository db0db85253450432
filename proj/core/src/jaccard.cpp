#include "melmine/jaccard.hpp"

#include <algorithm>

namespace melmine {

double jaccard(std::span<const AttributeId> a, std::span<const AttributeId> b) noexcept {
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  return jaccard_from_counts(a.size(), b.size(), inter);
}

std::string_view method_name(MiningMethod m) noexcept {
  return m == MiningMethod::kExact ? "exact" : "minhash";
}

MiningMethod parse_method(std::string_view name) {
  if (name == "exact") return MiningMethod::kExact;
  if (name == "minhash") return MiningMethod::kMinHash;
  throw Error(Errc::kInvalidArgument, "unknown mining method '" + std::string(name) + "'");
}

NegativeTable build_exact_table(const KnowledgeBase& kb, std::size_t k, unsigned threads) {
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  const std::size_t n = kb.size();

  NegativeTable table;
  table.k = k;
  table.method = MiningMethod::kExact;
  table.kb_fingerprint = kb.fingerprint();
  table.lists.resize(n);

  // Inverted index: attribute -> entities holding it, ordinals ascending.
  std::vector<std::vector<Ordinal>> postings(kb.vocab_size());
  for (Ordinal i = 0; i < n; ++i) {
    for (AttributeId a : kb.attribute_set(i)) postings[a].push_back(i);
  }

  parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> overlap(n, 0);
    std::vector<Ordinal> touched;
    std::vector<Negative> candidates;
    for (std::size_t i = begin; i < end; ++i) {
      const auto self = static_cast<Ordinal>(i);
      const auto set_i = kb.attribute_set(self);
      touched.clear();
      for (AttributeId a : set_i) {
        for (Ordinal j : postings[a]) {
          if (overlap[j]++ == 0) touched.push_back(j);
        }
      }

      candidates.clear();
      for (Ordinal j : touched) {
        if (j != self) {
          candidates.push_back(
              {j, jaccard_from_counts(set_i.size(), kb.attribute_set(j).size(), overlap[j])});
        }
      }
      const std::size_t keep = std::min(k, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                        candidates.end(), ranks_before);
      candidates.resize(keep);

      // Zero-overlap entities tie at 0; take the lowest ordinals.
      for (Ordinal j = 0; j < n && candidates.size() < k; ++j) {
        if (j != self && overlap[j] == 0) candidates.push_back({j, 0.0});
      }
      for (Ordinal j : touched) overlap[j] = 0;
      table.lists[i] = candidates;
    }
  });
  return table;
}

}  // namespace melmine
