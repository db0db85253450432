#pragma once

#include <random>
#include <vector>

#include "melmine/jaccard.hpp"

namespace melmine {

using Rng = std::mt19937_64;

enum class NegativeSource { kMined, kRandomFill, kRandom };

/// One positive mention–entity pair and its k negatives.
struct TrainingBatch {
  Ordinal mention = 0;
  Ordinal positive = 0;
  std::vector<Ordinal> negatives;
  std::vector<NegativeSource> provenance;  // parallel to negatives

  std::size_t mined_count() const noexcept;
};

enum class ConditionalMode {
  kTopPrefix,        // the first k table entries, in table order
  kUniformOverList,  // k entries drawn uniformly without replacement from the list
};

/// Hard negatives for `positive` from its table list. A list shorter than k is topped up
/// with uniform draws over the remaining entities (flagged kRandomFill). If the KB has fewer
/// than k other entities the batch is shorter and a warning is recorded.
/// Throws Error{kPositiveNotInTable} and Error{kInvalidArgument} for k == 0.
TrainingBatch sample_conditional(const NegativeTable& table, Ordinal positive, std::size_t k,
                                 Rng& rng, ConditionalMode mode = ConditionalMode::kTopPrefix,
                                 Diagnostics* diag = nullptr);

/// min(k, n-1) distinct entities drawn uniformly from [0, n) \ {positive}.
TrainingBatch sample_random(std::size_t n, Ordinal positive, std::size_t k, Rng& rng);

}  // namespace melmine
