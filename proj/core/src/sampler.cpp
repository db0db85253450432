#include "melmine/sampler.hpp"

#include <algorithm>

namespace melmine {
namespace {

bool contains(const std::vector<Ordinal>& v, Ordinal x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// Floyd's algorithm over [0, n) minus `excluded`, skipping values already in `taken`.
void draw_distinct(std::size_t n, std::size_t count, const std::vector<Ordinal>& excluded,
                   Rng& rng, std::vector<Ordinal>& out) {
  std::vector<Ordinal> sorted_excluded = excluded;
  std::sort(sorted_excluded.begin(), sorted_excluded.end());
  const std::size_t m = n - sorted_excluded.size();
  auto to_ordinal = [&](std::size_t v) {
    // v-th ordinal of [0, n) not in sorted_excluded.
    std::size_t ord = v;
    for (Ordinal e : sorted_excluded) {
      if (e <= ord) ++ord;
      else break;
    }
    return static_cast<Ordinal>(ord);
  };
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j = m - count; j < m; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
      picked.push_back(t);
    } else {
      picked.push_back(j);
    }
  }
  for (std::size_t v : picked) out.push_back(to_ordinal(v));
}

}  // namespace

std::size_t TrainingBatch::mined_count() const noexcept {
  return static_cast<std::size_t>(
      std::count(provenance.begin(), provenance.end(), NegativeSource::kMined));
}

TrainingBatch sample_conditional(const NegativeTable& table, Ordinal positive, std::size_t k,
                                 Rng& rng, ConditionalMode mode, Diagnostics* diag) {
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  if (positive >= table.size()) {
    throw Error(Errc::kPositiveNotInTable, "entity ordinal " + std::to_string(positive));
  }
  TrainingBatch batch;
  batch.positive = positive;
  const auto list = table.list(positive);

  if (list.size() >= k && mode == ConditionalMode::kUniformOverList) {
    std::vector<std::size_t> slots(list.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
    for (std::size_t t = 0; t < k; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, slots.size() - 1);
      std::swap(slots[t], slots[pick(rng)]);
    }
    slots.resize(k);
    std::sort(slots.begin(), slots.end());
    for (std::size_t s : slots) {
      batch.negatives.push_back(list[s].entity);
      batch.provenance.push_back(NegativeSource::kMined);
    }
    return batch;
  }

  for (const auto& n : list.first(std::min(k, list.size()))) {
    if (n.entity == positive || contains(batch.negatives, n.entity)) continue;
    batch.negatives.push_back(n.entity);
    batch.provenance.push_back(NegativeSource::kMined);
  }
  if (batch.negatives.size() == k) return batch;

  const std::size_t others = table.size() - 1;
  const std::size_t target = std::min(k, others);
  if (target < k) {
    warn(diag, "entity " + std::to_string(positive) + ": only " + std::to_string(others) +
                   " candidate negatives for k=" + std::to_string(k));
  }
  if (batch.negatives.size() < target) {
    std::vector<Ordinal> excluded = batch.negatives;
    excluded.push_back(positive);
    const std::size_t before = batch.negatives.size();
    draw_distinct(table.size(), target - before, excluded, rng, batch.negatives);
    batch.provenance.resize(batch.negatives.size(), NegativeSource::kRandomFill);
  }
  return batch;
}

TrainingBatch sample_random(std::size_t n, Ordinal positive, std::size_t k, Rng& rng) {
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  if (positive >= n) throw Error(Errc::kInvalidArgument, "positive outside the knowledge base");
  TrainingBatch batch;
  batch.positive = positive;
  draw_distinct(n, std::min(k, n - 1), {positive}, rng, batch.negatives);
  batch.provenance.assign(batch.negatives.size(), NegativeSource::kRandom);
  return batch;
}

}  // namespace melmine
