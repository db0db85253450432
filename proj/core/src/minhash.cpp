#include "melmine/minhash.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace melmine {
namespace {

__extension__ using uint128 = unsigned __int128;

std::uint64_t mod_mersenne61(uint128 v) noexcept {
  // 2^61 ≡ 1 (mod p): fold the high bits down until the value fits.
  std::uint64_t lo = static_cast<std::uint64_t>(v & kMersenne61);
  uint128 hi = v >> 61;
  while (hi != 0) {
    uint128 folded = static_cast<uint128>(lo) + (hi & kMersenne61);
    hi >>= 61;
    lo = static_cast<std::uint64_t>(folded & kMersenne61);
    hi += folded >> 61;
  }
  return lo >= kMersenne61 ? lo - kMersenne61 : lo;
}

std::uint64_t apply(const HashCoefficients& h, std::uint64_t x) noexcept {
  return mod_mersenne61(static_cast<uint128>(h.a) * x + h.b);
}

constexpr std::uint64_t sentinel(Ordinal i) noexcept { return (std::uint64_t{1} << 61) + i; }

}  // namespace

void validate(const MinHashConfig& config) {
  if (config.signature_length == 0 || config.bands == 0 || config.rows_per_band == 0 ||
      config.bands * config.rows_per_band != config.signature_length) {
    throw Error(Errc::kBadBandConfig,
                std::to_string(config.bands) + " bands x " + std::to_string(config.rows_per_band) +
                    " rows != signature length " + std::to_string(config.signature_length));
  }
}

std::vector<HashCoefficients> draw_coefficients(std::size_t count, std::uint64_t seed) {
  std::vector<HashCoefficients> out(count);
  std::uint64_t state = mix64(seed);
  for (auto& c : out) {
    state = mix64(state);
    c.a = 1 + state % (kMersenne61 - 1);
    state = mix64(state);
    c.b = state % kMersenne61;
  }
  return out;
}

std::uint64_t attribute_key(AttributeId id) noexcept { return mix64(id) % kMersenne61; }

MinHashIndex build_minhash_index(const KnowledgeBase& kb, const MinHashConfig& config,
                                 unsigned threads) {
  validate(config);
  MinHashIndex index;
  index.config_ = config;
  index.kb_fingerprint_ = kb.fingerprint();
  index.coefficients_ = draw_coefficients(config.signature_length, config.seed);
  index.signatures_ = RowMatrix<std::uint64_t>(kb.size(), config.signature_length);

  parallel_for(kb.size(), threads, [&](std::size_t i) {
    auto sig = index.signatures_.row(i);
    const auto set = kb.attribute_set(static_cast<Ordinal>(i));
    if (set.empty()) {
      std::fill(sig.begin(), sig.end(), sentinel(static_cast<Ordinal>(i)));
      return;
    }
    std::fill(sig.begin(), sig.end(), std::numeric_limits<std::uint64_t>::max());
    for (AttributeId a : set) {
      const std::uint64_t x = attribute_key(a);
      for (std::size_t p = 0; p < sig.size(); ++p) {
        sig[p] = std::min(sig[p], apply(index.coefficients_[p], x));
      }
    }
  });
  index.rebuild_buckets();
  return index;
}

MinHashIndex MinHashIndex::from_signatures(const MinHashConfig& config,
                                           std::uint64_t kb_fingerprint,
                                           std::vector<HashCoefficients> coefficients,
                                           RowMatrix<std::uint64_t> signatures) {
  validate(config);
  if (coefficients.size() != config.signature_length ||
      signatures.cols() != config.signature_length) {
    throw Error(Errc::kShapeMismatch, "signature width does not match the band configuration");
  }
  MinHashIndex index;
  index.config_ = config;
  index.kb_fingerprint_ = kb_fingerprint;
  index.coefficients_ = std::move(coefficients);
  index.signatures_ = std::move(signatures);
  index.rebuild_buckets();
  return index;
}

std::uint64_t MinHashIndex::band_key(Ordinal i, std::size_t band) const {
  const auto sig = signatures_.row(i);
  std::uint64_t h = mix64(band);
  for (std::size_t r = 0; r < config_.rows_per_band; ++r) {
    h = mix64(h ^ sig[band * config_.rows_per_band + r]);
  }
  return h;
}

void MinHashIndex::rebuild_buckets() {
  buckets_.assign(config_.bands, {});
  for (std::size_t band = 0; band < config_.bands; ++band) {
    auto& map = buckets_[band];
    for (Ordinal i = 0; i < signatures_.rows(); ++i) map[band_key(i, band)].push_back(i);
  }
}

std::span<const Ordinal> MinHashIndex::bucket(std::size_t band, Ordinal i) const {
  return buckets_.at(band).at(band_key(i, band));
}

double estimate_jaccard(const MinHashIndex& index, Ordinal i, Ordinal j) {
  const auto a = index.signature(i);
  const auto b = index.signature(j);
  std::size_t agree = 0;
  for (std::size_t p = 0; p < a.size(); ++p) agree += a[p] == b[p] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

NegativeTable build_approx_table(const KnowledgeBase& kb, std::size_t k,
                                 const MinHashIndex& index, unsigned threads) {
  if (k == 0) throw Error(Errc::kInvalidArgument, "k must be at least 1");
  if (index.kb_fingerprint() != kb.fingerprint() || index.size() != kb.size()) {
    throw Error(Errc::kIndexMismatch, "MinHash index was built on a different knowledge base");
  }
  const std::size_t n = kb.size();
  NegativeTable table;
  table.k = k;
  table.method = MiningMethod::kMinHash;
  table.seed = index.config().seed;
  table.kb_fingerprint = kb.fingerprint();
  table.lists.resize(n);

  parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Ordinal> pool;
    for (std::size_t i = begin; i < end; ++i) {
      const auto self = static_cast<Ordinal>(i);
      pool.clear();
      for (std::size_t band = 0; band < index.config().bands; ++band) {
        for (Ordinal j : index.bucket(band, self)) {
          if (j != self) pool.push_back(j);
        }
      }
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

      const auto set_i = kb.attribute_set(self);
      std::vector<Negative> list;
      list.reserve(pool.size());
      for (Ordinal j : pool) list.push_back({j, jaccard(set_i, kb.attribute_set(j))});

      const std::size_t want = std::min(k, n - 1);
      if (list.size() < want) {
        // Uniform fill over entities that are neither i nor an LSH candidate.
        std::vector<Ordinal> rest;
        rest.reserve(n - 1 - pool.size());
        for (Ordinal j = 0; j < n; ++j) {
          if (j != self && !std::binary_search(pool.begin(), pool.end(), j)) rest.push_back(j);
        }
        std::mt19937_64 rng(derive_seed(index.config().seed, i));
        const std::size_t deficit = want - list.size();
        for (std::size_t t = 0; t < deficit; ++t) {
          std::uniform_int_distribution<std::size_t> pick(t, rest.size() - 1);
          std::swap(rest[t], rest[pick(rng)]);
          list.push_back({rest[t], jaccard(set_i, kb.attribute_set(rest[t]))});
        }
      }

      const std::size_t keep = std::min(k, list.size());
      std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(),
                        ranks_before);
      list.resize(keep);
      table.lists[i] = std::move(list);
    }
  });
  return table;
}

}  // namespace melmine
