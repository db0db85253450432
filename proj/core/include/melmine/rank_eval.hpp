#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melmine/cvacpt.hpp"
#include "melmine/matcher.hpp"

namespace melmine {

enum class TiePolicy {
  kPessimistic,  // every equal-scoring rival ranks above the gold entity
  kOptimistic,   // the gold entity wins every tie
  kAverage,      // uniformly random order among the tied block
};

std::string_view tie_policy_name(TiePolicy p) noexcept;
TiePolicy parse_tie_policy(std::string_view name);

/// Where the gold entity sits: `better` rivals score strictly higher, `tied` rivals score
/// exactly the same.
struct GoldPlacement {
  std::size_t better = 0;
  std::size_t tied = 0;
};

GoldPlacement place_gold(std::span<const double> scores, Ordinal gold);

/// 1-based rank; the average policy returns the midpoint of the tied block.
double rank_of_gold(std::span<const double> scores, Ordinal gold,
                    TiePolicy policy = TiePolicy::kPessimistic);

/// Probability that the gold entity lands in the top k, and its expected reciprocal rank.
/// Deterministic for the pessimistic/optimistic policies; expectations over the tied block
/// for the average policy.
double hit_probability(const GoldPlacement& g, std::size_t k, TiePolicy policy);
double reciprocal_rank(const GoldPlacement& g, TiePolicy policy);

struct RankReport {
  TiePolicy policy = TiePolicy::kPessimistic;
  std::vector<std::string> mention_ids;
  std::vector<double> ranks;
  double hits_at_1 = 0.0;  // percent
  double hits_at_3 = 0.0;
  double hits_at_5 = 0.0;
  double mrr = 0.0;  // in (0, 1]

  std::size_t count() const noexcept { return ranks.size(); }
};

RankReport summarize(std::vector<std::string> mention_ids,
                     std::span<const GoldPlacement> placements, TiePolicy policy);

struct EvalOptions {
  MatcherConfig matcher;
  TiePolicy tie_policy = TiePolicy::kPessimistic;
  const CvacptParams* cvacpt = nullptr;  // transform mention visual features first
  std::size_t max_views = 0;             // 0: use every synthetic view
  unsigned threads = 1;
};

/// The CVaCPT-transformed visual bundle of a mention, or nullopt when the mention has no image
/// or no synthetic views.
std::optional<FeatureBundle> transform_mention(const Mention& mention, const EmbeddingStore& store,
                                               const CvacptParams& params,
                                               std::size_t max_views = 0, unsigned threads = 1);

/// Scores every mention against the whole knowledge base and ranks its gold entity.
RankReport evaluate(std::span<const Mention> mentions, const KnowledgeBase& kb,
                    const EmbeddingStore& store, const EvalOptions& options,
                    Diagnostics* diag = nullptr);

/// Aligned text table with two-decimal percentages.
std::string format_report_table(const RankReport& report);

/// {"config": <config_json>, "per_mention": [{"id", "rank"}], "aggregates": {...}}.
/// `config_json` must be a serialized JSON object.
std::string report_to_json(const RankReport& report, std::string_view config_json);

struct PooledSimilarity {
  double individual = 0.0;  // mean over items of the mean per-view cosine to the reference
  double pooled = 0.0;      // mean over items of cos(elementwise max of views, reference)
  std::size_t items = 0;
};

/// Both cosine summaries of raw view embeddings against one reference vector per item.
/// Throws Error{kEmptyViewSet} if an item has no views.
PooledSimilarity pooled_similarity(std::span<const std::vector<std::span<const float>>> views,
                                   std::span<const std::span<const float>> references);

}  // namespace melmine
