#include "melmine/rank_eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace melmine {

std::string_view tie_policy_name(TiePolicy p) noexcept {
  switch (p) {
    case TiePolicy::kPessimistic: return "pessimistic";
    case TiePolicy::kOptimistic: return "optimistic";
    case TiePolicy::kAverage: return "average";
  }
  return "pessimistic";
}

TiePolicy parse_tie_policy(std::string_view name) {
  if (name == "pessimistic") return TiePolicy::kPessimistic;
  if (name == "optimistic") return TiePolicy::kOptimistic;
  if (name == "average") return TiePolicy::kAverage;
  throw Error(Errc::kInvalidArgument, "unknown tie policy '" + std::string(name) + "'");
}

GoldPlacement place_gold(std::span<const double> scores, Ordinal gold) {
  if (gold >= scores.size()) {
    throw Error(Errc::kInvalidArgument, "gold ordinal outside the score vector");
  }
  GoldPlacement g;
  const double s = scores[gold];
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (scores[e] > s) {
      ++g.better;
    } else if (scores[e] == s && e != gold) {
      ++g.tied;
    }
  }
  return g;
}

double rank_of_gold(std::span<const double> scores, Ordinal gold, TiePolicy policy) {
  const GoldPlacement g = place_gold(scores, gold);
  const double best = 1.0 + static_cast<double>(g.better);
  const double worst = best + static_cast<double>(g.tied);
  switch (policy) {
    case TiePolicy::kOptimistic: return best;
    case TiePolicy::kAverage: return 0.5 * (best + worst);
    case TiePolicy::kPessimistic: break;
  }
  return worst;
}

double hit_probability(const GoldPlacement& g, std::size_t k, TiePolicy policy) {
  const std::size_t best = g.better + 1;
  const std::size_t worst = best + g.tied;
  switch (policy) {
    case TiePolicy::kOptimistic: return best <= k ? 1.0 : 0.0;
    case TiePolicy::kPessimistic: return worst <= k ? 1.0 : 0.0;
    case TiePolicy::kAverage: {
      if (best > k) return 0.0;
      const std::size_t inside = std::min(worst, k) - best + 1;
      return static_cast<double>(inside) / static_cast<double>(g.tied + 1);
    }
  }
  return 0.0;
}

double reciprocal_rank(const GoldPlacement& g, TiePolicy policy) {
  const std::size_t best = g.better + 1;
  const std::size_t worst = best + g.tied;
  switch (policy) {
    case TiePolicy::kOptimistic: return 1.0 / static_cast<double>(best);
    case TiePolicy::kPessimistic: return 1.0 / static_cast<double>(worst);
    case TiePolicy::kAverage: {
      double sum = 0.0;
      for (std::size_t r = best; r <= worst; ++r) sum += 1.0 / static_cast<double>(r);
      return sum / static_cast<double>(g.tied + 1);
    }
  }
  return 0.0;
}

RankReport summarize(std::vector<std::string> mention_ids,
                     std::span<const GoldPlacement> placements, TiePolicy policy) {
  RankReport report;
  report.policy = policy;
  report.mention_ids = std::move(mention_ids);
  report.ranks.reserve(placements.size());
  double h1 = 0.0, h3 = 0.0, h5 = 0.0, rr = 0.0;
  for (const auto& g : placements) {
    const double best = 1.0 + static_cast<double>(g.better);
    const double worst = best + static_cast<double>(g.tied);
    report.ranks.push_back(policy == TiePolicy::kOptimistic ? best
                           : policy == TiePolicy::kAverage  ? 0.5 * (best + worst)
                                                            : worst);
    h1 += hit_probability(g, 1, policy);
    h3 += hit_probability(g, 3, policy);
    h5 += hit_probability(g, 5, policy);
    rr += reciprocal_rank(g, policy);
  }
  if (!placements.empty()) {
    const double n = static_cast<double>(placements.size());
    report.hits_at_1 = 100.0 * h1 / n;
    report.hits_at_3 = 100.0 * h3 / n;
    report.hits_at_5 = 100.0 * h5 / n;
    report.mrr = rr / n;
  }
  return report;
}

std::optional<FeatureBundle> transform_mention(const Mention& mention, const EmbeddingStore& store,
                                               const CvacptParams& params, std::size_t max_views,
                                               unsigned threads) {
  if (!mention.image_row || mention.synthetic_rows.empty()) return std::nullopt;
  std::size_t n_views = mention.synthetic_rows.size();
  if (max_views != 0) n_views = std::min(n_views, max_views);
  std::vector<std::span<const float>> views;
  views.reserve(n_views);
  for (std::size_t h = 0; h < n_views; ++h) views.push_back(store.row(mention.synthetic_rows[h]));
  const auto context = pool_views(views, store.row(mention.text_row), params);

  FeatureBundle visual;
  const auto g = store.row(*mention.image_row);
  visual.global.assign(g.begin(), g.end());
  visual.local = RowMatrix<float>(mention.patch_rows.size(), store.dim());
  for (std::size_t p = 0; p < mention.patch_rows.size(); ++p) {
    const auto row = store.row(mention.patch_rows[p]);
    std::copy(row.begin(), row.end(), visual.local.row(p).begin());
  }
  return transform(visual, context, params, threads);
}

RankReport evaluate(std::span<const Mention> mentions, const KnowledgeBase& kb,
                    const EmbeddingStore& store, const EvalOptions& options, Diagnostics* diag) {
  validate(options.matcher);
  if (kb.empty()) throw Error(Errc::kInvalidArgument, "knowledge base is empty");
  if (options.cvacpt != nullptr) {
    validate(*options.cvacpt);
    if (options.cvacpt->dim != store.dim()) {
      throw Error(Errc::kDimensionMismatch, "CVaCPT parameters do not match the embedding dimension");
    }
  }
  const auto entities = all_entity_features(kb, store);
  std::vector<GoldPlacement> placements(mentions.size());
  std::vector<Diagnostics> local_diag(mentions.size());

  parallel_for(mentions.size(), options.threads, [&](std::size_t i) {
    const Mention& m = mentions[i];
    const auto gold = kb.find(m.gold_entity);
    if (!gold) throw DanglingReference(0, m.id, m.gold_entity);
    GlobalFeatures<float> features = mention_features(m, store);
    std::optional<FeatureBundle> transformed;
    if (options.cvacpt != nullptr) {
      transformed = transform_mention(m, store, *options.cvacpt, options.max_views);
      if (transformed) {
        features.image = transformed->global;
      } else if (m.image_row) {
        local_diag[i].warn("mention '" + m.id + "' has no synthetic views; image left untransformed");
      }
    }
    const auto scores = score_all<float>(features, entities, options.matcher, &local_diag[i]);
    placements[i] = place_gold(scores, *gold);
  });

  if (diag != nullptr) {
    for (auto& d : local_diag) {
      for (auto& w : d.warnings) diag->warn(std::move(w));
    }
  }
  std::vector<std::string> ids;
  ids.reserve(mentions.size());
  for (const auto& m : mentions) ids.push_back(m.id);
  return summarize(std::move(ids), placements, options.tie_policy);
}

std::string format_report_table(const RankReport& report) {
  char buf[160];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s %8s %8s\n", "tie_policy", "mentions", "H@1",
                "H@3", "H@5", "MRR");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %8zu %8.2f %8.2f %8.2f %8.5f\n",
                std::string(tie_policy_name(report.policy)).c_str(), report.count(),
                report.hits_at_1, report.hits_at_3, report.hits_at_5, report.mrr);
  out << buf;
  return out.str();
}

std::string report_to_json(const RankReport& report, std::string_view config_json) {
  using nlohmann::json;
  json per_mention = json::array();
  for (std::size_t i = 0; i < report.count(); ++i) {
    per_mention.push_back({{"id", report.mention_ids[i]}, {"rank", report.ranks[i]}});
  }
  json doc = {{"config", json::parse(config_json)},
              {"per_mention", std::move(per_mention)},
              {"aggregates",
               {{"tie_policy", tie_policy_name(report.policy)},
                {"mentions", report.count()},
                {"hits_at_1", report.hits_at_1},
                {"hits_at_3", report.hits_at_3},
                {"hits_at_5", report.hits_at_5},
                {"mrr", report.mrr}}}};
  return doc.dump(2) + "\n";
}

PooledSimilarity pooled_similarity(std::span<const std::vector<std::span<const float>>> views,
                                   std::span<const std::span<const float>> references) {
  if (views.size() != references.size()) {
    throw Error(Errc::kInvalidArgument, "one reference per item is required");
  }
  PooledSimilarity out;
  out.items = views.size();
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (views[i].empty()) throw Error(Errc::kEmptyViewSet, "item " + std::to_string(i));
    double mean = 0.0;
    for (const auto& v : views[i]) mean += cosine(v, references[i]);
    out.individual += mean / static_cast<double>(views[i].size());
    const auto pooled = max_pool<float>(views[i]);
    std::vector<double> ref(references[i].begin(), references[i].end());
    out.pooled += cosine(std::span<const double>(pooled), std::span<const double>(ref));
  }
  if (out.items > 0) {
    out.individual /= static_cast<double>(out.items);
    out.pooled /= static_cast<double>(out.items);
  }
  return out;
}

}  // namespace melmine
