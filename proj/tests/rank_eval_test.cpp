#include <json.hpp>

#include <gtest/gtest.h>

#include "melmine/rank_eval.hpp"
#include "support.hpp"

using namespace melmine;

namespace {

// Counts by hand: expected rank under the average policy, P(rank <= k) and E[1/rank] by
// enumerating every position of the gold entity inside its tied block.
struct Expectation {
  double rank, hit1, hit3, hit5, rr;
};

Expectation enumerate(const std::vector<double>& s, Ordinal gold) {
  std::size_t better = 0, tied = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == gold) continue;
    better += s[i] > s[gold];
    tied += s[i] == s[gold];
  }
  Expectation e{0, 0, 0, 0, 0};
  const double n = static_cast<double>(tied + 1);
  for (std::size_t pos = 0; pos <= tied; ++pos) {
    const double r = static_cast<double>(better + pos + 1);
    e.rank += r / n;
    e.hit1 += (r <= 1) / n;
    e.hit3 += (r <= 3) / n;
    e.hit5 += (r <= 5) / n;
    e.rr += 1.0 / r / n;
  }
  return e;
}

}  // namespace

TEST(Rank, UniqueMaximum) {
  const std::vector<double> s{0.1, 0.9, 0.3};
  for (auto p : {TiePolicy::kPessimistic, TiePolicy::kOptimistic, TiePolicy::kAverage}) {
    EXPECT_EQ(rank_of_gold(s, 1, p), 1.0);
  }
}

TEST(Rank, TieHandCounts) {
  const std::vector<double> s{0.9, 0.9, 0.1};
  EXPECT_EQ(rank_of_gold(s, 0, TiePolicy::kOptimistic), 1.0);
  EXPECT_EQ(rank_of_gold(s, 0, TiePolicy::kPessimistic), 2.0);
  EXPECT_EQ(rank_of_gold(s, 0, TiePolicy::kAverage), 1.5);
}

TEST(Rank, StrictlyLast) {
  const std::vector<double> s{0.5, 0.4, 0.3, 0.2};
  EXPECT_EQ(rank_of_gold(s, 3), 4.0);
}

TEST(Rank, AveragePolicyExpectationsMatchEnumeration) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> s(2 + rng() % 12);
    for (auto& x : s) x = static_cast<double>(rng() % 4);  // heavy ties
    const Ordinal gold = static_cast<Ordinal>(rng() % s.size());
    const auto want = enumerate(s, gold);
    const auto g = place_gold(s, gold);
    EXPECT_NEAR(rank_of_gold(s, gold, TiePolicy::kAverage), want.rank, 1e-12);
    EXPECT_NEAR(hit_probability(g, 1, TiePolicy::kAverage), want.hit1, 1e-12);
    EXPECT_NEAR(hit_probability(g, 3, TiePolicy::kAverage), want.hit3, 1e-12);
    EXPECT_NEAR(hit_probability(g, 5, TiePolicy::kAverage), want.hit5, 1e-12);
    EXPECT_NEAR(reciprocal_rank(g, TiePolicy::kAverage), want.rr, 1e-12);
    EXPECT_GE(rank_of_gold(s, gold, TiePolicy::kPessimistic), rank_of_gold(s, gold, TiePolicy::kAverage));
    EXPECT_LE(rank_of_gold(s, gold, TiePolicy::kOptimistic), rank_of_gold(s, gold, TiePolicy::kAverage));
  }
}

TEST(Summary, ThreeMentionHandFixture) {
  const std::vector<GoldPlacement> g{{0, 0}, {1, 0}, {3, 0}};  // ranks 1, 2, 4
  const auto r = summarize({"a", "b", "c"}, g, TiePolicy::kPessimistic);
  EXPECT_NEAR(r.hits_at_1, 33.33, 5e-3);
  EXPECT_NEAR(r.hits_at_3, 66.67, 5e-3);
  EXPECT_NEAR(r.hits_at_5, 100.0, 1e-12);
  EXPECT_NEAR(r.mrr, (1 + 0.5 + 0.25) / 3, 1e-12);
  EXPECT_EQ(r.ranks, (std::vector<double>{1, 2, 4}));
}

TEST(Summary, SingleRankOne) {
  const std::vector<GoldPlacement> g{{0, 0}};
  const auto r = summarize({"a"}, g, TiePolicy::kPessimistic);
  EXPECT_EQ(r.hits_at_1, 100.0);
  EXPECT_EQ(r.hits_at_5, 100.0);
  EXPECT_EQ(r.mrr, 1.0);
}

TEST(Summary, InvariantsOnRandomPlacements) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GoldPlacement> g(1 + rng() % 40);
    std::vector<std::string> ids;
    for (auto& p : g) {
      p.better = rng() % 10;
      p.tied = rng() % 4;
      ids.push_back("m" + std::to_string(ids.size()));
    }
    for (auto policy : {TiePolicy::kPessimistic, TiePolicy::kOptimistic, TiePolicy::kAverage}) {
      const auto r = summarize(ids, g, policy);
      EXPECT_LE(r.hits_at_1, r.hits_at_3);
      EXPECT_LE(r.hits_at_3, r.hits_at_5);
      EXPECT_LE(r.mrr, 1.0);
      EXPECT_GE(r.mrr, r.hits_at_1 / 100.0 - 1e-12);
      EXPECT_GT(r.mrr, 0.0);
    }
  }
}

TEST(Evaluate, ThreeMentionFixtureFromFiles) {
  support::TempDir dir("eval");
  const auto f = support::write_three_mention_fixture(dir.path());
  const auto kb = load_kb(f.kb);
  const auto ms = load_mentions(f.mentions, kb);
  const auto store = load_embeddings(f.emb);
  const auto r = evaluate(ms, kb, store, EvalOptions{});
  EXPECT_EQ(r.ranks, (std::vector<double>{1, 2, 4}));
  EXPECT_NEAR(r.hits_at_1, 33.33, 5e-3);
  EXPECT_NEAR(r.mrr, 0.58333, 1e-5);

  const auto doc = nlohmann::json::parse(report_to_json(r, R"({"note":"x"})"));
  EXPECT_EQ(doc["config"]["note"], "x");
  EXPECT_EQ(doc["per_mention"].size(), 3u);
  EXPECT_EQ(doc["per_mention"][2]["id"], "m2");
  EXPECT_EQ(doc["per_mention"][2]["rank"], 4.0);
  EXPECT_NEAR(doc["aggregates"]["mrr"].get<double>(), 0.583333, 1e-6);

  const auto table = format_report_table(r);
  EXPECT_NE(table.find("33.33"), std::string::npos);
  EXPECT_NE(table.find("66.67"), std::string::npos);
  EXPECT_NE(table.find("100.00"), std::string::npos);
}

TEST(Evaluate, InvariantToEntityOrderWithoutTies) {
  std::mt19937_64 rng(5);
  const std::size_t n = 30, d = 6;
  std::vector<Entity> es;
  for (std::size_t i = 0; i < n; ++i) {
    Entity e;
    e.id = "e" + std::to_string(i);
    e.text_row = static_cast<RowIndex>(i);
    es.push_back(e);
  }
  std::vector<Mention> ms;
  for (std::size_t j = 0; j < 20; ++j) {
    Mention m;
    m.id = "m" + std::to_string(j);
    m.gold_entity = "e" + std::to_string(rng() % n);
    m.text_row = static_cast<RowIndex>(n + j);
    ms.push_back(m);
  }
  EmbeddingStore store{RowMatrix<float>(n + 20, d, support::random_floats((n + 20) * d, rng)), ""};
  auto shuffled = es;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (auto policy : {TiePolicy::kOptimistic, TiePolicy::kPessimistic}) {
    EvalOptions opts;
    opts.tie_policy = policy;
    const auto a = evaluate(ms, build_kb(es), store, opts);
    opts.threads = 3;
    const auto b = evaluate(ms, build_kb(shuffled), store, opts);
    EXPECT_EQ(a.ranks, b.ranks);
    EXPECT_EQ(a.mrr, b.mrr);
  }
}

TEST(Evaluate, CvacptPathUsesTransformedImage) {
  // Zero affine weights leave the image untouched, so the fused scores match the plain run.
  std::mt19937_64 rng(6);
  const std::size_t d = 4;
  std::vector<Entity> es;
  for (int i = 0; i < 5; ++i) {
    Entity e;
    e.id = "e" + std::to_string(i);
    e.image_rows = {static_cast<RowIndex>(5 + i)};
    es.push_back(e);
  }
  Mention m;
  m.id = "m";
  m.gold_entity = "e2";
  m.text_row = 10;
  m.image_row = 11;
  m.synthetic_rows = {12, 13};
  m.patch_rows = {14};
  EmbeddingStore store{RowMatrix<float>(15, d, support::random_floats(15 * d, rng)), ""};
  const auto kb = build_kb(es);
  const std::vector<Mention> ms{m};
  EvalOptions plain;
  plain.matcher.variant = MatcherVariant::kCosineFused;
  const auto base = evaluate(ms, kb, store, plain);

  auto zero = init_params(d, 3);
  zero.global_affine = zero_params(d).global_affine;
  EvalOptions with = plain;
  with.cvacpt = &zero;
  EXPECT_EQ(evaluate(ms, kb, store, with).ranks, base.ranks);

  const auto bundle = transform_mention(m, store, zero);
  ASSERT_TRUE(bundle.has_value());
  EXPECT_TRUE(std::ranges::equal(bundle->global, store.row(11)));
  Mention no_views = m;
  no_views.synthetic_rows.clear();
  EXPECT_FALSE(transform_mention(no_views, store, zero).has_value());
}

TEST(Pooled, SingleViewModesAgree) {
  std::mt19937_64 rng(7);
  std::vector<std::vector<float>> storage;
  std::vector<std::vector<std::span<const float>>> views;
  std::vector<std::span<const float>> refs;
  storage.reserve(40);
  for (int i = 0; i < 20; ++i) {
    storage.push_back(support::random_floats(8, rng));
    storage.push_back(support::random_floats(8, rng));
  }
  for (int i = 0; i < 20; ++i) {
    views.push_back({storage[2 * i]});
    refs.push_back(storage[2 * i + 1]);
  }
  const auto r = pooled_similarity(views, refs);
  EXPECT_EQ(r.items, 20u);
  EXPECT_EQ(r.individual, r.pooled);
}

TEST(Pooled, MatchesHandComputation) {
  const std::vector<float> a{1, 0}, b{0, 1}, ref{1, 1};
  const std::vector<std::vector<std::span<const float>>> views{{a, b}};
  const std::vector<std::span<const float>> refs{ref};
  const auto r = pooled_similarity(views, refs);
  EXPECT_NEAR(r.individual, 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(r.pooled, 1.0, 1e-12);
}

TEST(Pooled, EmptyViewSetRejected) {
  const std::vector<float> ref{1, 1};
  const std::vector<std::vector<std::span<const float>>> views{{}};
  const std::vector<std::span<const float>> refs{ref};
  try {
    pooled_similarity(views, refs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyViewSet);
  }
}

TEST(Policies, Names) {
  EXPECT_EQ(parse_tie_policy("average"), TiePolicy::kAverage);
  EXPECT_EQ(tie_policy_name(TiePolicy::kPessimistic), "pessimistic");
  EXPECT_THROW(parse_tie_policy("random"), Error);
}
