#include <gtest/gtest.h>

#include "melmine/jaccard.hpp"
#include "support.hpp"

using namespace melmine;

namespace {

Entity make(std::string id, std::vector<std::string> attrs) {
  Entity e;
  e.id = std::move(id);
  e.attributes = std::move(attrs);
  return e;
}

std::vector<AttributeId> ids(std::initializer_list<AttributeId> v) { return v; }

void expect_matches_oracle(const std::vector<Entity>& entities, std::size_t k, unsigned threads) {
  const auto kb = build_kb(entities);
  const auto table = build_exact_table(kb, k, threads);
  ASSERT_EQ(table.size(), entities.size());
  for (Ordinal i = 0; i < kb.size(); ++i) {
    const auto want = support::brute_top_k(entities, i, k);
    const auto got = table.list(i);
    ASSERT_EQ(got.size(), want.size()) << "entity " << i;
    for (std::size_t r = 0; r < want.size(); ++r) {
      EXPECT_EQ(got[r].entity, want[r].entity) << "entity " << i << " rank " << r;
      EXPECT_NEAR(got[r].score, want[r].score, 1e-12);
    }
  }
}

}  // namespace

TEST(Jaccard, HandValues) {
  EXPECT_EQ(jaccard(ids({1, 2, 3}), ids({1, 2, 3})), 1.0);
  EXPECT_EQ(jaccard(ids({1, 2}), ids({3, 4})), 0.0);
  // {human, politician, male} vs {human, politician, female}
  EXPECT_EQ(jaccard(ids({0, 1, 2}), ids({0, 1, 3})), 0.5);
}

TEST(Jaccard, EmptySetsScoreZero) {
  EXPECT_EQ(jaccard(ids({}), ids({})), 0.0);
  EXPECT_EQ(jaccard(ids({}), ids({1})), 0.0);
  EXPECT_EQ(jaccard_from_counts(0, 3, 0), 0.0);
}

TEST(Jaccard, SymmetricAndReflexive) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::set<AttributeId> a, b;
    const std::size_t na = rng() % 12, nb = rng() % 12;
    while (a.size() < na) a.insert(static_cast<AttributeId>(rng() % 20));
    while (b.size() < nb) b.insert(static_cast<AttributeId>(rng() % 20));
    const std::vector<AttributeId> va(a.begin(), a.end()), vb(b.begin(), b.end());
    EXPECT_EQ(jaccard(va, vb), jaccard(vb, va));
    const double j = jaccard(va, vb);
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, 1.0);
    if (!va.empty()) EXPECT_EQ(jaccard(va, va), 1.0);
  }
}

TEST(ExactTable, SingleEntityHasEmptyList) {
  const auto kb = build_kb({make("a", {"x"})});
  const auto t = build_exact_table(kb, 3);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_TRUE(t.list(0).empty());
}

TEST(ExactTable, FiveEntityHandFixture) {
  const auto kb = build_kb({make("0", {"a", "b"}), make("1", {"a", "b"}), make("2", {"a", "c"}),
                            make("3", {"d"}), make("4", {"d", "e"})});
  const auto t = build_exact_table(kb, 2);
  EXPECT_EQ(t.k, 2u);
  EXPECT_EQ(t.method, MiningMethod::kExact);
  ASSERT_EQ(t.list(0).size(), 2u);
  EXPECT_EQ(t.list(0)[0], (Negative{1, 1.0}));
  EXPECT_EQ(t.list(0)[1].entity, 2u);
  EXPECT_DOUBLE_EQ(t.list(0)[1].score, 1.0 / 3.0);
  EXPECT_EQ(t.list(3)[0], (Negative{4, 0.5}));
  // entity 3 overlaps only entity 4; the remaining slot is the lowest-ordinal zero
  EXPECT_EQ(t.list(3)[1], (Negative{0, 0.0}));
}

TEST(ExactTable, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    expect_matches_oracle(support::random_entities(120, 25, 8, seed), 5, 1);
  }
}

TEST(ExactTable, KLargerThanCandidatesListsEveryone) {
  expect_matches_oracle(support::random_entities(6, 5, 3, 2), 10, 1);
}

TEST(ExactTable, ThreadCountDoesNotChangeOutput) {
  const auto kb = build_kb(support::random_entities(300, 40, 10, 9));
  const auto one = build_exact_table(kb, 6, 1);
  for (unsigned threads : {2u, 3u, 8u}) {
    EXPECT_EQ(build_exact_table(kb, 6, threads).lists, one.lists) << threads << " threads";
  }
}

TEST(ExactTable, InvariantUnderEntityPermutation) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto entities = support::random_entities(80, 20, 6, seed);
    auto shuffled = entities;
    std::mt19937_64 rng(seed + 100);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = build_kb(entities), b = build_kb(shuffled);
    const std::size_t k = 4;
    const auto ta = build_exact_table(a, k), tb = build_exact_table(b, k);
    for (Ordinal i = 0; i < a.size(); ++i) {
      const auto la = ta.list(i);
      const auto lb = tb.list(*b.find(a.entity(i).id));
      ASSERT_EQ(la.size(), lb.size());
      // Score sequences agree; members agree wherever the score beats the cut-off (ties at
      // the k-th score may legitimately be resolved differently after relabeling).
      std::set<std::string> above_a, above_b;
      for (std::size_t r = 0; r < la.size(); ++r) {
        EXPECT_EQ(la[r].score, lb[r].score);
        if (la[r].score > la.back().score) above_a.insert(a.entity(la[r].entity).id);
        if (lb[r].score > lb.back().score) above_b.insert(b.entity(lb[r].entity).id);
      }
      EXPECT_EQ(above_a, above_b);
    }
  }
}

TEST(ExactTable, ListsAreSortedDistinctAndExcludeSelf) {
  const auto kb = build_kb(support::random_entities(150, 30, 8, 21));
  const auto t = build_exact_table(kb, 7);
  for (Ordinal i = 0; i < kb.size(); ++i) {
    const auto l = t.list(i);
    EXPECT_LE(l.size(), 7u);
    std::set<Ordinal> seen;
    for (std::size_t r = 0; r < l.size(); ++r) {
      EXPECT_NE(l[r].entity, i);
      EXPECT_TRUE(seen.insert(l[r].entity).second);
      if (r > 0) EXPECT_TRUE(ranks_before(l[r - 1], l[r]));
    }
  }
}

TEST(ExactTable, MethodNames) {
  EXPECT_EQ(method_name(MiningMethod::kMinHash), "minhash");
  EXPECT_EQ(parse_method("exact"), MiningMethod::kExact);
  EXPECT_THROW(parse_method("fuzzy"), Error);
}
