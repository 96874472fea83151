#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mpr/lexical.hpp"
#include "support.hpp"

using namespace mpr;
using mpr::testing::hand_corpus;
using mpr::testing::TempDir;

namespace {

// Hand counts for the query "cat sat" over hand_corpus():
// lengths 6 3 6 3 5 (avg 4.6); df(cat) = 2, df(sat) = 2; every tf is 1.
double hand_term(double tf, double df, double len) {
  const double n = 5, avg = 23.0 / 5.0, k1 = 0.9, b = 0.4;
  const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  return idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
}

DenseIndex hand_dense() {
  // 2-d vectors for ids 1..5.
  return DenseIndex(2, {1, 2, 3, 4, 5}, {0.1f, 0.0f, 0.9f, 0.2f, 0.3f, 0.1f, 1.5f, 0.0f, 0.4f, 0.4f});
}

}  // namespace

TEST(Bm25, Idf) {
  EXPECT_NEAR(bm25_idf(5, 2), std::log(1.0 + 3.5 / 2.5), 1e-15);
  EXPECT_GT(bm25_idf(10, 10), 0.0);
}

TEST(Bm25, BuildCounts) {
  auto lex = build_lexical_index(std::vector<Passage>{{7, "", "alpha beta gamma delta"}});
  EXPECT_EQ(lex.postings.size(), 4u);
  for (const auto& [term, list] : lex.postings) EXPECT_EQ(list.size(), 1u);
  auto corpus = hand_corpus();
  auto idx = build_lexical_index(corpus);
  EXPECT_EQ(idx.doc_lengths, (std::vector<std::uint32_t>{6, 3, 6, 3, 5}));
  EXPECT_DOUBLE_EQ(idx.avg_len, 4.6);
  EXPECT_EQ(idx.df("the"), 3u);
  EXPECT_EQ(idx.postings.at("the")[0].tf, 2u);
  EXPECT_EQ(idx.df("zebra"), 0u);
  EXPECT_THROW(build_lexical_index(std::vector<Passage>{}), std::invalid_argument);
}

TEST(Bm25, LengthIgnoresPunctuation) {
  std::string body;
  for (int i = 0; i < 100; ++i) body += "w" + std::to_string(i) + (i % 10 == 0 ? " -- " : " ");
  auto idx = build_lexical_index(std::vector<Passage>{{0, "", body}});
  EXPECT_EQ(idx.doc_lengths[0], 100u);
}

TEST(Bm25, HandScores) {
  auto idx = build_lexical_index(hand_corpus());
  auto s = bm25_scores(idx, "cat sat");
  EXPECT_NEAR(s[0], hand_term(1, 2, 6) + hand_term(1, 2, 6), 1e-9);
  EXPECT_NEAR(s[1], hand_term(1, 2, 3), 1e-9);
  EXPECT_NEAR(s[2], hand_term(1, 2, 6), 1e-9);
  EXPECT_EQ(s[3], 0.0);
  EXPECT_EQ(s[4], 0.0);

  auto top = bm25_top_k(idx, "cat sat", 10);
  ASSERT_EQ(top.ranked.size(), 3u);
  EXPECT_EQ(top.ranked[0].id, 1u);
  EXPECT_EQ(top.ranked[1].id, 2u);
  EXPECT_EQ(top.ranked[2].id, 3u);
}

TEST(Bm25, AbsentTermsAndEmptyResults) {
  auto idx = build_lexical_index(hand_corpus());
  EXPECT_EQ(bm25_scores(idx, "cat zebra"), bm25_scores(idx, "cat"));
  EXPECT_TRUE(bm25_top_k(idx, "zebra", 5).ranked.empty());
  EXPECT_THROW(bm25_top_k(idx, "cat", 0), std::invalid_argument);
  auto single = build_lexical_index(std::vector<Passage>{{42, "", "only doc here"}});
  auto r = bm25_top_k(single, "doc", 3);
  ASSERT_EQ(r.ranked.size(), 1u);
  EXPECT_EQ(r.ranked[0].id, 42u);
}

TEST(Bm25, NonNegativeAndTiesById) {
  auto idx = build_lexical_index(hand_corpus());
  for (const char* q : {"the", "dog", "mat the dog", "a"}) {
    for (double v : bm25_scores(idx, q)) EXPECT_GE(v, 0.0);
  }
  auto r = bm25_top_k(build_lexical_index(std::vector<Passage>{{9, "", "x"}, {3, "", "x"}}), "x", 2);
  EXPECT_EQ(r.ranked[0].id, 3u);
}

TEST(Bm25, UnrelatedPassageKeepsOrder) {
  auto corpus = hand_corpus();
  auto before = bm25_top_k(build_lexical_index(corpus), "cat sat", 10);
  corpus.push_back({6, "", "completely unrelated words"});
  auto after = bm25_top_k(build_lexical_index(corpus), "cat sat", 10);
  ASSERT_EQ(before.ranked.size(), after.ranked.size());
  for (std::size_t i = 0; i < before.ranked.size(); ++i) EXPECT_EQ(before.ranked[i].id, after.ranked[i].id);
}

TEST(Hybrid, HandCombinedScores) {
  auto lex = build_lexical_index(hand_corpus());
  auto dense = hand_dense();
  const Vector q{1.0, 2.0};
  auto r = hybrid_top_k(lex, dense, q, "cat sat", 5, 1.1);
  // Dense top-10 covers every passage, so the pool is the whole corpus.
  auto f = [](float x) { return static_cast<double>(x); };
  std::vector<ScoredPassage> want{{1, f(0.1f) + 1.1 * 2 * hand_term(1, 2, 6)},
                                  {2, f(0.9f) + 2 * f(0.2f) + 1.1 * hand_term(1, 2, 3)},
                                  {3, f(0.3f) + 2 * f(0.1f) + 1.1 * hand_term(1, 2, 6)},
                                  {4, 1.5},
                                  {5, 3 * f(0.4f)}};
  std::sort(want.begin(), want.end(), ranks_before);
  ASSERT_EQ(r.ranked.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.ranked[i].id, want[i].id);
    EXPECT_NEAR(r.ranked[i].score, want[i].score, 1e-9);
  }
}

TEST(Hybrid, DegenerateWeights) {
  auto lex = build_lexical_index(hand_corpus());
  auto dense = hand_dense();
  const Vector q{1.0, 2.0};
  const std::size_t k = 2;
  // Candidate pool: dense top-4 and BM25 top-4.
  std::vector<std::uint64_t> pool;
  for (auto& h : search_top_k(dense, q, 2 * k).ranked) pool.push_back(h.id);
  for (auto& h : bm25_top_k(lex, "cat sat", 2 * k).ranked) pool.push_back(h.id);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  auto bm = bm25_scores(lex, "cat sat");

  std::vector<std::uint64_t> by_dense = pool, by_bm25 = pool;
  auto dense_of = [&](std::uint64_t id) { return dense.score(*dense.find(id), q); };
  auto bm25_of = [&](std::uint64_t id) { return bm[id - 1]; };
  std::sort(by_dense.begin(), by_dense.end(), [&](auto a, auto b) {
    return ranks_before({a, dense_of(a)}, {b, dense_of(b)});
  });
  std::sort(by_bm25.begin(), by_bm25.end(), [&](auto a, auto b) {
    if (bm25_of(a) != bm25_of(b)) return bm25_of(a) > bm25_of(b);
    return ranks_before({a, dense_of(a)}, {b, dense_of(b)});
  });

  auto zero = hybrid_top_k(lex, dense, q, "cat sat", k, 0.0);
  auto huge = hybrid_top_k(lex, dense, q, "cat sat", k, 1e9);
  ASSERT_EQ(zero.ranked.size(), k);
  for (std::size_t i = 0; i < k; ++i) {
    EXPECT_EQ(zero.ranked[i].id, by_dense[i]);
    EXPECT_EQ(huge.ranked[i].id, by_bm25[i]);
  }
  EXPECT_THROW(hybrid_top_k(lex, dense, q, "cat", 1, -1.0), std::invalid_argument);
}

TEST(LexicalIndexFile, RoundTrip) {
  TempDir dir;
  auto idx = build_lexical_index(hand_corpus(), 1.2, 0.75);
  save_lexical_index(dir / "lex.bin", idx);
  auto back = load_lexical_index(dir / "lex.bin");
  EXPECT_EQ(idx, back);
  EXPECT_EQ(bm25_top_k(idx, "the dog", 5), bm25_top_k(back, "the dog", 5));
  mpr::testing::write_file(dir / "bad.bin", "MPIX....");
  EXPECT_THROW(load_lexical_index(dir / "bad.bin"), FormatError);
}
