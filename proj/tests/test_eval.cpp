#include <gtest/gtest.h>

#include "mpr/eval.hpp"
#include "mpr/synth.hpp"
#include "support.hpp"

using namespace mpr;

namespace {

std::vector<AnswerPattern> lit(const std::string& s) { return {AnswerPattern::literal(s)}; }

QuestionRecord question(std::uint64_t id, const std::string& answer) {
  QuestionRecord r;
  r.id = id;
  r.question = "q" + std::to_string(id);
  r.answers = lit(answer);
  return r;
}

}  // namespace

TEST(ContainsAnswer, Literal) {
  Passage p{1, "Paris", "The capital of France is Paris, a large city."};
  EXPECT_TRUE(contains_answer(p, lit("Paris")));
  EXPECT_TRUE(contains_answer(p, lit("PARIS")));
  EXPECT_TRUE(contains_answer(p, lit("capital   of\tfrance")));
  EXPECT_FALSE(contains_answer({2, "", "no match here"}, lit("Paris")));
  EXPECT_FALSE(contains_answer({3, "Paris", "nothing"}, lit("Paris")));
  EXPECT_TRUE(contains_answer({3, "Paris", "nothing"}, lit("Paris"), true));
}

TEST(ContainsAnswer, Regex) {
  std::vector<AnswerPattern> re{AnswerPattern::regex("19\\s?45")};
  EXPECT_TRUE(contains_answer({1, "", "the war ended in 1945"}, re));
  EXPECT_TRUE(contains_answer({1, "", "in 19 45 it ended"}, re));
  EXPECT_FALSE(contains_answer({1, "", "the war ended in 1954"}, re));
  std::vector<AnswerPattern> any{AnswerPattern::literal("zzz"), AnswerPattern::regex("ab+c")};
  EXPECT_TRUE(contains_answer({1, "", "xxabbbcxx"}, any));
  EXPECT_THROW(AnswerPattern::regex("(open"), std::invalid_argument);
  EXPECT_THROW(AnswerPattern::literal(""), std::invalid_argument);
}

TEST(Normalize, CollapsesWhitespace) {
  EXPECT_EQ(normalize_for_match("  Hello \n\t World  "), "hello world");
}

TEST(Evaluate, TwoOfThree) {
  Corpus corpus({{1, "", "has alpha"}, {2, "", "has beta"}, {3, "", "nothing"}});
  std::vector<QuestionRecord> qs{question(10, "alpha"), question(11, "beta"), question(12, "gamma")};
  Retriever r = [](const QuestionRecord& q) {
    SearchResult out;
    if (q.id == 11) out.ranked.push_back({3, 1.0});
    for (std::uint64_t id : {1, 2, 3}) out.ranked.push_back({id, 0.5});
    return out;
  };
  auto rep = evaluate(qs, corpus, r);
  EXPECT_NEAR(rep.accuracy.at(20), 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.accuracy.at(100), 200.0 / 3.0, 1e-12);
  ASSERT_EQ(rep.hits.size(), 3u);
  EXPECT_EQ(rep.hits[0].first_hit_rank, 1u);
  EXPECT_EQ(rep.hits[1].first_hit_rank, 3u);
  EXPECT_FALSE(rep.hits[2].first_hit_rank);
  auto k1 = evaluate(qs, corpus, r, std::vector<std::size_t>{1, 2});
  EXPECT_NEAR(k1.accuracy.at(1), 100.0 / 3.0, 1e-12);
  EXPECT_THROW(evaluate(std::vector<QuestionRecord>{}, corpus, r), std::invalid_argument);
}

TEST(Evaluate, GoldFirstGivesFullMarks) {
  std::vector<Passage> ps;
  std::vector<QuestionRecord> qs;
  for (std::uint64_t i = 0; i < 30; ++i) {
    ps.push_back({i, "", "answer" + std::to_string(i) + " text"});
    qs.push_back(question(i, "answer" + std::to_string(i)));
  }
  Corpus corpus(ps);
  auto rep = evaluate(qs, corpus, [](const QuestionRecord& q) {
    return SearchResult{{{q.id, 1.0}}};
  }, std::vector<std::size_t>{1, 20, 100});
  for (const auto& [k, acc] : rep.accuracy) EXPECT_EQ(acc, 100.0);
}

TEST(Evaluate, MonotoneInKAndPure) {
  Rng rng(4);
  std::vector<Passage> ps;
  for (std::uint64_t i = 0; i < 200; ++i) ps.push_back({i, "", "w" + std::to_string(rng.below(50))});
  Corpus corpus(ps);
  std::vector<QuestionRecord> qs;
  for (std::uint64_t i = 0; i < 40; ++i) qs.push_back(question(i, "w" + std::to_string(rng.below(50))));
  std::vector<SearchResult> results(qs.size());
  for (auto& r : results) {
    for (std::uint64_t j = 0; j < 150; ++j) r.ranked.push_back({rng.below(200), 0.0});
  }
  const std::vector<std::size_t> ks{1, 5, 20, 100, 150};
  auto a = evaluate_results(qs, corpus, results, ks);
  auto b = evaluate_results(qs, corpus, results, ks);
  EXPECT_EQ(a, b);
  double prev = -1.0;
  for (const auto& [k, acc] : a.accuracy) {
    EXPECT_GE(acc, prev);
    EXPECT_LE(acc, 100.0);
    prev = acc;
  }
}

TEST(Ablation, RowsAndDeterminism) {
  SynthConfig sc;
  sc.passages = 200;
  sc.questions = 32;
  sc.test_questions = 0;
  sc.concepts = 100;
  sc.filler_words = 100;
  sc.buckets = 2048;
  auto bench = generate_synthetic(sc);
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 2;
  c.lr = 1e-2;
  c.vocab = 2048;
  c.embed_dim = 8;
  c.out_dim = 8;
  Corpus corpus(bench.corpus);
  const std::vector<std::size_t> one{1};
  auto single = ablation(bench.train, corpus, one, c);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].max_positives, 1u);
  const std::vector<std::size_t> ms{1, 2, 3};
  auto a = ablation(bench.train, corpus, ms, c);
  auto b = ablation(bench.train, corpus, ms, c);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[0], single[0]);
  for (const auto& row : a) EXPECT_GE(row.top100, row.top20);
  const std::vector<std::size_t> bad{0};
  EXPECT_THROW(ablation(bench.train, corpus, bad, c), ConfigError);
}

TEST(Synthetic, GoldPassagesContainAnswer) {
  SynthConfig sc;
  sc.passages = 400;
  sc.questions = 50;
  sc.test_questions = 20;
  sc.concepts = 200;
  sc.filler_words = 200;
  sc.buckets = 4096;
  auto bench = generate_synthetic(sc);
  Corpus corpus(bench.corpus);
  for (const auto& set : {&bench.train, &bench.test}) {
    for (const auto& q : *set) {
      ASSERT_FALSE(q.positives.empty());
      for (const auto& p : q.positives) EXPECT_TRUE(contains_answer(p, q.answers));
      ASSERT_EQ(q.hard_negatives.size(), 1u);
      EXPECT_FALSE(contains_answer(q.hard_negatives[0], q.answers));
    }
  }
}
