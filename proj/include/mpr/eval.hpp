#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpr/data_model.hpp"
#include "mpr/index.hpp"
#include "mpr/trainer.hpp"

namespace mpr {

/// Literal answers: case-insensitive substring of the whitespace-collapsed
/// body. Regex answers: unanchored search over the raw body. With
/// `match_title` the title is searched as well.
bool contains_answer(const Passage& passage, std::span<const AnswerPattern> answers,
                     bool match_title = false);

/// Lowercase + collapse whitespace runs to one space + trim.
std::string normalize_for_match(std::string_view text);

struct QuestionHit {
  std::uint64_t question_id = 0;
  std::optional<std::size_t> first_hit_rank;  // 1-based

  bool operator==(const QuestionHit&) const = default;
};

struct EvalReport {
  std::map<std::size_t, double> accuracy;  // k -> percentage in [0, 100]
  std::vector<QuestionHit> hits;

  bool operator==(const EvalReport&) const = default;
};

inline constexpr std::size_t kDefaultKsArr[] = {20, 100};
inline constexpr std::span<const std::size_t> kDefaultKs{kDefaultKsArr};

using Retriever = std::function<SearchResult(const QuestionRecord&)>;

/// Passage lookup by id for answer matching.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Passage> passages);

  const std::vector<Passage>& passages() const { return passages_; }
  const Passage* find(std::uint64_t id) const;

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
};

/// A question is a hit at k iff one of its top-k passages contains an
/// answer. Throws std::invalid_argument on an empty question set or empty ks.
EvalReport evaluate(std::span<const QuestionRecord> questions, const Corpus& corpus,
                    const Retriever& retriever, std::span<const std::size_t> ks = kDefaultKs,
                    bool match_title = false);

/// Same protocol over precomputed results (one per question, same order).
EvalReport evaluate_results(std::span<const QuestionRecord> questions, const Corpus& corpus,
                            std::span<const SearchResult> results, std::span<const std::size_t> ks,
                            bool match_title = false);

struct AblationRow {
  std::size_t max_positives = 0;
  double top20 = 0.0;
  double top100 = 0.0;

  bool operator==(const AblationRow&) const = default;
};

/// Dense retriever: encodes each question and searches `index` for the top
/// `depth` passages.
Retriever dense_retriever(const EncoderParams& params, const DenseIndex& index, std::size_t depth);

/// One model per max_positives value, all other config (including the seed)
/// fixed; each is evaluated on `eval_questions` against the encoded corpus.
std::vector<AblationRow> ablation(std::span<const QuestionRecord> train_questions,
                                  std::span<const QuestionRecord> eval_questions,
                                  const Corpus& corpus, std::span<const std::size_t> m_values,
                                  const TrainConfig& config);

/// Trains and evaluates on the same question set.
std::vector<AblationRow> ablation(std::span<const QuestionRecord> questions, const Corpus& corpus,
                                  std::span<const std::size_t> m_values, const TrainConfig& config);

}  // namespace mpr
