#include "mpr/eval.hpp"

#include <algorithm>
#include <regex>
#include <stdexcept>

namespace mpr {

std::string normalize_for_match(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
  }
  return out;
}

namespace {

bool matches(std::string_view raw, const std::string& normalized, const AnswerPattern& a) {
  if (a.kind() == AnswerPattern::Kind::regex) {
    return std::regex_search(raw.begin(), raw.end(), a.compiled());
  }
  const std::string needle = normalize_for_match(a.pattern());
  return !needle.empty() && normalized.find(needle) != std::string::npos;
}

}  // namespace

bool contains_answer(const Passage& passage, std::span<const AnswerPattern> answers,
                     bool match_title) {
  const std::string body = normalize_for_match(passage.body);
  const std::string title = match_title ? normalize_for_match(passage.title) : std::string();
  for (const auto& a : answers) {
    if (matches(passage.body, body, a)) return true;
    if (match_title && matches(passage.title, title, a)) return true;
  }
  return false;
}

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
  by_id_.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    if (!by_id_.emplace(passages_[i].id, i).second) {
      throw std::invalid_argument("corpus: duplicate passage id " + std::to_string(passages_[i].id));
    }
  }
}

const Passage* Corpus::find(std::uint64_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &passages_[it->second];
}

EvalReport evaluate_results(std::span<const QuestionRecord> questions, const Corpus& corpus,
                            std::span<const SearchResult> results, std::span<const std::size_t> ks,
                            bool match_title) {
  if (questions.empty()) throw std::invalid_argument("evaluate: empty question set");
  if (ks.empty()) throw std::invalid_argument("evaluate: no k values");
  if (results.size() != questions.size()) {
    throw std::invalid_argument("evaluate: one result list per question required");
  }
  EvalReport report;
  report.hits.resize(questions.size());
  parallel_for(questions.size(), [&](std::size_t first, std::size_t last) {
    for (std::size_t q = first; q < last; ++q) {
      report.hits[q].question_id = questions[q].id;
      const auto& ranked = results[q].ranked;
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        const Passage* p = corpus.find(ranked[r].id);
        if (p && contains_answer(*p, questions[q].answers, match_title)) {
          report.hits[q].first_hit_rank = r + 1;
          break;
        }
      }
    }
  });
  for (std::size_t k : ks) {
    std::size_t hit = 0;
    for (const auto& h : report.hits) {
      if (h.first_hit_rank && *h.first_hit_rank <= k) ++hit;
    }
    report.accuracy[k] = 100.0 * static_cast<double>(hit) / static_cast<double>(questions.size());
  }
  return report;
}

EvalReport evaluate(std::span<const QuestionRecord> questions, const Corpus& corpus,
                    const Retriever& retriever, std::span<const std::size_t> ks, bool match_title) {
  if (questions.empty()) throw std::invalid_argument("evaluate: empty question set");
  std::vector<SearchResult> results(questions.size());
  parallel_for(questions.size(), [&](std::size_t first, std::size_t last) {
    for (std::size_t q = first; q < last; ++q) results[q] = retriever(questions[q]);
  });
  return evaluate_results(questions, corpus, results, ks, match_title);
}

Retriever dense_retriever(const EncoderParams& params, const DenseIndex& index, std::size_t depth) {
  return [&params, &index, depth](const QuestionRecord& q) {
    return search_top_k(index, encode_question(params, q.question), depth);
  };
}

std::vector<AblationRow> ablation(std::span<const QuestionRecord> train_questions,
                                  std::span<const QuestionRecord> eval_questions,
                                  const Corpus& corpus, std::span<const std::size_t> m_values,
                                  const TrainConfig& config) {
  for (std::size_t m : m_values) {
    if (m < 1) throw ConfigError("ablation: max positives must be >= 1");
  }
  std::vector<AblationRow> rows;
  for (std::size_t m : m_values) {
    TrainConfig cfg = config;
    cfg.max_positives = m;
    const TrainResult trained = train(train_questions, cfg);
    const DenseIndex index = encode_corpus(trained.params, corpus.passages());
    const EvalReport report =
        evaluate(eval_questions, corpus, dense_retriever(trained.params, index, 100), kDefaultKs);
    rows.push_back({m, report.accuracy.at(20), report.accuracy.at(100)});
  }
  return rows;
}

std::vector<AblationRow> ablation(std::span<const QuestionRecord> questions, const Corpus& corpus,
                                  std::span<const std::size_t> m_values, const TrainConfig& config) {
  return ablation(questions, questions, corpus, m_values, config);
}

}  // namespace mpr
