#include "mpr/synth.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "mpr/common.hpp"
#include "mpr/eval.hpp"
#include "mpr/lexical.hpp"

namespace mpr {

namespace {

class WordFactory {
 public:
  WordFactory(Rng& rng, std::uint32_t buckets) : rng_(rng), buckets_(buckets) {}

  std::string make() {
    static constexpr char kCons[] = "bcdfghjklmnprstvz";
    static constexpr char kVow[] = "aeiou";
    for (;;) {
      std::string w;
      const std::size_t syllables = 2 + rng_.below(3);
      for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(kCons[rng_.below(sizeof(kCons) - 1)]);
        w.push_back(kVow[rng_.below(sizeof(kVow) - 1)]);
      }
      if (words_.count(w)) continue;
      const std::uint64_t bucket = fnv1a64(w) % buckets_;
      if (used_buckets_.count(bucket)) continue;
      words_.insert(w);
      used_buckets_.insert(bucket);
      return w;
    }
  }

  std::size_t size() const { return words_.size(); }

 private:
  Rng& rng_;
  std::uint32_t buckets_;
  std::unordered_set<std::string> words_;
  std::unordered_set<std::uint64_t> used_buckets_;
};

struct Topic {
  std::vector<std::size_t> concepts;
  std::string answer;       // empty for distractor topics
  std::string test_answer;  // answer of the held-out question
};

std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
  all.resize(k);
  return all;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace

SynthBenchmark generate_synthetic(const SynthConfig& cfg) {
  if (cfg.questions == 0 || cfg.golds_per_topic == 0) {
    throw std::invalid_argument("synthetic benchmark needs questions and gold passages");
  }
  const std::size_t golds = cfg.questions * (cfg.golds_per_topic + cfg.heldout_golds_per_topic);
  if (cfg.passages < golds) {
    throw std::invalid_argument("passage count smaller than the number of gold passages");
  }
  if (cfg.concepts_per_topic > cfg.concepts || cfg.question_concepts > cfg.concepts_per_topic) {
    throw std::invalid_argument("inconsistent concept counts");
  }
  const std::size_t words_needed =
      cfg.concepts * cfg.synonyms_per_concept + cfg.filler_words + 2 * cfg.questions + 8;
  if (words_needed > cfg.buckets / 2) {
    throw std::invalid_argument("too many words for the bucket count");
  }

  Rng rng(cfg.seed);
  WordFactory factory(rng, cfg.buckets);

  std::vector<std::vector<std::string>> synonyms(cfg.concepts);
  for (auto& forms : synonyms) {
    for (std::size_t s = 0; s < cfg.synonyms_per_concept; ++s) forms.push_back(factory.make());
  }
  std::vector<std::string> filler(cfg.filler_words);
  for (auto& w : filler) w = factory.make();
  static const char* kWh[] = {"what", "which", "who", "where", "when"};

  auto surface = [&](std::size_t concept_id) -> const std::string& {
    const auto& forms = synonyms[concept_id];
    return forms[rng.below(forms.size())];
  };

  auto passage_words = [&](const Topic& t, const std::string& answer) {
    std::vector<std::string> words;
    for (std::size_t c : t.concepts) {
      if (rng.bernoulli(cfg.concept_keep)) words.push_back(surface(c));
    }
    if (words.empty()) words.push_back(surface(t.concepts[rng.below(t.concepts.size())]));
    for (std::size_t i = 0; i < cfg.passage_filler; ++i) {
      words.push_back(filler[rng.below(filler.size())]);
    }
    rng.shuffle(words);
    if (!answer.empty()) {
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), answer);
    }
    return words;
  };

  auto question_text = [&](const Topic& t) {
    std::vector<std::string> words;
    for (std::size_t c = 0; c < cfg.question_concepts; ++c) {
      const std::size_t concept_id = t.concepts[c];
      words.push_back(rng.bernoulli(cfg.question_paraphrase) ? surface(concept_id)
                                                             : synonyms[concept_id].front());
    }
    words.push_back(filler[rng.below(filler.size())]);
    rng.shuffle(words);
    return std::string(kWh[rng.below(5)]) + " " + join(words);
  };

  std::vector<Topic> topics(cfg.questions);
  for (auto& t : topics) {
    t.concepts = sample_distinct(rng, cfg.concepts, cfg.concepts_per_topic);
    t.answer = factory.make();
    t.test_answer = factory.make();
  }

  struct Draft {
    std::string title;
    std::string body;
    std::ptrdiff_t topic;  // -1 for distractors
    bool heldout;
  };
  std::vector<Draft> drafts;
  drafts.reserve(cfg.passages);
  for (std::size_t q = 0; q < topics.size(); ++q) {
    for (std::size_t g = 0; g < cfg.golds_per_topic; ++g) {
      drafts.push_back({"", join(passage_words(topics[q], topics[q].answer)),
                        static_cast<std::ptrdiff_t>(q), false});
    }
    for (std::size_t g = 0; g < cfg.heldout_golds_per_topic; ++g) {
      drafts.push_back({"", join(passage_words(topics[q], topics[q].test_answer)),
                        static_cast<std::ptrdiff_t>(q), true});
    }
  }
  Topic distractor;
  for (std::size_t i = 0; drafts.size() < cfg.passages; ++i) {
    if (i % cfg.golds_per_topic == 0) {
      distractor.concepts = sample_distinct(rng, cfg.concepts, cfg.concepts_per_topic);
    }
    drafts.push_back({"", join(passage_words(distractor, "")), -1, false});
  }
  for (auto& d : drafts) {
    d.title = surface(d.topic >= 0 ? topics[static_cast<std::size_t>(d.topic)].concepts.front()
                                   : rng.below(cfg.concepts));
  }

  rng.shuffle(drafts);
  SynthBenchmark out;
  std::vector<std::vector<std::size_t>> gold_of(topics.size());
  std::vector<std::vector<std::size_t>> heldout_of(topics.size());
  out.corpus.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    out.corpus.push_back({static_cast<std::uint64_t>(i), drafts[i].title, drafts[i].body});
    if (drafts[i].topic >= 0) {
      auto& bucket = drafts[i].heldout ? heldout_of : gold_of;
      bucket[static_cast<std::size_t>(drafts[i].topic)].push_back(i);
    }
  }

  const LexicalIndex lex = build_lexical_index(out.corpus);
  auto make_record = [&](std::size_t q, std::uint64_t id, const std::string& answer,
                         std::span<const std::size_t> positives) {
    QuestionRecord r;
    r.id = id;
    r.question = question_text(topics[q]);
    r.answers.push_back(AnswerPattern::literal(answer));
    for (std::size_t g : positives) r.positives.push_back(out.corpus[g]);
    for (const auto& hit : bm25_top_k(lex, r.question, 50).ranked) {
      const Passage& p = out.corpus[hit.id];
      if (!contains_answer(p, r.answers)) {
        r.hard_negatives.push_back(p);
        break;
      }
    }
    if (r.hard_negatives.empty()) {
      for (;;) {
        const Passage& p = out.corpus[rng.below(out.corpus.size())];
        if (!contains_answer(p, r.answers)) {
          r.hard_negatives.push_back(p);
          break;
        }
      }
    }
    return r;
  };

  for (std::size_t q = 0; q < topics.size(); ++q) {
    const double u = rng.uniform();
    std::size_t positives = cfg.golds_per_topic;
    if (u < cfg.one_positive_rate) {
      positives = 1;
    } else if (u < cfg.one_positive_rate + cfg.two_positive_rate) {
      positives = std::min<std::size_t>(2, cfg.golds_per_topic);
    }
    out.train.push_back(make_record(q, q, topics[q].answer,
                                    std::span(gold_of[q]).first(positives)));
  }
  for (std::size_t i = 0; i < cfg.test_questions; ++i) {
    const std::size_t q = i % topics.size();
    if (cfg.heldout_golds_per_topic > 0) {
      out.test.push_back(make_record(q, i, topics[q].test_answer, heldout_of[q]));
    } else {
      out.test.push_back(make_record(q, i, topics[q].answer, gold_of[q]));
    }
  }
  out.vocabulary_size = factory.size() + 5;
  return out;
}

void write_synthetic(const std::filesystem::path& dir, const SynthBenchmark& bench) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "corpus.tsv", bench.corpus);
  for (const auto& [name, records] :
       {std::pair{"train.jsonl", &bench.train}, std::pair{"test.jsonl", &bench.test}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << to_jsonl(*records);
  }
}

}  // namespace mpr
