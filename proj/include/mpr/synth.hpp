#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mpr/data_model.hpp"

namespace mpr {

/// Controllable retrieval benchmark.
///
/// Each topic is a set of concepts; every concept has several surface
/// forms (synonyms) whose tokens land in distinct hash buckets, so lexical
/// overlap between a question and its gold passages is partial. Every
/// question topic owns `golds_per_topic` passages with the topic's answer
/// word injected verbatim; the rest of the corpus comes from distractor
/// topics that carry no answer. Hard negatives are the best BM25 match
/// that does not contain the answer.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t passages = 2000;
  std::size_t questions = 200;        // training questions, one topic each
  std::size_t test_questions = 200;   // held-out paraphrases of those topics
  std::size_t golds_per_topic = 3;
  /// Extra gold passages per topic carrying a second answer word. They are
  /// never listed as training positives; held-out questions ask for them.
  std::size_t heldout_golds_per_topic = 0;
  std::size_t concepts = 1000;
  std::size_t synonyms_per_concept = 3;
  std::size_t filler_words = 1800;
  std::size_t concepts_per_topic = 6;
  std::size_t question_concepts = 4;
  std::size_t passage_filler = 10;
  double concept_keep = 0.7;
  /// Probability that a question word uses a random surface form instead of
  /// the concept's canonical one. Passages always draw a random form.
  double question_paraphrase = 0.0;
  /// Fraction of training questions listing only 1 or 2 positives.
  double one_positive_rate = 0.1;
  double two_positive_rate = 0.15;
  /// Bucket count the surface forms must not collide in.
  std::uint32_t buckets = 65536;
};

struct SynthBenchmark {
  std::vector<Passage> corpus;
  std::vector<QuestionRecord> train;
  std::vector<QuestionRecord> test;
  std::size_t vocabulary_size = 0;
};

SynthBenchmark generate_synthetic(const SynthConfig& config);

/// Writes corpus.tsv, train.jsonl and test.jsonl under `dir`.
void write_synthetic(const std::filesystem::path& dir, const SynthBenchmark& bench);

}  // namespace mpr
