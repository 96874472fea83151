#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mpr/common.hpp"
#include "mpr/data_model.hpp"
#include "mpr/trainer.hpp"

namespace mpr::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "mpr-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string random_text(Rng& rng, std::size_t words, std::size_t lexicon = 40) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out.push_back(' ');
    out += "w" + std::to_string(rng.below(lexicon));
  }
  return out;
}

/// B training pairs with `m` positives each and distinct passage ids.
inline std::vector<TrainingPair> random_pairs(Rng& rng, std::size_t b, std::size_t m) {
  std::vector<TrainingPair> pairs(b);
  std::uint64_t next_id = 0;
  for (std::size_t i = 0; i < b; ++i) {
    pairs[i].question_id = i;
    pairs[i].question = random_text(rng, 3 + rng.below(4));
    for (std::size_t k = 0; k < m; ++k) {
      pairs[i].positives.push_back({next_id++, "", random_text(rng, 4 + rng.below(6))});
    }
    pairs[i].hard_negative = {next_id++, "", random_text(rng, 4 + rng.below(6))};
  }
  return pairs;
}

/// Dataset whose records have exactly the given positive counts, in order.
inline std::vector<QuestionRecord> records_with_counts(std::size_t p1, std::size_t p2, std::size_t p3) {
  std::vector<QuestionRecord> out;
  std::uint64_t id = 0;
  auto add = [&](std::size_t n, std::size_t positives) {
    for (std::size_t i = 0; i < n; ++i) {
      QuestionRecord r;
      r.id = id++;
      r.question = "q" + std::to_string(r.id);
      r.answers.push_back(AnswerPattern::literal("a"));
      for (std::size_t k = 0; k < positives; ++k) {
        r.positives.push_back({r.id * 10 + k, "", "positive a"});
      }
      r.hard_negatives.push_back({r.id * 10 + 9, "", "negative"});
      out.push_back(std::move(r));
    }
  };
  add(p1, 1);
  add(p2, 2);
  add(p3, 3);
  return out;
}

/// Five short documents with hand-countable term statistics.
inline std::vector<Passage> hand_corpus() {
  return {{1, "", "the cat sat on the mat"},
          {2, "", "the dog sat"},
          {3, "", "cat and dog play together daily"},
          {4, "", "birds fly high"},
          {5, "", "a mat for the dog"}};
}

}  // namespace mpr::testing
