#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mpr {

struct Passage {
  std::uint64_t id = 0;
  std::string title;
  std::string body;

  bool operator==(const Passage&) const = default;
};

/// Text fed to the passage tower: title followed by body.
std::string passage_text(const Passage& p);

/// Content-derived id used when a context carries no explicit passage_id.
std::uint64_t content_id(std::string_view title, std::string_view body);

/// One gold answer. Regex patterns are compiled once at construction.
class AnswerPattern {
 public:
  enum class Kind { literal, regex };

  /// Throws std::invalid_argument for an empty literal or a regex that does
  /// not compile.
  static AnswerPattern literal(std::string text);
  static AnswerPattern regex(std::string pattern);

  Kind kind() const { return kind_; }
  const std::string& pattern() const { return pattern_; }
  const std::regex& compiled() const { return *compiled_; }

  bool operator==(const AnswerPattern& o) const {
    return kind_ == o.kind_ && pattern_ == o.pattern_;
  }

 private:
  AnswerPattern(Kind kind, std::string pattern, std::shared_ptr<const std::regex> compiled)
      : kind_(kind), pattern_(std::move(pattern)), compiled_(std::move(compiled)) {}

  Kind kind_;
  std::string pattern_;
  std::shared_ptr<const std::regex> compiled_;
};

struct QuestionRecord {
  std::uint64_t id = 0;
  std::string question;
  std::vector<AnswerPattern> answers;
  std::vector<Passage> positives;
  std::vector<Passage> hard_negatives;

  bool operator==(const QuestionRecord&) const = default;
};

enum class DatasetFormat { jsonl, dpr_json };

/// Throws ConfigError for an unknown tag. Accepts "jsonl" and "dpr-json".
DatasetFormat parse_dataset_format(std::string_view tag);

/// Reads a question file.
///
/// `jsonl` holds one JSON object per line; `dpr-json` holds a single JSON
/// array of the same objects. Fields: question, answers, answer_kind
/// ("literal" | "regex", default literal), positive_ctxs and
/// hard_negative_ctxs (arrays of {title, text[, passage_id]}), optional id.
///
/// Records that violate the QuestionRecord invariants (no answers, empty
/// literal, regex that fails to compile) are dropped and a message is
/// appended to `warnings`; when `warnings` is null the message goes to
/// stderr. Throws ParseError with a 1-based line number for malformed
/// input.
std::vector<QuestionRecord> ingest_dataset(const std::filesystem::path& path, DatasetFormat format,
                                           std::vector<std::string>* warnings = nullptr);

/// Same as ingest_dataset but over in-memory text.
std::vector<QuestionRecord> parse_dataset(std::string_view text, DatasetFormat format,
                                          std::vector<std::string>* warnings = nullptr);

/// Serializes records as jsonl (the inverse of parse_dataset for jsonl).
std::string to_jsonl(std::span<const QuestionRecord> records);

struct Document {
  std::string title;
  std::string body;
};

/// Splits each document into consecutive windows of `words_per_passage`
/// whitespace-delimited words; the final shorter window is kept. Ids are
/// assigned sequentially from `first_id`. Throws std::invalid_argument if
/// words_per_passage is 0.
std::vector<Passage> chunk_documents(std::span<const Document> docs,
                                     std::size_t words_per_passage = 100,
                                     std::uint64_t first_id = 0);

/// Positives and the hard negative used for one question during training.
struct TrainingPair {
  std::uint64_t question_id = 0;
  std::string question;
  std::vector<Passage> positives;
  Passage hard_negative;
};

/// First min(|positives|, max_positives) positives in stored order and the
/// first hard negative, or nullopt (discard) when either list is empty.
std::optional<TrainingPair> select_training_pairs(const QuestionRecord& record,
                                                  std::size_t max_positives);

/// Positive-count histogram over non-discarded questions.
struct DatasetStats {
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::size_t p3 = 0;
  std::size_t total = 0;
  double delta = 0.0;       // p3 / total
  bool delta_defined = false;  // false when total == 0
};

/// Groups questions by min(|positives|, max_positives). max_positives must
/// be in [1, 3]; 3 gives the usual p1/p2/p3 breakdown.
DatasetStats compute_stats(std::span<const QuestionRecord> records, std::size_t max_positives = 3);

/// Reads a tab-separated corpus: id<TAB>text<TAB>title, one passage per
/// line. A leading "id\ttext\ttitle" header is skipped.
std::vector<Passage> read_corpus(const std::filesystem::path& path);
std::vector<Passage> parse_corpus(std::string_view text);
void write_corpus(const std::filesystem::path& path, std::span<const Passage> passages);

}  // namespace mpr
