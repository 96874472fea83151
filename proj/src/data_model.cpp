#include "mpr/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mpr/common.hpp"

namespace mpr {

using nlohmann::json;

std::string passage_text(const Passage& p) {
  if (p.title.empty()) return p.body;
  return p.title + " " + p.body;
}

std::uint64_t content_id(std::string_view title, std::string_view body) {
  std::string key;
  key.reserve(title.size() + body.size() + 1);
  key.append(title).push_back('\t');
  key.append(body);
  return fnv1a64(key);
}

AnswerPattern AnswerPattern::literal(std::string text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw std::invalid_argument("empty literal answer");
  }
  return AnswerPattern(Kind::literal, std::move(text), nullptr);
}

AnswerPattern AnswerPattern::regex(std::string pattern) {
  if (pattern.empty()) {
    throw std::invalid_argument("empty regex answer");
  }
  std::shared_ptr<const std::regex> compiled;
  try {
    compiled = std::make_shared<const std::regex>(
        pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw std::invalid_argument("regex does not compile: " + pattern + " (" + e.what() + ")");
  }
  return AnswerPattern(Kind::regex, std::move(pattern), std::move(compiled));
}

DatasetFormat parse_dataset_format(std::string_view tag) {
  if (tag == "jsonl") return DatasetFormat::jsonl;
  if (tag == "dpr-json") return DatasetFormat::dpr_json;
  throw ConfigError("unknown dataset format \"" + std::string(tag) + "\" (expected jsonl or dpr-json)");
}

namespace {

std::uint64_t parse_id(const json& v, std::string_view where, std::size_t line) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
    return fnv1a64(s);
  }
  throw ParseError(std::string(where) + ": id must be a non-negative integer or string", line);
}

std::vector<Passage> parse_contexts(const json& obj, const char* key, std::size_t line) {
  std::vector<Passage> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) {
    throw ParseError(std::string(key) + " must be an array", line);
  }
  out.reserve(it->size());
  for (const auto& ctx : *it) {
    if (!ctx.is_object()) throw ParseError(std::string(key) + " entries must be objects", line);
    auto text = ctx.find("text");
    if (text == ctx.end() || !text->is_string()) {
      throw ParseError(std::string(key) + " entry lacks a string \"text\"", line);
    }
    Passage p;
    p.body = text->get<std::string>();
    if (auto title = ctx.find("title"); title != ctx.end() && title->is_string()) {
      p.title = title->get<std::string>();
    }
    if (auto pid = ctx.find("passage_id"); pid != ctx.end() && !pid->is_null()) {
      p.id = parse_id(*pid, key, line);
    } else {
      p.id = content_id(p.title, p.body);
    }
    out.push_back(std::move(p));
  }
  return out;
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) {
    warnings->push_back(std::move(msg));
  } else {
    std::cerr << "warning: " << msg << '\n';
  }
}

// Returns nullopt when the record is well-formed JSON but fails the record
// invariants.
std::optional<QuestionRecord> parse_record(const json& obj, std::size_t ordinal, std::size_t line,
                                           std::vector<std::string>* warnings) {
  const std::string where =
      line > 0 ? "line " + std::to_string(line) : "record " + std::to_string(ordinal);
  if (!obj.is_object()) throw ParseError(where + ": expected a JSON object", line);
  auto q = obj.find("question");
  if (q == obj.end() || !q->is_string()) {
    throw ParseError(where + ": missing string field \"question\"", line);
  }

  QuestionRecord rec;
  rec.question = q->get<std::string>();
  rec.id = ordinal;
  if (auto id = obj.find("id"); id != obj.end() && !id->is_null()) {
    rec.id = parse_id(*id, "id", line);
  }

  bool regex = false;
  if (auto kind = obj.find("answer_kind"); kind != obj.end() && !kind->is_null()) {
    if (!kind->is_string()) throw ParseError(where + ": answer_kind must be a string", line);
    const auto& k = kind->get_ref<const std::string&>();
    if (k == "regex") {
      regex = true;
    } else if (k != "literal") {
      throw ParseError(where + ": unknown answer_kind \"" + k + "\"", line);
    }
  }

  auto answers = obj.find("answers");
  if (answers != obj.end() && !answers->is_null() && !answers->is_array()) {
    throw ParseError(where + ": answers must be an array", line);
  }
  if (answers != obj.end() && answers->is_array()) {
    for (const auto& a : *answers) {
      if (!a.is_string()) throw ParseError(where + ": answers must be strings", line);
      try {
        rec.answers.push_back(regex ? AnswerPattern::regex(a.get<std::string>())
                                    : AnswerPattern::literal(a.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        warn(warnings, where + ": question dropped, " + e.what());
        return std::nullopt;
      }
    }
  }
  if (rec.answers.empty()) {
    warn(warnings, where + ": question dropped, no answers");
    return std::nullopt;
  }

  rec.positives = parse_contexts(obj, "positive_ctxs", line);
  rec.hard_negatives = parse_contexts(obj, "hard_negative_ctxs", line);
  return rec;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

std::vector<QuestionRecord> parse_dataset(std::string_view text, DatasetFormat format,
                                          std::vector<std::string>* warnings) {
  std::vector<QuestionRecord> out;
  if (format == DatasetFormat::jsonl) {
    std::size_t line_no = 0;
    std::size_t ordinal = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
      }
      if (auto rec = parse_record(obj, ordinal++, line_no, warnings)) {
        out.push_back(std::move(*rec));
      }
    }
    return out;
  }

  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!doc.is_array()) throw ParseError("line 1: dpr-json file must hold a JSON array", 1);
  std::size_t ordinal = 0;
  for (const auto& obj : doc) {
    if (auto rec = parse_record(obj, ordinal++, 0, warnings)) out.push_back(std::move(*rec));
  }
  return out;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<QuestionRecord> ingest_dataset(const std::filesystem::path& path, DatasetFormat format,
                                           std::vector<std::string>* warnings) {
  const std::string text = slurp(path);
  try {
    return parse_dataset(text, format, warnings);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string to_jsonl(std::span<const QuestionRecord> records) {
  std::string out;
  auto contexts = [](const std::vector<Passage>& ps) {
    json arr = json::array();
    for (const auto& p : ps) {
      arr.push_back({{"passage_id", p.id}, {"title", p.title}, {"text", p.body}});
    }
    return arr;
  };
  for (const auto& r : records) {
    json obj;
    obj["id"] = r.id;
    obj["question"] = r.question;
    json answers = json::array();
    bool regex = false;
    for (const auto& a : r.answers) {
      answers.push_back(a.pattern());
      regex = regex || a.kind() == AnswerPattern::Kind::regex;
    }
    obj["answers"] = std::move(answers);
    obj["answer_kind"] = regex ? "regex" : "literal";
    obj["positive_ctxs"] = contexts(r.positives);
    obj["hard_negative_ctxs"] = contexts(r.hard_negatives);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<Passage> chunk_documents(std::span<const Document> docs, std::size_t words_per_passage,
                                     std::uint64_t first_id) {
  if (words_per_passage == 0) throw std::invalid_argument("words_per_passage must be >= 1");
  std::vector<Passage> out;
  std::uint64_t next_id = first_id;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  for (const auto& doc : docs) {
    std::string window;
    std::size_t words = 0;
    const std::string_view body = doc.body;
    std::size_t i = 0;
    while (i < body.size()) {
      while (i < body.size() && is_space(body[i])) ++i;
      if (i >= body.size()) break;
      std::size_t j = i;
      while (j < body.size() && !is_space(body[j])) ++j;
      if (words > 0) window.push_back(' ');
      window.append(body.substr(i, j - i));
      i = j;
      if (++words == words_per_passage) {
        out.push_back({next_id++, doc.title, std::move(window)});
        window.clear();
        words = 0;
      }
    }
    if (words > 0) out.push_back({next_id++, doc.title, std::move(window)});
  }
  return out;
}

std::optional<TrainingPair> select_training_pairs(const QuestionRecord& record,
                                                  std::size_t max_positives) {
  if (max_positives == 0) throw std::invalid_argument("max_positives must be >= 1");
  if (record.positives.empty() || record.hard_negatives.empty()) return std::nullopt;
  TrainingPair pair;
  pair.question_id = record.id;
  pair.question = record.question;
  const std::size_t n = std::min(record.positives.size(), max_positives);
  pair.positives.assign(record.positives.begin(), record.positives.begin() + static_cast<std::ptrdiff_t>(n));
  pair.hard_negative = record.hard_negatives.front();
  return pair;
}

DatasetStats compute_stats(std::span<const QuestionRecord> records, std::size_t max_positives) {
  if (max_positives < 1 || max_positives > 3) {
    throw std::invalid_argument("compute_stats supports max_positives in [1, 3]");
  }
  DatasetStats s;
  for (const auto& r : records) {
    auto pair = select_training_pairs(r, max_positives);
    if (!pair) continue;
    switch (pair->positives.size()) {
      case 1: ++s.p1; break;
      case 2: ++s.p2; break;
      default: ++s.p3; break;
    }
    ++s.total;
  }
  if (s.total > 0) {
    s.delta = static_cast<double>(s.p3) / static_cast<double>(s.total);
    s.delta_defined = true;
  }
  return s;
}

namespace {

std::string unquote_tsv(std::string_view field) {
  if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
    std::string out;
    field = field.substr(1, field.size() - 2);
    for (std::size_t i = 0; i < field.size(); ++i) {
      out.push_back(field[i]);
      if (field[i] == '"' && i + 1 < field.size() && field[i + 1] == '"') ++i;
    }
    return out;
  }
  return std::string(field);
}

std::string sanitize_tsv(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return out;
}

}  // namespace

std::vector<Passage> parse_corpus(std::string_view text) {
  std::vector<Passage> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": expected id<TAB>text<TAB>title", line_no);
    }
    std::string_view id = line.substr(0, t1);
    if (line_no == 1 && id == "id") continue;
    Passage p;
    auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), p.id);
    if (ec != std::errc() || ptr != id.data() + id.size()) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": bad passage id", line_no);
    }
    p.body = unquote_tsv(line.substr(t1 + 1, t2 - t1 - 1));
    p.title = unquote_tsv(line.substr(t2 + 1));
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Passage> read_corpus(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  try {
    return parse_corpus(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_corpus(const std::filesystem::path& path, std::span<const Passage> passages) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "id\ttext\ttitle\n";
  for (const auto& p : passages) {
    out << p.id << '\t' << sanitize_tsv(p.body) << '\t' << sanitize_tsv(p.title) << '\n';
  }
}

}  // namespace mpr
