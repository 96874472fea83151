#include "mpr/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace mpr {

std::size_t LexicalIndex::df(std::string_view term) const {
  auto it = postings.find(term);
  return it == postings.end() ? 0 : it->second.size();
}

LexicalIndex build_lexical_index(std::span<const Passage> passages, double k1, double b) {
  if (passages.empty()) throw std::invalid_argument("build_lexical_index: empty corpus");
  std::vector<std::size_t> order(passages.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return passages[x].id < passages[y].id; });

  LexicalIndex idx;
  idx.k1 = k1;
  idx.b = b;
  idx.doc_ids.reserve(passages.size());
  idx.doc_lengths.reserve(passages.size());
  double total_len = 0.0;
  for (std::size_t ord = 0; ord < order.size(); ++ord) {
    const Passage& p = passages[order[ord]];
    if (!idx.doc_ids.empty() && idx.doc_ids.back() == p.id) {
      throw std::invalid_argument("build_lexical_index: duplicate passage id " + std::to_string(p.id));
    }
    const auto terms = split_terms(passage_text(p));
    std::map<std::string_view, std::uint32_t> tf;
    for (const auto& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) {
      auto it = idx.postings.find(term);
      if (it == idx.postings.end()) it = idx.postings.emplace(std::string(term), std::vector<Posting>{}).first;
      it->second.push_back({static_cast<std::uint32_t>(ord), count});
    }
    idx.doc_ids.push_back(p.id);
    idx.doc_lengths.push_back(static_cast<std::uint32_t>(terms.size()));
    total_len += static_cast<double>(terms.size());
  }
  idx.avg_len = total_len / static_cast<double>(passages.size());
  return idx;
}

double bm25_idf(std::size_t num_docs, std::size_t df) {
  const double n = static_cast<double>(num_docs);
  const double f = static_cast<double>(df);
  return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

std::vector<double> bm25_scores(const LexicalIndex& index, std::string_view query) {
  std::vector<double> scores(index.size(), 0.0);
  const double avg = index.avg_len > 0.0 ? index.avg_len : 1.0;
  for (const auto& term : split_terms(query)) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    const double idf = bm25_idf(index.size(), it->second.size());
    for (const Posting& p : it->second) {
      const double tf = p.tf;
      const double norm = 1.0 - index.b + index.b * index.doc_lengths[p.doc] / avg;
      scores[p.doc] += idf * tf * (index.k1 + 1.0) / (tf + index.k1 * norm);
    }
  }
  return scores;
}

namespace {

std::vector<bool> matched_docs(const LexicalIndex& index, std::string_view query) {
  std::vector<bool> hit(index.size(), false);
  for (const auto& term : split_terms(query)) {
    auto it = index.postings.find(term);
    if (it == index.postings.end()) continue;
    for (const Posting& p : it->second) hit[p.doc] = true;
  }
  return hit;
}

SearchResult take_top(std::vector<ScoredPassage> hits, std::size_t k) {
  const std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), ranks_before);
  hits.resize(n);
  return SearchResult{std::move(hits)};
}

}  // namespace

SearchResult bm25_top_k(const LexicalIndex& index, std::string_view query, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const auto scores = bm25_scores(index, query);
  const auto hit = matched_docs(index, query);
  std::vector<ScoredPassage> hits;
  for (std::size_t d = 0; d < scores.size(); ++d) {
    if (hit[d]) hits.push_back({index.doc_ids[d], scores[d]});
  }
  return take_top(std::move(hits), k);
}

SearchResult hybrid_top_k(const LexicalIndex& lex, const DenseIndex& dense,
                          std::span<const double> query_vec, std::string_view query, std::size_t k,
                          double lambda) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  const SearchResult dense_hits = search_top_k(dense, query_vec, 2 * k);
  const SearchResult lex_hits = bm25_top_k(lex, query, 2 * k);

  std::set<std::uint64_t> pool;
  for (const auto& h : dense_hits.ranked) pool.insert(h.id);
  for (const auto& h : lex_hits.ranked) pool.insert(h.id);

  const auto scores = bm25_scores(lex, query);
  std::unordered_map<std::uint64_t, double> lexical;
  lexical.reserve(lex.size());
  for (std::size_t d = 0; d < lex.size(); ++d) {
    if (scores[d] != 0.0) lexical.emplace(lex.doc_ids[d], scores[d]);
  }

  std::vector<ScoredPassage> hits;
  hits.reserve(pool.size());
  for (std::uint64_t id : pool) {
    const auto row = dense.find(id);
    const double dense_score = row ? dense.score(*row, query_vec) : 0.0;
    auto it = lexical.find(id);
    const double bm25 = it == lexical.end() ? 0.0 : it->second;
    hits.push_back({id, dense_score + lambda * bm25});
  }
  return take_top(std::move(hits), k);
}

SearchResult hybrid_top_k(const LexicalIndex& lex, const DenseIndex& dense,
                          const EncoderParams& params, std::string_view query, std::size_t k,
                          double lambda) {
  const Vector q = encode_question(params, query);
  return hybrid_top_k(lex, dense, q, query, k, lambda);
}

void save_lexical_index(const std::filesystem::path& path, const LexicalIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binary::write_magic(out, "MPLX");
  binary::write_u32(out, kLexicalVersion);
  binary::write_f64(out, index.k1);
  binary::write_f64(out, index.b);
  binary::write_u64(out, index.size());
  for (std::size_t d = 0; d < index.size(); ++d) {
    binary::write_u64(out, index.doc_ids[d]);
    binary::write_u32(out, index.doc_lengths[d]);
  }
  binary::write_u64(out, index.postings.size());
  for (const auto& [term, list] : index.postings) {
    binary::write_string(out, term);
    binary::write_u32(out, static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      binary::write_u32(out, p.doc);
      binary::write_u32(out, p.tf);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LexicalIndex load_lexical_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open lexical index " + path.string());
  const std::string what = "lexical index " + path.string();
  binary::expect_magic(in, "MPLX", what);
  const std::uint32_t version = binary::read_u32(in);
  if (version != kLexicalVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
  try {
    LexicalIndex idx;
    idx.k1 = binary::read_f64(in);
    idx.b = binary::read_f64(in);
    const std::uint64_t n = binary::read_u64(in);
    double total = 0.0;
    for (std::uint64_t d = 0; d < n; ++d) {
      idx.doc_ids.push_back(binary::read_u64(in));
      idx.doc_lengths.push_back(binary::read_u32(in));
      total += idx.doc_lengths.back();
    }
    idx.avg_len = n > 0 ? total / static_cast<double>(n) : 0.0;
    const std::uint64_t terms = binary::read_u64(in);
    for (std::uint64_t t = 0; t < terms; ++t) {
      std::string term = binary::read_string(in);
      const std::uint32_t count = binary::read_u32(in);
      std::vector<Posting> list;
      for (std::uint32_t i = 0; i < count; ++i) {
        Posting p;
        p.doc = binary::read_u32(in);
        p.tf = binary::read_u32(in);
        if (p.doc >= n) throw FormatError("posting refers to unknown document");
        list.push_back(p);
      }
      idx.postings.emplace(std::move(term), std::move(list));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes");
    return idx;
  } catch (const FormatError& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace mpr
