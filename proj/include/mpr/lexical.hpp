#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpr/data_model.hpp"
#include "mpr/encoder.hpp"
#include "mpr/index.hpp"

namespace mpr {

struct Posting {
  std::uint32_t doc = 0;  // ordinal into LexicalIndex::doc_ids
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

/// Okapi BM25 inverted index. Documents are stored in ascending passage-id
/// order, so every postings list is sorted by passage id.
struct LexicalIndex {
  double k1 = 0.9;
  double b = 0.4;
  std::vector<std::uint64_t> doc_ids;
  std::vector<std::uint32_t> doc_lengths;
  double avg_len = 0.0;
  std::map<std::string, std::vector<Posting>, std::less<>> postings;

  std::size_t size() const { return doc_ids.size(); }
  std::size_t df(std::string_view term) const;

  bool operator==(const LexicalIndex&) const = default;
};

/// Terms come from split_terms (the dense tokenizer before hashing).
/// Throws std::invalid_argument on an empty corpus or duplicate ids.
LexicalIndex build_lexical_index(std::span<const Passage> passages, double k1 = 0.9, double b = 0.4);

/// ln(1 + (N - df + 0.5) / (df + 0.5))
double bm25_idf(std::size_t num_docs, std::size_t df);

/// BM25 score of every document matching at least one query term, indexed
/// by document ordinal (0 for non-matching documents). Repeated query terms
/// contribute once per occurrence.
std::vector<double> bm25_scores(const LexicalIndex& index, std::string_view query);

/// Top-k documents with a positive match; empty when no query term is
/// indexed. Throws std::invalid_argument for k == 0.
SearchResult bm25_top_k(const LexicalIndex& index, std::string_view query, std::size_t k);

inline constexpr double kDefaultHybridLambda = 1.1;

/// Candidates are the union of the dense and BM25 top-2k lists; each is
/// rescored as dense_sim + lambda * bm25 and the best k returned.
SearchResult hybrid_top_k(const LexicalIndex& lex, const DenseIndex& dense,
                          const EncoderParams& params, std::string_view query, std::size_t k,
                          double lambda = kDefaultHybridLambda);

/// Same, with a precomputed question vector.
SearchResult hybrid_top_k(const LexicalIndex& lex, const DenseIndex& dense,
                          std::span<const double> query_vec, std::string_view query, std::size_t k,
                          double lambda = kDefaultHybridLambda);

/// "MPLX", u32 version, f64 k1, f64 b, u64 N, (u64 id, u32 length) per
/// document, u64 term count, then per term: string, u32 count,
/// (u32 doc, u32 tf) pairs.
void save_lexical_index(const std::filesystem::path& path, const LexicalIndex& index);
LexicalIndex load_lexical_index(const std::filesystem::path& path);

inline constexpr std::uint32_t kLexicalVersion = 1;

}  // namespace mpr
