#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "mpr/data_model.hpp"
#include "mpr/encoder.hpp"

namespace mpr {

struct ScoredPassage {
  std::uint64_t id = 0;
  double score = 0.0;

  bool operator==(const ScoredPassage&) const = default;
};

/// Ranked hits, score descending, ties by ascending id.
struct SearchResult {
  std::vector<ScoredPassage> ranked;

  bool operator==(const SearchResult&) const = default;
};

/// Ranking order used by every retriever: higher score first, then lower id.
inline bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

/// Flat inner-product index over passage-tower vectors.
class DenseIndex {
 public:
  DenseIndex() = default;
  /// Throws std::invalid_argument on duplicate ids, non-finite values or a
  /// size mismatch.
  DenseIndex(std::uint32_t dim, std::vector<std::uint64_t> ids, std::vector<float> vectors);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::uint64_t>& ids() const { return ids_; }
  const std::vector<float>& vectors() const { return vectors_; }
  std::span<const float> row(std::size_t i) const {
    return {vectors_.data() + i * dim_, dim_};
  }
  /// Row of a passage id, or nullopt.
  std::optional<std::size_t> find(std::uint64_t id) const;

  /// Inner product of `query` with row i, accumulated in double.
  double score(std::size_t i, std::span<const double> query) const;

  bool operator==(const DenseIndex& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ && vectors_ == o.vectors_;
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<float> vectors_;
  std::unordered_map<std::uint64_t, std::size_t> row_of_;
};

/// Encodes every passage with the passage tower (no dropout), `shard_size`
/// passages per work unit. Order is preserved and the output does not
/// depend on shard_size or the worker count.
DenseIndex encode_corpus(const EncoderParams& params, std::span<const Passage> passages,
                         std::size_t shard_size = 1024);

/// Question-tower vector of a question, no dropout.
Vector encode_question(const EncoderParams& params, std::string_view question);

/// Exact top-k by inner product. Empty index gives an empty result.
/// Throws std::invalid_argument for k == 0 or a dimension mismatch.
SearchResult search_top_k(const DenseIndex& index, std::span<const double> query, std::size_t k);

/// "MPIX", u32 version, u32 dim, u64 count, ids (u64), vectors (f32),
/// little-endian, row-major.
void save_index(const std::filesystem::path& path, const DenseIndex& index);
DenseIndex load_index(const std::filesystem::path& path);

inline constexpr std::uint32_t kIndexVersion = 1;

}  // namespace mpr
