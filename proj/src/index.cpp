#include "mpr/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

namespace mpr {

DenseIndex::DenseIndex(std::uint32_t dim, std::vector<std::uint64_t> ids, std::vector<float> vectors)
    : dim_(dim), ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (vectors_.size() != ids_.size() * static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("DenseIndex: vector buffer does not match count x dim");
  }
  for (float v : vectors_) {
    if (!std::isfinite(v)) throw std::invalid_argument("DenseIndex: non-finite vector entry");
  }
  row_of_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!row_of_.emplace(ids_[i], i).second) {
      throw std::invalid_argument("DenseIndex: duplicate passage id " + std::to_string(ids_[i]));
    }
  }
}

std::optional<std::size_t> DenseIndex::find(std::uint64_t id) const {
  auto it = row_of_.find(id);
  if (it == row_of_.end()) return std::nullopt;
  return it->second;
}

double DenseIndex::score(std::size_t i, std::span<const double> query) const {
  const float* r = vectors_.data() + i * dim_;
  double acc = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) acc += static_cast<double>(r[k]) * query[k];
  return acc;
}

DenseIndex encode_corpus(const EncoderParams& params, std::span<const Passage> passages,
                         std::size_t shard_size) {
  if (shard_size == 0) throw std::invalid_argument("shard_size must be >= 1");
  const std::size_t d = params.out_dim;
  std::vector<std::uint64_t> ids(passages.size());
  std::vector<float> vectors(passages.size() * d);
  const std::size_t shards = (passages.size() + shard_size - 1) / shard_size;
  parallel_for(shards, [&](std::size_t first, std::size_t last) {
    for (std::size_t s = first; s < last; ++s) {
      const std::size_t end = std::min(passages.size(), (s + 1) * shard_size);
      for (std::size_t i = s * shard_size; i < end; ++i) {
        const TokenIds tok = tokenize(passage_text(passages[i]), params.vocab);
        const Vector v = encode(params, Tower::passage, tok);
        ids[i] = passages[i].id;
        for (std::size_t k = 0; k < d; ++k) vectors[i * d + k] = static_cast<float>(v[k]);
      }
    }
  });
  return DenseIndex(params.out_dim, std::move(ids), std::move(vectors));
}

Vector encode_question(const EncoderParams& params, std::string_view question) {
  return encode(params, Tower::question, tokenize(question, params.vocab));
}

SearchResult search_top_k(const DenseIndex& index, std::span<const double> query, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  SearchResult out;
  if (index.size() == 0) return out;
  if (query.size() != index.dim()) throw std::invalid_argument("query dimension mismatch");

  // Min-heap on ranking order: top() is the weakest of the kept hits.
  auto weaker = [](const ScoredPassage& a, const ScoredPassage& b) { return ranks_before(a, b); };
  std::priority_queue<ScoredPassage, std::vector<ScoredPassage>, decltype(weaker)> heap(weaker);
  const auto& ids = index.ids();
  for (std::size_t i = 0; i < index.size(); ++i) {
    ScoredPassage hit{ids[i], index.score(i, query)};
    if (heap.size() < k) {
      heap.push(hit);
    } else if (ranks_before(hit, heap.top())) {
      heap.pop();
      heap.push(hit);
    }
  }
  out.ranked.resize(heap.size());
  for (std::size_t i = out.ranked.size(); i-- > 0;) {
    out.ranked[i] = heap.top();
    heap.pop();
  }
  return out;
}

void save_index(const std::filesystem::path& path, const DenseIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binary::write_magic(out, "MPIX");
  binary::write_u32(out, kIndexVersion);
  binary::write_u32(out, index.dim());
  binary::write_u64(out, index.size());
  for (std::uint64_t id : index.ids()) binary::write_u64(out, id);
  for (float v : index.vectors()) binary::write_f32(out, v);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DenseIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open index " + path.string());
  const std::string what = "index " + path.string();
  binary::expect_magic(in, "MPIX", what);
  const std::uint32_t version = binary::read_u32(in);
  if (version != kIndexVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
  try {
    const std::uint32_t dim = binary::read_u32(in);
    const std::uint64_t count = binary::read_u64(in);
    std::vector<std::uint64_t> ids(count);
    for (auto& id : ids) id = binary::read_u64(in);
    std::vector<float> vectors(count * dim);
    for (auto& v : vectors) v = binary::read_f32(in);
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes");
    return DenseIndex(dim, std::move(ids), std::move(vectors));
  } catch (const FormatError& e) {
    throw FormatError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace mpr
