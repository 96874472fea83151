#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpr/common.hpp"

namespace mpr {

enum class Tower { question, passage };

/// One tower of the reference encoder: hashed bag of embeddings, mean
/// pooled, then an affine projection.
struct TowerParams {
  std::vector<double> embedding;   // vocab x embed_dim, row-major
  std::vector<double> projection;  // embed_dim x out_dim, row-major
  std::vector<double> bias;        // out_dim

  bool operator==(const TowerParams&) const = default;
};

struct EncoderParams {
  std::uint64_t seed = 0;
  std::uint32_t vocab = 0;
  std::uint32_t embed_dim = 0;
  std::uint32_t out_dim = 0;
  TowerParams question;
  TowerParams passage;

  const TowerParams& tower(Tower t) const { return t == Tower::question ? question : passage; }
  TowerParams& tower(Tower t) { return t == Tower::question ? question : passage; }

  /// All six parameter buffers in checkpoint order.
  std::array<std::vector<double>*, 6> buffers();
  std::array<const std::vector<double>*, 6> buffers() const;

  /// Same shape, every entry zero. Used as a gradient accumulator.
  EncoderParams zeros_like() const;

  std::size_t parameter_count() const;

  bool operator==(const EncoderParams&) const = default;
};

using TokenIds = std::vector<std::uint32_t>;

/// Lowercased alphanumeric runs of `text`. Bytes >= 0x80 count as
/// alphanumeric so UTF-8 words stay intact. Shared with the BM25 index.
std::vector<std::string> split_terms(std::string_view text);

/// FNV-1a 64 of each term modulo `buckets`. Throws std::invalid_argument if
/// buckets is 0.
TokenIds tokenize(std::string_view text, std::uint32_t buckets);

/// Embeddings ~ U(-0.05, 0.05), projection ~ U(-s, s) with
/// s = sqrt(6 / (embed_dim + out_dim)), bias zero. Values are rounded to
/// binary32 so that a checkpoint round trip is exact.
EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab, std::uint32_t embed_dim,
                          std::uint32_t out_dim);

/// Forward intermediates kept for backpropagation.
struct EncodeTrace {
  Vector pooled;  // after dropout
  Vector dropout_scale;  // per-dimension multiplier applied to the mean; empty when no dropout
};

/// Encodes one token list. With dropout_rate > 0 a single inverted-dropout
/// mask is drawn from `rng` for the pooled vector; rng is required then.
Vector encode(const EncoderParams& params, Tower tower, std::span<const std::uint32_t> ids,
              double dropout_rate = 0.0, Rng* rng = nullptr, EncodeTrace* trace = nullptr);

/// Adds d(loss)/d(params of `tower`) to `grad` given d(loss)/d(output).
void backprop_encode(const EncoderParams& params, Tower tower, std::span<const std::uint32_t> ids,
                     const EncodeTrace& trace, std::span<const double> d_output,
                     EncoderParams& grad);

/// Checkpoint: "MPRT", u32 version, u64 seed, u32 vocab/embed_dim/out_dim,
/// then question tower and passage tower (embedding, projection, bias) as
/// little-endian binary32, row-major.
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace mpr
