#include "mpr/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mpr {

std::array<std::vector<double>*, 6> EncoderParams::buffers() {
  return {&question.embedding, &question.projection, &question.bias,
          &passage.embedding,  &passage.projection,  &passage.bias};
}

std::array<const std::vector<double>*, 6> EncoderParams::buffers() const {
  return {&question.embedding, &question.projection, &question.bias,
          &passage.embedding,  &passage.projection,  &passage.bias};
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  for (auto* buf : z.buffers()) std::fill(buf->begin(), buf->end(), 0.0);
  return z;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* buf : buffers()) n += buf->size();
  return n;
}

namespace {

bool is_term_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

}  // namespace

std::vector<std::string> split_terms(std::string_view text) {
  std::vector<std::string> terms;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_term_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      terms.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) terms.push_back(std::move(cur));
  return terms;
}

TokenIds tokenize(std::string_view text, std::uint32_t buckets) {
  if (buckets == 0) throw std::invalid_argument("bucket count must be >= 1");
  TokenIds ids;
  for (const auto& term : split_terms(text)) {
    ids.push_back(static_cast<std::uint32_t>(fnv1a64(term) % buckets));
  }
  return ids;
}

EncoderParams init_params(std::uint64_t seed, std::uint32_t vocab, std::uint32_t embed_dim,
                          std::uint32_t out_dim) {
  if (vocab == 0 || embed_dim == 0 || out_dim == 0) {
    throw std::invalid_argument("encoder dimensions must be >= 1");
  }
  EncoderParams p;
  p.seed = seed;
  p.vocab = vocab;
  p.embed_dim = embed_dim;
  p.out_dim = out_dim;
  Rng rng(seed);
  const double s = std::sqrt(6.0 / static_cast<double>(embed_dim + out_dim));
  for (Tower t : {Tower::question, Tower::passage}) {
    auto& tw = p.tower(t);
    tw.embedding.resize(static_cast<std::size_t>(vocab) * embed_dim);
    for (auto& v : tw.embedding) v = round_to_float(rng.uniform(-0.05, 0.05));
    tw.projection.resize(static_cast<std::size_t>(embed_dim) * out_dim);
    for (auto& v : tw.projection) v = round_to_float(rng.uniform(-s, s));
    tw.bias.assign(out_dim, 0.0);
  }
  return p;
}

Vector encode(const EncoderParams& params, Tower tower, std::span<const std::uint32_t> ids,
              double dropout_rate, Rng* rng, EncodeTrace* trace) {
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  if (dropout_rate > 0.0 && rng == nullptr) {
    throw std::invalid_argument("dropout requires a generator");
  }
  const auto& tw = params.tower(tower);
  const std::size_t de = params.embed_dim;
  const std::size_t d = params.out_dim;

  Vector pooled(de, 0.0);
  for (std::uint32_t id : ids) {
    if (id >= params.vocab) throw std::logic_error("token id out of range");
    const double* row = tw.embedding.data() + static_cast<std::size_t>(id) * de;
    for (std::size_t e = 0; e < de; ++e) pooled[e] += row[e];
  }
  if (!ids.empty()) {
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (auto& v : pooled) v *= inv;
  }

  Vector scale;
  if (dropout_rate > 0.0) {
    scale.resize(de);
    const double keep = 1.0 / (1.0 - dropout_rate);
    for (std::size_t e = 0; e < de; ++e) {
      scale[e] = rng->bernoulli(dropout_rate) ? 0.0 : keep;
      pooled[e] *= scale[e];
    }
  }

  Vector out(tw.bias.begin(), tw.bias.end());
  for (std::size_t e = 0; e < de; ++e) {
    const double h = pooled[e];
    if (h == 0.0) continue;
    const double* w = tw.projection.data() + e * d;
    for (std::size_t k = 0; k < d; ++k) out[k] += h * w[k];
  }

  if (trace) {
    trace->pooled = std::move(pooled);
    trace->dropout_scale = std::move(scale);
  }
  return out;
}

void backprop_encode(const EncoderParams& params, Tower tower, std::span<const std::uint32_t> ids,
                     const EncodeTrace& trace, std::span<const double> d_output,
                     EncoderParams& grad) {
  const auto& tw = params.tower(tower);
  auto& gw = grad.tower(tower);
  const std::size_t de = params.embed_dim;
  const std::size_t d = params.out_dim;

  for (std::size_t k = 0; k < d; ++k) gw.bias[k] += d_output[k];

  Vector d_pooled(de, 0.0);
  for (std::size_t e = 0; e < de; ++e) {
    const double h = trace.pooled[e];
    const double* w = tw.projection.data() + e * d;
    double* gp = gw.projection.data() + e * d;
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      gp[k] += h * d_output[k];
      acc += w[k] * d_output[k];
    }
    d_pooled[e] = acc;
  }
  if (ids.empty()) return;

  const double inv = 1.0 / static_cast<double>(ids.size());
  for (std::size_t e = 0; e < de; ++e) {
    d_pooled[e] *= inv;
    if (!trace.dropout_scale.empty()) d_pooled[e] *= trace.dropout_scale[e];
  }
  for (std::uint32_t id : ids) {
    double* row = gw.embedding.data() + static_cast<std::size_t>(id) * de;
    for (std::size_t e = 0; e < de; ++e) row[e] += d_pooled[e];
  }
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  binary::write_magic(out, "MPRT");
  binary::write_u32(out, kCheckpointVersion);
  binary::write_u64(out, params.seed);
  binary::write_u32(out, params.vocab);
  binary::write_u32(out, params.embed_dim);
  binary::write_u32(out, params.out_dim);
  for (const auto* buf : params.buffers()) {
    for (double v : *buf) binary::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

EncoderParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::string what = "checkpoint " + path.string();
  binary::expect_magic(in, "MPRT", what);
  const std::uint32_t version = binary::read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
  EncoderParams p;
  try {
    p.seed = binary::read_u64(in);
    p.vocab = binary::read_u32(in);
    p.embed_dim = binary::read_u32(in);
    p.out_dim = binary::read_u32(in);
    if (p.vocab == 0 || p.embed_dim == 0 || p.out_dim == 0) {
      throw FormatError("zero dimension in header");
    }
    const std::size_t sizes[3] = {static_cast<std::size_t>(p.vocab) * p.embed_dim,
                                  static_cast<std::size_t>(p.embed_dim) * p.out_dim, p.out_dim};
    std::size_t i = 0;
    for (auto* buf : p.buffers()) {
      buf->resize(sizes[i++ % 3]);
      for (auto& v : *buf) {
        v = binary::read_f32(in);
        if (!std::isfinite(v)) throw FormatError("non-finite parameter");
      }
    }
  } catch (const FormatError& e) {
    throw FormatError(what + ": " + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(what + ": trailing bytes after parameters");
  }
  return p;
}

}  // namespace mpr
