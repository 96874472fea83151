#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpr {

using Vector = std::vector<double>;

/// Malformed input file. `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid or inconsistent configuration (unknown format tag, bad flag mix,
/// not enough data to train).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough usable training data for the requested configuration.
class InsufficientDataError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Binary artifact with a wrong magic, unsupported version or truncated body.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so the mapping from raw
/// mt19937_64 output to numbers is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Worker count from MPR_THREADS (default: hardware concurrency, at least 1).
std::size_t worker_count();

/// Runs fn(begin, end) over contiguous chunks of [0, n) on up to
/// worker_count() threads. Callers must write only to per-index slots so
/// that results do not depend on the partitioning.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

/// Rounds to the nearest binary32 value (storage precision of artifacts).
inline double round_to_float(double x) { return static_cast<double>(static_cast<float>(x)); }

namespace binary {

void write_magic(std::ostream& out, std::string_view magic);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);

/// Throws FormatError naming `what` if the magic does not match.
void expect_magic(std::istream& in, std::string_view magic, std::string_view what);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);

}  // namespace binary

}  // namespace mpr
