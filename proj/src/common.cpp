#include "mpr/common.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>

namespace mpr {

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MPR_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) {
      n = static_cast<std::size_t>(v);
    }
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace binary {

namespace {

template <typename U>
void write_le(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U read_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw FormatError("unexpected end of file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(buf[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw FormatError(std::string(what) + ": bad magic, expected \"" + std::string(magic) + "\"");
  }
}

std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
float read_f32(std::istream& in) { return std::bit_cast<float>(read_le<std::uint32_t>(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) {
    throw FormatError("unexpected end of file");
  }
  return s;
}

}  // namespace binary

}  // namespace mpr
