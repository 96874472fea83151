#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "mpr/common.hpp"

using namespace mpr;

TEST(Rng, ReproducibleDraws) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  // First raw outputs of mt19937_64 seeded with 5489.
  Rng ref(5489);
  EXPECT_EQ(ref.next(), 14514284786278117030ULL);
}

TEST(Rng, Ranges) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
  std::vector<int> v{1, 2, 3, 4, 5, 6};
  r.shuffle(v);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6}));
}

TEST(ParallelFor, CoversRangeOnce) {
  for (const char* threads : {"1", "3", "8"}) {
    setenv("MPR_THREADS", threads, 1);
    std::vector<std::atomic<int>> seen(1000);
    parallel_for(seen.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) seen[i]++;
    });
    for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  }
  unsetenv("MPR_THREADS");
  parallel_for(0, [](std::size_t, std::size_t) { FAIL(); });
}

TEST(ParallelFor, PropagatesExceptions) {
  setenv("MPR_THREADS", "4", 1);
  EXPECT_THROW(parallel_for(100, [](std::size_t b, std::size_t) {
                 if (b > 0) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  unsetenv("MPR_THREADS");
}

TEST(Binary, LittleEndianRoundTrip) {
  std::stringstream ss;
  binary::write_magic(ss, "ABCD");
  binary::write_u32(ss, 0x01020304u);
  binary::write_u64(ss, 0x1122334455667788ULL);
  binary::write_f32(ss, 1.5f);
  binary::write_f64(ss, -2.25);
  binary::write_string(ss, "term");
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "ABCD");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x04);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 0x88);
  binary::expect_magic(ss, "ABCD", "test");
  EXPECT_EQ(binary::read_u32(ss), 0x01020304u);
  EXPECT_EQ(binary::read_u64(ss), 0x1122334455667788ULL);
  EXPECT_EQ(binary::read_f32(ss), 1.5f);
  EXPECT_EQ(binary::read_f64(ss), -2.25);
  EXPECT_EQ(binary::read_string(ss), "term");
  EXPECT_THROW(binary::read_u32(ss), FormatError);
  std::stringstream bad("XXXX");
  EXPECT_THROW(binary::expect_magic(bad, "ABCD", "test"), FormatError);
}
