#include <doctest.h>

#include "sutrack/bits.hpp"
#include "sutrack/rng.hpp"

using namespace sutrack;

TEST_CASE("bitvec uint round trip is big-endian") {
  const BitVec b = BitVec::from_uint(0b1011, 4);
  CHECK(b.size() == 4);
  CHECK(b.bit(0) == 1);
  CHECK(b.bit(1) == 0);
  CHECK(b.bit(2) == 1);
  CHECK(b.bit(3) == 1);
  CHECK(b.to_uint() == 0b1011);
  CHECK_THROWS_AS(BitVec::from_uint(16, 4), std::invalid_argument);
}

TEST_CASE("bitvec append and slice") {
  BitVec b = BitVec::from_uint(0b101, 3);
  b.append(BitVec::from_uint(0b0110, 4));
  CHECK(b.size() == 7);
  CHECK(b.slice(0, 3).to_uint() == 0b101);
  CHECK(b.slice(3, 4).to_uint() == 0b0110);
  CHECK_THROWS_AS(static_cast<void>(b.slice(4, 4)), std::out_of_range);
}

TEST_CASE("split_chunks partitions evenly and reassembles") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int total = 1 + static_cast<int>(rng.next_u64() % 64);
    const int chunks = 1 + static_cast<int>(rng.next_u64() % 8);
    BitVec all;
    for (int i = 0; i < total; ++i) all.append(BitVec::from_uint(rng.next_u64() & 1, 1));

    const auto parts = split_chunks(all, chunks);
    REQUIRE(parts.size() == static_cast<std::size_t>(chunks));
    BitVec joined;
    std::size_t min_len = all.size(), max_len = 0;
    for (const auto& part : parts) {
      joined.append(part);
      min_len = std::min(min_len, part.size());
      max_len = std::max(max_len, part.size());
    }
    CHECK(joined == all);
    CHECK(max_len - min_len <= 1);
    if (total % chunks == 0) CHECK(max_len == min_len);
  }
}

TEST_CASE("seed derivation is order-sensitive and stable") {
  const auto a = SeedHasher().add(std::uint64_t{1}).add("x").finish();
  const auto b = SeedHasher().add(std::uint64_t{1}).add("x").finish();
  const auto c = SeedHasher().add("x").add(std::uint64_t{1}).finish();
  CHECK(a == b);
  CHECK(a != c);
  CHECK(SeedHasher().add("ab").add("c").finish() != SeedHasher().add("a").add("bc").finish());
}
