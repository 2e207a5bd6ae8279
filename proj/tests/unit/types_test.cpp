#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "obcsim/catalog.hpp"
#include "obcsim/crc.hpp"
#include "obcsim/tile.hpp"

using namespace obcsim;

TEST(Behavior, CounterAddsStep) {
  Behavior b{BehaviorKind::Counter, 5};
  ThreadState s{{10, 7}};
  EXPECT_EQ(b.apply(s, 1).words, (std::vector<std::uint32_t>{15, 7}));
}

TEST(Behavior, MixDependsOnSeqAndIsDeterministic) {
  Behavior b{BehaviorKind::Mix, 3};
  ThreadState s{{1, 2, 3, 4}};
  EXPECT_EQ(b.apply(s, 4), b.apply(s, 4));
  EXPECT_NE(b.apply(s, 4), b.apply(s, 5));
  EXPECT_NE(b.apply(s, 4), s);
}

TEST(ThreadSpec, InitPadsWithZeros) {
  auto t = test::make_thread(0, 0, 3, 1, BehaviorKind::Mix, 2);
  t.state_words = 5;
  EXPECT_EQ(t.init().words, (std::vector<std::uint32_t>{0x100, 0x101, 0, 0, 0}));
}

TEST(ThreadSpec, ChecksumIsCrcOfCanonicalLittleEndianBytes) {
  const auto t = test::make_thread(7, 0, 3, 1, BehaviorKind::Counter, 2);
  const ThreadState s{{0x04030201u, 0xAABBCCDDu}};
  const std::vector<std::uint8_t> expected{7, 0, 0, 0, 2, 0, 0, 0, 1, 2, 3, 4, 0xDD, 0xCC, 0xBB, 0xAA};
  EXPECT_EQ(canonical_bytes(7, s), expected);
  EXPECT_EQ(t.checksum(s), crc32(expected));
}

TEST(ThreadSpec, FixedChecksumOverridesState) {
  auto t = test::make_thread(1, 0, 3, 1);
  t.fixed_checksum = 0xDEADBEEF;
  EXPECT_EQ(t.checksum(t.init()), 0xDEADBEEFu);
  EXPECT_FALSE(t.resyncable());
}

TEST(ThreadSpec, ExposedBlobRoundTrips) {
  const auto t = test::make_thread(3, 1, 2, 1, BehaviorKind::Mix, 6);
  const auto state = t.behavior.apply(t.init(), 9);
  const auto decoded = decode_blob(t, t.expose(state, 9));
  ASSERT_TRUE(decoded);
  EXPECT_EQ(decoded->first, 9u);
  EXPECT_EQ(decoded->second, state);
}

TEST(ThreadSpec, MalformedBlobsAreRejected) {
  const auto t = test::make_thread(3, 1, 2, 1, BehaviorKind::Mix, 6);
  auto blob = t.expose(t.init(), 1);
  EXPECT_FALSE(decode_blob(t, StateBlob(blob.begin(), blob.end() - 1)));
  auto wrong_thread = blob;
  wrong_thread[0] ^= 1;
  EXPECT_FALSE(decode_blob(t, wrong_thread));
  EXPECT_FALSE(decode_blob(t, {}));
}

TEST(ObjectiveWeights, NormalizeToOne) {
  ObjectiveWeights w(2, 1, 1);
  EXPECT_DOUBLE_EQ(w.performance(), 0.5);
  EXPECT_DOUBLE_EQ(w.performance() + w.energy() + w.robustness(), 1.0);
}

TEST(RegionMask, RoundTrip) {
  EXPECT_EQ(regions_of(region_bit(0) | region_bit(5) | region_bit(63)), (std::vector<RegionId>{0, 5, 63}));
}

TEST(Variants, ExplicitSetsWin) {
  SystemConfig c;
  c.variants = {{0, 1}, {2, 3}, {4}};
  const auto v = make_variants(c, 0);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1].regions, region_bit(2) | region_bit(3));
}

TEST(Variants, SeededVariantsAreDistinctAndSized) {
  SystemConfig c;
  c.region_count = 10;
  c.variant_count = 3;
  c.variant_region_fraction = 0.6;
  for (TileId tile = 0; tile < 4; ++tile) {
    const auto v = make_variants(c, tile);
    ASSERT_EQ(v.size(), 3u);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_EQ(std::popcount(v[i].regions), 6);
      EXPECT_LT(v[i].regions, RegionMask{1} << 10);
      for (std::size_t j = 0; j < i; ++j) EXPECT_NE(v[i].regions, v[j].regions);
    }
    EXPECT_EQ(v, make_variants(c, tile));
  }
}

TEST(Catalog, SortedLookup) {
  ThreadCatalog c({test::make_thread(5, 0, 1, 1), test::make_thread(2, 0, 1, 1)});
  EXPECT_EQ(c.all().front().id, 2u);
  EXPECT_NE(c.find(5), nullptr);
  EXPECT_EQ(c.find(4), nullptr);
  EXPECT_THROW(c.at(4), std::out_of_range);
}
