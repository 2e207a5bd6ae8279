#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "obcsim/faults.hpp"
#include "obcsim/ladder.hpp"

using namespace obcsim;

TEST(RecoveryLadder, WalksVariantsThenFullThenDefunct) {
  RecoveryLadder ladder(1, 3);
  EXPECT_EQ(ladder.current(), (LadderStep{LadderStepKind::PartialReconfiguration, 1}));
  EXPECT_EQ(ladder.advance(false), (LadderStep{LadderStepKind::PartialReconfiguration, 2}));
  EXPECT_EQ(ladder.advance(false), (LadderStep{LadderStepKind::PartialReconfiguration, 0}));
  EXPECT_EQ(ladder.advance(false), (LadderStep{LadderStepKind::FullReconfiguration, 1}));
  EXPECT_EQ(ladder.advance(false).kind, LadderStepKind::Defunct);
  EXPECT_TRUE(ladder.finished());
  EXPECT_EQ(ladder.partial_attempts(), 3u);
  EXPECT_EQ(ladder.full_attempts(), 1u);
}

TEST(RecoveryLadder, StopsAtFirstPass) {
  RecoveryLadder ladder(0, 3);
  ladder.advance(false);
  EXPECT_EQ(ladder.advance(true), (LadderStep{LadderStepKind::Recovered, 1}));
  EXPECT_EQ(ladder.partial_attempts(), 2u);
  EXPECT_EQ(ladder.full_attempts(), 0u);
}

class Stage2 : public ::testing::Test {
 protected:
  Stage2() : scenario_(test::nominal_scenario()), catalog_(scenario_.threads) {
    scenario_.system.variants = {{0, 1, 2}, {3, 4, 5}, {2, 6, 7}};
  }

  Tile make_tile(std::initializer_list<RegionId> defects) {
    Tile tile(0, scenario_.system, catalog_, make_variants(scenario_.system, 0));
    const std::vector<ThreadId> held{0, 1};
    tile.boot(held, 0, 0);
    MemorySubsystem memory;
    for (auto r : defects) {
      auto e = test::fault(0, 0, FaultKind::PermanentRegionFault, 0, std::nullopt, Persistence::Permanent);
      e.target.region = r;
      FaultInjector::inject(e, tile, memory);
    }
    return tile;
  }

  Scenario scenario_;
  ThreadCatalog catalog_;
};

TEST_F(Stage2, RecoversOnSecondVariant) {
  auto tile = make_tile({1});
  Rng rng(1);
  const auto out = stage2_ladder(tile, rng, 1.0);
  EXPECT_TRUE(out.recovered);
  EXPECT_EQ(out.variant, 1u);
  EXPECT_EQ(out.partial_attempts, 2u);
  EXPECT_EQ(tile.health(), TileHealth::Healthy);
  EXPECT_TRUE(tile.is_spare());
  EXPECT_TRUE(tile.replicas().empty());
}

TEST_F(Stage2, SharedRegionDefectIsDefunct) {
  auto tile = make_tile({2, 4});
  Rng rng(1);
  const auto out = stage2_ladder(tile, rng, 1.0);
  EXPECT_FALSE(out.recovered);
  EXPECT_EQ(out.partial_attempts, 3u);
  EXPECT_EQ(out.full_attempts, 1u);
  EXPECT_EQ(tile.health(), TileHealth::Defunct);
}

TEST_F(Stage2, TransientOnlyRecoversImmediately) {
  auto tile = make_tile({});
  Rng rng(1);
  const auto out = stage2_ladder(tile, rng, 1.0);
  EXPECT_TRUE(out.recovered);
  EXPECT_EQ(out.partial_attempts, 1u);
  EXPECT_EQ(out.steps.front().variant, 0u);
}

TEST_F(Stage2, UnreliableSelfTestCanMissDefects) {
  auto tile = make_tile({0});
  Rng rng(1);
  const auto out = stage2_ladder(tile, rng, 0.0);
  EXPECT_TRUE(out.recovered);
  EXPECT_EQ(out.variant, 0u);
}
