#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "obcsim/engine.hpp"

using namespace obcsim;
using test::fault;
using test::of_kind;

namespace {

RunResult run_with(Scenario s, std::vector<FaultEvent> events) {
  s.faults.events = std::move(events);
  return run(s, {TraceLevel::Verbose});
}

std::vector<std::int64_t> counter_values(const std::vector<TraceRecord>& trace, TileId tile) {
  std::vector<std::int64_t> out;
  for (const auto& r : of_kind(trace, "counter")) {
    if (r.tile == tile) out.push_back(*r.int_field("value"));
  }
  return out;
}

}  // namespace

TEST(Supervisor, TransientDissentIncrementsCounterAndResyncs) {
  const auto r = run_with(test::nominal_scenario(8), {fault(0, 2500, FaultKind::TransientStateFlip, 1, 0)});
  EXPECT_EQ(counter_values(r.trace, 1), std::vector<std::int64_t>{1});
  const auto updates = of_kind(r.trace, "state_update");
  ASSERT_EQ(updates.size(), 1u);
  EXPECT_EQ(updates[0].tile, 1u);
  EXPECT_EQ(updates[0].string_field("status"), "applied");
  EXPECT_TRUE(of_kind(r.trace, "replace").empty());
}

TEST(Supervisor, PersistentDissentReplacesAtThreshold) {
  auto s = test::nominal_scenario(25);
  auto e = fault(0, 2500, FaultKind::TransientStateFlip, 0, 2, Persistence::Permanent);
  const auto r = run_with(s, {e});
  const auto values = counter_values(r.trace, 0);
  ASSERT_GE(values.size(), 4u);
  EXPECT_EQ(std::vector<std::int64_t>(values.begin(), values.begin() + 4), (std::vector<std::int64_t>{1, 2, 3, 0}));
  const auto replaced = of_kind(r.trace, "replace");
  ASSERT_EQ(replaced.size(), 1u);
  EXPECT_EQ(replaced[0].tile, 0u);
  const auto spare = of_kind(r.trace, "spare_activated");
  ASSERT_EQ(spare.size(), 1u);
  EXPECT_EQ(spare[0].tile, 3u);
  // Reconfiguration clears stuck state bits: the tile comes back as a spare.
  const auto result = of_kind(r.trace, "ladder_result");
  ASSERT_EQ(result.size(), 1u);
  EXPECT_EQ(result[0].string_field("result"), "recovered");
  EXPECT_EQ(r.metrics.counters.at("conservation_violations"), 0u);
}

TEST(Supervisor, HangIsRebootedAsMissingReporter) {
  const auto r = run_with(test::nominal_scenario(8), {fault(0, 2500, FaultKind::Hang, 2)});
  ASSERT_EQ(of_kind(r.trace, "reboot").size(), 1u);
  EXPECT_EQ(of_kind(r.trace, "counter").at(0).string_field("reason"), "missing");
  EXPECT_EQ(of_kind(r.trace, "state_update").size(), 3u);
  EXPECT_EQ(r.metrics.faults.at(0).outcome, FaultOutcome::Masked);
}

TEST(Supervisor, PermanentHangIsReplacedAfterThreshold) {
  const auto r = run_with(test::nominal_scenario(12),
                          {fault(0, 2500, FaultKind::Hang, 1, std::nullopt, Persistence::Permanent)});
  EXPECT_EQ(counter_values(r.trace, 1).at(2), 3);
  ASSERT_EQ(of_kind(r.trace, "replace").size(), 1u);
  EXPECT_EQ(r.metrics.faults.at(0).outcome, FaultOutcome::Recovered);
}

TEST(Supervisor, WatchdogCatchesSilentSpare) {
  auto s = test::nominal_scenario(10);
  const auto r = run_with(s, {fault(0, 2500, FaultKind::Hang, 3)});
  const auto dog = of_kind(r.trace, "watchdog");
  ASSERT_FALSE(dog.empty());
  EXPECT_EQ(dog[0].tile, 3u);
  EXPECT_GT(dog[0].time, 2500 + s.system.watchdog_timeout - s.system.checkpoint_interval);
}

TEST(Supervisor, UndecidablePairUsesSelfTestSurvivor) {
  auto s = test::nominal_scenario(8);
  s.threads[1].required_replication = 2;
  const auto r = run_with(s, {fault(0, 2500, FaultKind::TransientStateFlip, 1, 1)});
  const auto decisions = of_kind(r.trace, "decision");
  const auto undecidable = std::count_if(decisions.begin(), decisions.end(), [](const TraceRecord& d) {
    return std::get<bool>(*d.field("undecidable"));
  });
  EXPECT_EQ(undecidable, 1);
  const auto survivor = of_kind(r.trace, "survivor");
  ASSERT_EQ(survivor.size(), 1u);
  EXPECT_EQ(survivor[0].tile, 0u);  // both pass self-test; lowest id wins the tie
  EXPECT_EQ(counter_values(r.trace, 1), std::vector<std::int64_t>{1});
}

TEST(Supervisor, BabblingTileIsDisconnectedAndLatencyRecovers) {
  auto s = test::nominal_scenario(20);
  const auto r = run_with(s, {fault(0, 2500, FaultKind::BabblingTile, 2, std::nullopt, Persistence::Permanent)});
  const auto replaced = of_kind(r.trace, "replace");
  ASSERT_EQ(replaced.size(), 1u);
  EXPECT_EQ(replaced[0].tile, 2u);
  std::int64_t during = 0, after = 0;
  for (const auto& rep : of_kind(r.trace, "report")) {
    if (rep.tile == 2u) continue;
    const auto latency = *rep.int_field("latency");
    if (rep.time > 2500 && rep.time < replaced[0].time) during = std::max(during, latency);
    if (rep.time > replaced[0].time + s.system.checkpoint_interval) after = std::max(after, latency);
  }
  EXPECT_EQ(during, s.system.babble_latency);
  EXPECT_EQ(after, 0);
}

TEST(Supervisor, DefunctTileNeverReassigned) {
  auto s = test::nominal_scenario(120);
  s.system.variants = {{0, 1}, {2, 3}, {4, 5}};
  std::vector<FaultEvent> events;
  for (RegionId region : {0u, 2u, 4u}) {
    auto e = fault(region, 2500, FaultKind::PermanentRegionFault, 1, std::nullopt, Persistence::Permanent);
    e.target.region = region;
    events.push_back(e);
  }
  const auto r = run_with(s, events);
  const auto result = of_kind(r.trace, "ladder_result");
  ASSERT_EQ(result.size(), 1u);
  EXPECT_EQ(result[0].string_field("result"), "defunct");
  EXPECT_EQ(*result[0].int_field("partial_attempts"), 3);
  EXPECT_EQ(*result[0].int_field("full_attempts"), 1);
  for (const auto& m : of_kind(r.trace, "mapping")) {
    if (m.time < result[0].time) continue;
    for (const auto& f : m.fields) {
      if (f.key.rfind("thread_", 0) == 0) {
        const auto& tiles = std::get<std::vector<std::uint64_t>>(f.value);
        EXPECT_EQ(std::count(tiles.begin(), tiles.end(), 1u), 0);
      }
    }
  }
  EXPECT_EQ(r.metrics.counters.at("defunct_tiles"), 1u);
}

TEST(Supervisor, SetThreadReplicationRemaps) {
  auto s = test::nominal_scenario(6);
  s.commands.push_back({2500, OperatorCommandKind::SetThreadReplication, {}, 2, 1, 0});
  const auto r = run(s, {TraceLevel::Normal});
  const auto mappings = of_kind(r.trace, "mapping");
  ASSERT_EQ(mappings.size(), 2u);
  EXPECT_EQ(mappings[1].time, 2500);
  EXPECT_EQ(mappings[1].list_field("thread_2").size(), 1u);
  EXPECT_EQ(r.metrics.availability.at(2).fraction(), 1.0);
}

TEST(Supervisor, OperatorCannotGateMappedTile) {
  auto s = test::nominal_scenario(4);
  s.commands.push_back({1500, OperatorCommandKind::GateTile, {}, 0, 1, 0});
  s.commands.push_back({1600, OperatorCommandKind::GateTile, {}, 0, 1, 3});
  s.commands.push_back({2600, OperatorCommandKind::UngateTile, {}, 0, 1, 3});
  const auto r = run(s, {TraceLevel::Normal});
  const auto ops = of_kind(r.trace, "operator");
  ASSERT_EQ(ops.size(), 3u);
  EXPECT_FALSE(std::get<bool>(*ops[0].field("accepted")));
  EXPECT_TRUE(std::get<bool>(*ops[1].field("accepted")));
  EXPECT_TRUE(std::get<bool>(*ops[2].field("accepted")));
  EXPECT_TRUE(of_kind(r.trace, "watchdog").empty());
}
