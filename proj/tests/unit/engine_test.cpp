#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "obcsim/engine.hpp"

using namespace obcsim;
using test::fault;
using test::of_kind;

TEST(Engine, SameSeedGivesIdenticalTraceAndMetrics) {
  auto s = test::nominal_scenario(20);
  FaultGenerator g;
  g.rate = 0.3;
  s.faults.generators.push_back(g);
  const auto a = run(s, {TraceLevel::Verbose});
  const auto b = run(s, {TraceLevel::Verbose});
  EXPECT_EQ(a.trace_text(), b.trace_text());
  EXPECT_EQ(render_metrics(a.metrics), render_metrics(b.metrics));
}

TEST(Engine, SeedOverrideChangesRandomFaults) {
  auto s = test::nominal_scenario(40);
  FaultGenerator g;
  g.rate = 0.5;
  s.faults.generators.push_back(g);
  const auto a = run(s, {TraceLevel::Summary, 1});
  const auto b = run(s, {TraceLevel::Summary, 2});
  EXPECT_NE(a.trace_text(), b.trace_text());
}

TEST(Engine, NominalRunAgreesWithGoldenModel) {
  Simulation sim(test::nominal_scenario(25));
  const auto result = sim.run();
  EXPECT_EQ(result.metrics.counters.at("checkpoints"), 25u);
  EXPECT_EQ(result.metrics.counters.at("decisions"), 75u);
  EXPECT_EQ(result.metrics.counters.at("disagreements"), 0u);
  for (const auto& d : of_kind(result.trace, "decision")) {
    const auto thread = static_cast<ThreadId>(*d.int_field("thread"));
    EXPECT_FALSE(std::get<bool>(*d.field("undecidable")));
    if (*d.int_field("seq") == 25) EXPECT_EQ(*d.int_field("agreed"), sim.golden_checksum(thread));
  }
  for (const auto& [thread, a] : result.metrics.availability) EXPECT_EQ(a.fraction(), 1.0) << thread;
  EXPECT_EQ(sim.conservation_violations(), 0u);
}

TEST(Engine, FourActiveTilesDrawNominalPower) {
  auto s = test::nominal_scenario(10);
  s.system.spare_count = 0;
  const auto m = run(s).metrics;
  EXPECT_NEAR(m.mean_power_watts, 1.92, 0.01);
  EXPECT_NEAR(m.energy_joules, 1.92 * m.duration_seconds, 1e-6);
}

TEST(Engine, GatingUnusedTileSavesEnergy) {
  auto s = test::nominal_scenario(10);
  const auto base = run(s).metrics;
  s.commands.push_back({0, OperatorCommandKind::GateTile, {}, 0, 1, 3});
  const auto gated = run(s).metrics;
  EXPECT_LT(gated.energy_joules, base.energy_joules);
  EXPECT_EQ(gated.counters.at("disagreements"), 0u);
}

TEST(Engine, ObjectiveWeightsCommandRemapsAtCommandTime) {
  auto s = test::nominal_scenario(6);
  s.threads[2].required_replication = 1;
  WeightSpec w;
  w.energy = 10.0;
  s.commands.push_back({3200, OperatorCommandKind::SetObjectiveWeights, w, 0, 1, 0});
  const auto r = run(s);
  const auto ops = of_kind(r.trace, "operator");
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(ops[0].time, 3200);
  for (const auto& m : of_kind(r.trace, "mapping")) {
    if (m.time == 3200) return;
  }
  FAIL() << "no mapping at command time";
}

TEST(Engine, PhaseShiftInsideWindowKeepsDecisions) {
  auto s = test::nominal_scenario(10);
  const auto base = run(s);
  s.system.phase_offsets = {0, 7, 13, 21};
  const auto shifted = run(s);
  const auto da = of_kind(base.trace, "decision");
  const auto db = of_kind(shifted.trace, "decision");
  ASSERT_EQ(da.size(), db.size());
  for (std::size_t i = 0; i < da.size(); ++i) {
    EXPECT_EQ(da[i].int_field("agreed"), db[i].int_field("agreed"));
    EXPECT_EQ(da[i].list_field("agreeing"), db[i].list_field("agreeing"));
  }
}

TEST(Engine, MaskedTransientMatchesTwinRun) {
  auto s = test::nominal_scenario(10);
  Simulation twin(s);
  twin.run();
  s.faults.events = {fault(0, 4400, FaultKind::TransientStateFlip, 2, 1)};
  Simulation faulty(s);
  const auto r = faulty.run();
  ASSERT_EQ(r.metrics.faults.size(), 1u);
  EXPECT_EQ(r.metrics.faults[0].outcome, FaultOutcome::Masked);
  EXPECT_EQ(r.metrics.faults[0].detection_latency, 1u);
  for (const auto& tile : faulty.tiles()) {
    for (const auto& replica : tile.replicas()) {
      EXPECT_EQ(s.threads[replica.thread].checksum(replica.state), twin.golden_checksum(replica.thread))
          << "tile " << tile.id();
    }
  }
}

TEST(Engine, RunUntilStopsAtRequestedTime) {
  Simulation sim(test::nominal_scenario(10));
  sim.run_until(3500);
  EXPECT_EQ(sim.completed_seq(), 3u);
  EXPECT_FALSE(sim.finished());
  sim.run_until(1'000'000);
  EXPECT_TRUE(sim.finished());
}

TEST(Engine, SilentCorruptionWithoutVotingIsReported) {
  auto s = test::nominal_scenario(6);
  s.threads[2].required_replication = 1;
  s.faults.events = {fault(0, 2500, FaultKind::TransientStateFlip, 0, 2)};
  const auto r = run(s);
  std::optional<TileId> host;
  for (const auto& m : of_kind(r.trace, "mapping")) host = m.list_field("thread_2").at(0);
  if (*host != 0) GTEST_SKIP() << "thread 2 mapped elsewhere";
  ASSERT_EQ(r.metrics.faults.size(), 1u);
  EXPECT_EQ(r.metrics.faults[0].outcome, FaultOutcome::Silent);
  EXPECT_FALSE(of_kind(r.trace, "unvoted").empty());
}

TEST(Engine, InvalidScenarioThrowsBeforeRunning) {
  auto s = test::nominal_scenario();
  s.threads[0].required_replication = 5;
  EXPECT_THROW(Simulation{s}, ScenarioError);
}

TEST(Engine, OperationsScenarioOutcomes) {
  const auto r = run(load_scenario(test::data_path("operations.json")));
  ASSERT_EQ(r.metrics.faults.size(), 4u);
  EXPECT_EQ(r.metrics.faults[0].outcome, FaultOutcome::Masked);
  EXPECT_EQ(r.metrics.faults[1].outcome, FaultOutcome::Masked);
  EXPECT_EQ(r.metrics.faults[1].detection_latency, 1u);
  // The hang takes the only replica of thread 2 down with it.
  EXPECT_EQ(r.metrics.faults[2].outcome, FaultOutcome::Unrecovered);
  EXPECT_FALSE(r.metrics.faults[2].recovery_latency.has_value());
  EXPECT_EQ(r.metrics.faults[3].outcome, FaultOutcome::Recovered);
  EXPECT_EQ(r.metrics.io.line_overflows, 1u);
  EXPECT_EQ(r.metrics.io.packet_conflicts, 1u);
  EXPECT_EQ(r.metrics.io.packets_expired, 2u);
  EXPECT_EQ(r.metrics.counters.at("sdc_decisions"), 0u);
  EXPECT_FALSE(r.metrics.critical_loss);
}
