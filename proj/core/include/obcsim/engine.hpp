#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "obcsim/catalog.hpp"
#include "obcsim/faults.hpp"
#include "obcsim/metrics.hpp"
#include "obcsim/rng.hpp"
#include "obcsim/scenario.hpp"
#include "obcsim/supervisor.hpp"
#include "obcsim/tile.hpp"
#include "obcsim/trace.hpp"
#include "obcsim/voting.hpp"

namespace obcsim {

struct RunOptions {
  TraceLevel level = TraceLevel::Normal;
  std::optional<std::uint64_t> seed;  // replaces system.rng_seed
};

struct RunResult {
  std::vector<TraceRecord> trace;
  RunMetrics metrics;

  /// Header line plus one JSON line per record.
  std::string trace_text() const;
};

enum class EventKind {
  Slot,
  CheckpointDue,
  VoteCollect,
  FaultOnset,
  SupervisorCommand,
  OperatorCommand,
  ScrubTick,
  WatchdogTick,
  ReconfigDone,
};

struct Event {
  Tick time = 0;
  std::uint64_t ordinal = 0;
  EventKind kind = EventKind::Slot;
  TileId tile = 0;
  CheckpointSeq seq = 0;
  std::size_t index = 0;  // fault, command, or queued supervisor command
};

/// Deterministic discrete-event simulation of one scenario.
class Simulation final : public SupervisorPort {
 public:
  /// Validates and boots the system. Throws ScenarioError on validation
  /// failures, before any event runs.
  explicit Simulation(Scenario scenario, RunOptions options = {});
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Dispatches every event with time <= `until`.
  void run_until(Tick until);
  RunResult run();
  bool finished() const { return queue_.empty() || queue_.top().time > end_time_; }

  const Scenario& scenario() const { return scenario_; }
  const ThreadCatalog& catalog() const { return catalog_; }
  std::span<const Tile> tiles() const { return tiles_; }
  const Supervisor& supervisor() const { return *supervisor_; }
  const std::vector<FaultEvent>& faults() const { return faults_; }
  const std::vector<TraceRecord>& trace_records() const { return trace_; }
  Checksum golden_checksum(ThreadId thread) const;
  RunMetrics metrics() const;
  std::uint64_t conservation_violations() const { return conservation_violations_; }

  // SupervisorPort
  Tile& tile(TileId id) override { return tiles_.at(id); }
  std::uint32_t tile_count() const override { return static_cast<std::uint32_t>(tiles_.size()); }
  Tick now() const override { return now_; }
  CheckpointSeq completed_seq() const override { return seq_; }
  void send(TileId tile, TileCommand command) override;
  void reconfigure(TileId tile, const LadderStep& step) override;
  Rng& rng() override { return rng_; }
  void thread_state_lost(ThreadId thread) override;
  void trace(TraceRecord record) override;

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.ordinal > b.ordinal;
    }
  };
  struct FaultRecord {
    bool applied = false;
    CheckpointSeq next_seq = 0;
    std::optional<CheckpointSeq> detected;
    std::optional<CheckpointSeq> recovered;
    bool silent = false;
    bool replaced = false;
    bool lost = false;
  };

  void schedule(Tick time, EventKind kind, TileId tile = 0, CheckpointSeq seq = 0, std::size_t index = 0);
  void dispatch(const Event& e);
  void on_slot(const Event& e);
  void start_round(bool forced);
  void on_checkpoint(TileId tile, CheckpointSeq seq);
  void on_vote(CheckpointSeq seq);
  void on_fault(std::size_t index);
  void on_supervisor_command(std::size_t index);
  void on_operator_command(std::size_t index);
  void on_watchdog();
  void attribute_detection(TileId tile, CheckpointSeq seq);
  void update_power();
  void check_conservation();
  void emit(std::string kind, std::optional<TileId> tile, Fields fields, TraceLevel level);
  Tick checkpoint_delay(const Tile& tile) const;

  Scenario scenario_;
  RunOptions options_;
  ThreadCatalog catalog_;
  std::vector<Tile> tiles_;
  std::optional<Supervisor> supervisor_;
  MemorySubsystem memory_;
  Rng rng_;
  std::vector<FaultEvent> faults_;
  std::vector<FaultRecord> records_;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_ordinal_ = 0;
  Tick now_ = 0;
  Tick end_time_ = 0;
  CheckpointSeq seq_ = 0;
  std::map<CheckpointSeq, Tick> round_start_;
  Tick last_round_ = 0;
  Tick stall_until_ = 0;
  bool stalled_ = false;

  std::map<std::size_t, std::pair<TileId, TileCommand>> in_flight_;
  std::size_t next_command_ = 0;

  std::map<ThreadId, ThreadState> golden_;
  std::vector<TraceRecord> trace_;

  // Metrics accumulators.
  std::map<ThreadId, ThreadAvailability> availability_;
  std::map<std::uint32_t, std::uint64_t> recovery_histogram_;
  std::map<std::string, std::uint64_t> counters_;
  double energy_joules_ = 0;
  double power_watts_ = 0;
  Tick power_since_ = 0;
  double latency_sum_ = 0;
  std::uint64_t latency_count_ = 0;
  IoVoterStats io_stats_;
  bool critical_loss_ = false;
  std::uint64_t conservation_violations_ = 0;
};

/// Runs a scenario to its end time.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

}  // namespace obcsim
