#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "obcsim/catalog.hpp"
#include "obcsim/faults.hpp"
#include "obcsim/ladder.hpp"
#include "obcsim/mapper.hpp"
#include "obcsim/rng.hpp"
#include "obcsim/tile.hpp"
#include "obcsim/trace.hpp"
#include "obcsim/types.hpp"

namespace obcsim {

/// What the supervisor can reach on the platform: tiles through the debug
/// bridge, the reconfiguration port, its random source, and the trace.
class SupervisorPort {
 public:
  virtual ~SupervisorPort() = default;

  virtual Tile& tile(TileId id) = 0;
  virtual std::uint32_t tile_count() const = 0;
  virtual Tick now() const = 0;
  virtual CheckpointSeq completed_seq() const = 0;
  /// Queues a command on the ordered, reliable debug-bridge channel.
  virtual void send(TileId tile, TileCommand command) = 0;
  /// Starts a reconfiguration attempt; completion is reported back through
  /// Supervisor::on_reconfiguration_done.
  virtual void reconfigure(TileId tile, const LadderStep& step) = 0;
  virtual Rng& rng() = 0;
  /// No replica with valid state is left to resynchronize from.
  virtual void thread_state_lost(ThreadId thread) = 0;
  virtual void trace(TraceRecord record) = 0;
};

struct SupervisorState {
  std::vector<std::uint32_t> fault_counters;  // authoritative; tiles mirror it
  std::set<TileId> spare_pool;
  std::set<TileId> active;  // tiles the mapping may use
  std::map<TileId, RecoveryLadder> recovering;
  std::set<TileId> defunct;
  std::set<TileId> gated;           // clock-gated by the mapper or operator
  std::set<TileId> operator_gated;  // kept out of mappings until ungated
  bool stage3_active = false;
};

/// Off-chip FDIR supervisor: fault counters, watchdog, state updates, spare
/// activation, the recovery ladder, and degraded remapping.
class Supervisor {
 public:
  Supervisor(const SystemConfig& config, const ThreadCatalog& catalog, SupervisorPort& port,
             ObjectiveWeights weights);

  /// Installs the boot-time mapping and spare pool.
  void initialize(const mapping::ThreadMapping& mapping, const std::set<TileId>& spares);

  const SupervisorState& state() const { return state_; }
  const mapping::ThreadMapping& mapping() const { return mapping_; }
  const ObjectiveWeights& weights() const { return weights_; }
  std::uint32_t required(ThreadId thread) const;
  bool below_required() const;

  /// Reacts to one checkpoint's decisions (clean ones are used for source
  /// selection only). Each dissenting or missing tile is counted once.
  void handle_disagreement(std::span<const MajorityDecision> decisions);

  /// Clears suspicion on tiles that reported cleanly this round.
  void observe_round(std::span<const TileId> reporters, std::span<const MajorityDecision> decisions);

  /// Tiles silent for longer than the watchdog timeout; each is handled as
  /// a missing reporter.
  std::vector<TileId> watchdog_check(Tick now);

  std::size_t scrub_tick(MemorySubsystem& memory, Tick now);

  /// Moves the faulty tile's assignment to the lowest-id usable spare and
  /// sends the faulty tile down the recovery ladder. Without a spare, the
  /// faulty tile's replicas are dropped and Stage 3 remaps.
  void replace_with_spare(TileId faulty);

  void on_reconfiguration_done(TileId tile);

  // Operator commands.
  void set_weights(const ObjectiveWeights& weights);
  void set_thread_replication(ThreadId thread, std::uint32_t replication);
  bool gate_tile(TileId tile);
  bool ungate_tile(TileId tile);

 private:
  struct Flag {
    bool missing = false;
    std::set<ThreadId> dissent;
  };

  std::vector<ThreadSpec> effective_threads() const;
  std::vector<TileId> usable_tiles() const;
  bool usable(TileId tile) const;
  std::optional<TileId> source_for(ThreadId thread, const std::set<TileId>& excluded) const;
  void count_fault(TileId tile, std::string_view reason);
  void recover_in_place(TileId tile, const Flag& flag, const std::map<ThreadId, TileId>& sources);
  void resync(TileId tile, ThreadId thread, std::optional<TileId> source);
  void apply_mapping(const mapping::ThreadMapping& next, const std::set<TileId>& excluded,
                     std::string_view reason);
  void rebalance(std::string_view reason, bool force = false);
  void remap(std::string_view reason);
  void update_stage3();
  void start_ladder(TileId tile);
  void emit(std::string kind, std::optional<TileId> tile, Fields fields,
            TraceLevel level = TraceLevel::Summary);

  const SystemConfig* config_;
  const ThreadCatalog* catalog_;
  SupervisorPort* port_;
  ObjectiveWeights weights_;
  SupervisorState state_;
  mapping::ThreadMapping mapping_;
  std::map<ThreadId, std::uint32_t> required_;
  std::map<ThreadId, TileId> last_good_;
  std::map<TileId, CheckpointSeq> flagged_at_;
};

}  // namespace obcsim
