#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "obcsim/catalog.hpp"
#include "obcsim/rng.hpp"
#include "obcsim/types.hpp"

namespace obcsim {

class Tile;
class Simulation;
class FaultInjector;

/// Grants write access to a tile's state memory. Only the owning tile's
/// runtime and the supervisor side (debug bridge) can mint one.
class StateMemoryWriteKey {
  friend class Tile;
  friend class Simulation;
  StateMemoryWriteKey() = default;
};

/// Dual-ported state memory of one tile: the owner writes, everyone else
/// reads through the const interface.
class StateMemoryImage {
 public:
  StateMemoryImage(TileId owner, std::size_t ring_size) : owner_(owner), ring_size_(ring_size) {}

  TileId owner() const { return owner_; }
  const std::deque<CheckpointReport>& reports() const { return reports_; }
  const CheckpointReport* report_for(CheckpointSeq seq) const;
  const CheckpointReport* latest() const { return reports_.empty() ? nullptr : &reports_.back(); }
  const std::vector<ThreadId>& assignment() const { return assignment_; }
  const std::map<ThreadId, MajorityDecision>& vote_cache() const { return votes_; }

  void publish(CheckpointReport report, StateMemoryWriteKey);
  void set_assignment(std::vector<ThreadId> threads, StateMemoryWriteKey) { assignment_ = std::move(threads); }
  void cache_vote(const MajorityDecision& decision, StateMemoryWriteKey) { votes_[decision.thread] = decision; }

 private:
  TileId owner_;
  std::size_t ring_size_;
  std::deque<CheckpointReport> reports_;
  std::vector<ThreadId> assignment_;
  std::map<ThreadId, MajorityDecision> votes_;
};

struct Replica {
  ThreadId thread = 0;
  ThreadState state;
  CheckpointSeq seq = 0;  // last checkpoint this state reflects
  bool operator==(const Replica&) const = default;
};

struct InduceStateUpdate {
  ThreadId thread = 0;
  TileId source = 0;
};
struct AdjustMapping {
  std::vector<ThreadId> threads;
};
struct Reboot {};
struct Disconnect {};
struct Reconnect {};
struct RunSelfTest {};
struct TriggerCheckpoint {};

/// Supervisor-to-tile command, delivered over the debug bridge.
using TileCommand = std::variant<InduceStateUpdate, AdjustMapping, Reboot, Disconnect, Reconnect,
                                 RunSelfTest, TriggerCheckpoint>;
std::string_view command_name(const TileCommand& command);

enum class CommandStatus { Applied, Deferred, Rejected, Ignored };

struct SelfTestResult {
  bool pass = true;
  RegionMask detected = 0;
};

/// Ground-truth fault effects currently active on a tile. Only fault
/// injection writes these; the tile runtime reacts to them.
struct TileFaultEffects {
  bool hung = false;
  bool hang_permanent = false;
  bool babbling = false;
  bool babbling_permanent = false;
  std::optional<std::pair<std::optional<ThreadId>, Checksum>> checksum_corruption_once;
  std::optional<std::pair<std::optional<ThreadId>, Checksum>> checksum_corruption_permanent;
  struct StuckBit {
    ThreadId thread;
    std::uint32_t word;
    std::uint32_t bit;
  };
  std::vector<StuckBit> stuck_bits;
  RegionMask defective_regions = 0;

  /// Clears everything reconfiguration repairs; fabric defects stay.
  void clear_repairable() {
    const auto defective = defective_regions;
    *this = TileFaultEffects{};
    defective_regions = defective;
  }
};

/// One compartment of the MPSoC: runs its thread replicas between
/// checkpoints, publishes checksums, and services supervisor commands.
class Tile {
 public:
  Tile(TileId id, const SystemConfig& config, const ThreadCatalog& catalog,
       std::vector<ConfigurationVariant> variants);

  TileId id() const { return id_; }
  TileHealth health() const { return health_; }
  bool is_spare() const { return spare_; }
  std::uint32_t fault_counter() const { return fault_counter_; }
  VariantId active_variant() const { return active_variant_; }
  const ConfigurationVariant& variant(VariantId v) const { return variants_.at(v); }
  std::span<const ConfigurationVariant> variants() const { return variants_; }
  bool clock_enabled() const { return clock_enabled_; }
  bool connected() const { return connected_; }
  const std::vector<Replica>& replicas() const { return replicas_; }
  const StateMemoryImage& state_memory() const { return memory_; }
  RegionMask defective_regions() const { return effects_.defective_regions; }
  const TileFaultEffects& effects() const { return effects_; }
  CheckpointSeq last_seq() const { return last_seq_; }
  Tick last_report_time() const { return last_report_time_; }
  bool hung() const { return effects_.hung; }
  bool babbling() const { return effects_.babbling; }
  bool holds(ThreadId thread) const { return find(thread) != nullptr; }
  const ThreadState* replica_state(ThreadId thread) const;
  std::vector<ThreadId> assigned_threads() const;
  std::uint32_t assigned_load() const;

  /// True when the tile takes part in the checkpoint schedule.
  bool running() const {
    return clock_enabled_ && (health_ == TileHealth::Healthy || health_ == TileHealth::Suspected);
  }

  /// Cold boot: runs the init callback of every assigned thread in ascending
  /// id order and resets the fault counter. The next checkpoint is
  /// `completed_seq + 1`. Returns false (no state change) on a Defunct tile.
  bool boot(std::span<const ThreadId> assignment, CheckpointSeq completed_seq, Tick now);

  /// Brings every replica up to checkpoint `seq`, applying its behavior once
  /// per missing interval. A hung tile makes no progress.
  void execute_interval(CheckpointSeq seq);

  /// Computes checksums and publishes the report to state memory. Returns
  /// nothing when the tile is hung.
  std::optional<CheckpointReport> run_checkpoint(CheckpointSeq seq, Tick emit_time);

  /// Serialized replica state for resynchronizing a sibling.
  /// Throws std::out_of_range when the thread is not assigned here.
  StateBlob expose_state(ThreadId thread) const;

  /// Installs a sibling's exposed state. Deferred while reconfiguring,
  /// rejected for unassigned threads, malformed blobs, or Defunct tiles.
  CommandStatus apply_state_update(ThreadId thread, const StateBlob& blob);

  SelfTestResult run_self_test(Rng& rng, double detection_probability) const;

  /// Applies a self-contained command (everything except state updates,
  /// which need the source tile and go through apply_state_update).
  CommandStatus handle(const TileCommand& command, CheckpointSeq completed_seq, Tick now);

  // Supervisor-side control, modeling the debug bridge and ICAP paths.
  void set_fault_counter(std::uint32_t value) { fault_counter_ = value; }
  void set_spare(bool spare) { spare_ = spare; }
  void set_health(TileHealth health) { health_ = health; }
  void set_clock_enabled(bool enabled) { clock_enabled_ = enabled; }
  void set_connected(bool connected) { connected_ = connected; }
  void begin_reconfiguration(VariantId variant);
  /// Restarts watchdog timing after a global stall.
  void restart_watchdog(Tick now) { last_report_time_ = now; }
  void mark_defunct();
  /// Stores a vote result in this tile's state memory.
  void cache_vote(const MajorityDecision& decision) { memory_.cache_vote(decision, StateMemoryWriteKey{}); }
  void flip_bit(ThreadId thread, std::uint32_t word, std::uint32_t bit);

 private:
  friend class FaultInjector;

  Replica* find(ThreadId thread);
  const Replica* find(ThreadId thread) const;
  void reboot(CheckpointSeq completed_seq, Tick now);
  void set_assignment(std::span<const ThreadId> threads);
  void flush_deferred();

  TileId id_;
  const SystemConfig* config_;
  const ThreadCatalog* catalog_;
  std::vector<ConfigurationVariant> variants_;

  TileHealth health_ = TileHealth::Healthy;
  bool spare_ = false;
  std::uint32_t fault_counter_ = 0;
  VariantId active_variant_ = 0;
  bool clock_enabled_ = true;
  bool connected_ = true;
  std::vector<Replica> replicas_;  // ascending thread id
  StateMemoryImage memory_;
  TileFaultEffects effects_;
  CheckpointSeq last_seq_ = 0;
  Tick last_report_time_ = 0;
  std::vector<std::pair<ThreadId, StateBlob>> deferred_updates_;
};

/// Decodes an exposed-state blob; nullopt when it does not match the spec.
std::optional<std::pair<CheckpointSeq, ThreadState>> decode_blob(const ThreadSpec& spec,
                                                                  const StateBlob& blob);

}  // namespace obcsim
